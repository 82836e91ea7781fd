//! Exterior algebra over C^{2n}: multi-indices, sparse forms, wedge products and
//! the top form `Omega_{2n} = w^0 ^ w^1 ^ ... ^ w^{2n-1}`.
//!
//! The scalar ring is a type parameter, so the same combinatorics serve exact
//! polynomial coefficients and floating-point grid samples.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest supported quaternionic dimension (2n basis vectors must fit a `u32` mask).
pub const MAX_N: usize = 16;

/// Commutative ring operations needed by [`Form`].
pub trait Scalar: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.negated())
    }

    fn from_sign(sign: i8) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_sign(sign: i8) -> Self {
        sign as f64
    }
}

impl Scalar for Complex<f64> {
    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_sign(sign: i8) -> Self {
        Complex::new(sign as f64, 0.0)
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_sign(sign: i8) -> Self {
        BigRational::from_integer(sign.into())
    }
}

impl Scalar for Complex<BigRational> {
    fn zero() -> Self {
        Complex::new(Zero::zero(), Zero::zero())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        Complex::new(-&self.re, -&self.im)
    }
    fn from_sign(sign: i8) -> Self {
        Complex::new(BigRational::from_integer(sign.into()), Zero::zero())
    }
}

/// Strictly increasing multi-index `I = (i_1 < ... < i_p)`, stored as a bit set.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(u32);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);

    /// Builds `I` from strictly increasing entries in `[0, 2n)`.
    pub fn new(indices: &[usize], n: usize) -> Result<Self> {
        let mut bits = 0u32;
        let mut prev: Option<usize> = None;
        for &i in indices {
            if i >= 2 * n {
                return Err(Error::domain(format!("index {i} outside [0, {})", 2 * n)));
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(Error::domain(format!("multi-index {indices:?} not strictly increasing")));
            }
            prev = Some(i);
            bits |= 1 << i;
        }
        Ok(MultiIndex(bits))
    }

    pub fn single(i: usize) -> Self {
        MultiIndex(1 << i)
    }

    /// The full index `(0, 1, ..., 2n-1)`.
    pub fn full(n: usize) -> Self {
        MultiIndex(((1u64 << (2 * n)) - 1) as u32)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits & (1 << i) != 0)
    }

    /// Sign of `w^I ^ w^J` relative to `w^{I u J}`; zero when the indices overlap.
    pub fn wedge_sign(self, other: MultiIndex) -> i8 {
        if self.0 & other.0 != 0 {
            return 0;
        }
        // Count pairs (i in self, j in other) with i > j.
        let mut inversions = 0u32;
        for j in other.indices() {
            inversions += (self.0 >> (j + 1)).count_ones();
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn union(self, other: MultiIndex) -> MultiIndex {
        MultiIndex(self.0 | other.0)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<usize> = self.indices().collect();
        write!(f, "w{v:?}")
    }
}

/// Sign of the permutation taking `seq` to `(0, 1, ..., len-1)`; zero on repeats.
pub fn permutation_sign(seq: &[usize]) -> Result<i8> {
    let len = seq.len();
    if let Some(&bad) = seq.iter().find(|&&i| i >= len) {
        return Err(Error::domain(format!("entry {bad} outside [0, {len})")));
    }
    let mut seen = vec![false; len];
    for &i in seq {
        if seen[i] {
            return Ok(0);
        }
        seen[i] = true;
    }
    // Parity from the cycle decomposition.
    let mut visited = vec![false; len];
    let mut transpositions = 0usize;
    for start in 0..len {
        if visited[start] {
            continue;
        }
        let mut j = start;
        let mut cycle_len = 0;
        while !visited[j] {
            visited[j] = true;
            j = seq[j];
            cycle_len += 1;
        }
        transpositions += cycle_len - 1;
    }
    Ok(if transpositions % 2 == 0 { 1 } else { -1 })
}

/// One nonzero term `(i_1 j_1 ... i_n j_n)` of the top-degree sign expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub sign: i8,
}

/// All pairings with nonzero permutation sign, i.e. the support of
/// `delta^{i_1 j_1 ... i_n j_n}_{0 1 ... (2n-1)}`. There are `(2n)!` of them.
pub fn top_pairings(n: usize) -> Vec<Pairing> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..2 * n).collect();
    permute(&mut perm, 0, &mut |p| {
        let sign = permutation_sign(p).expect("permutation of 0..2n");
        let pairs = p.chunks(2).map(|c| (c[0], c[1])).collect();
        out.push(Pairing { pairs, sign });
    });
    out
}

fn permute(v: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

/// Sparse element of `Lambda^p C^{2n}` with coefficients in `S`.
#[derive(Clone, PartialEq)]
pub struct Form<S: Scalar> {
    n: usize,
    degree: usize,
    coeffs: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> fmt::Debug for Form<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Form")
            .field("n", &self.n)
            .field("degree", &self.degree)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<S: Scalar> Form<S> {
    pub fn zero(n: usize, degree: usize) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::domain(format!("dimension n = {n} unsupported")));
        }
        if degree > 2 * n {
            return Err(Error::domain(format!("degree {degree} exceeds 2n = {}", 2 * n)));
        }
        Ok(Form { n, degree, coeffs: BTreeMap::new() })
    }

    /// The 0-form carrying `s`.
    pub fn scalar(n: usize, s: S) -> Result<Self> {
        let mut f = Self::zero(n, 0)?;
        f.add_term(MultiIndex::EMPTY, s)?;
        Ok(f)
    }

    /// The basis 1-form `w^i`.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        let mut f = Self::zero(n, 1)?;
        f.add_term(MultiIndex::new(&[i], n)?, S::from_sign(1))?;
        Ok(f)
    }

    /// `s * Omega_{2n}`.
    pub fn top(n: usize, s: S) -> Result<Self> {
        let mut f = Self::zero(n, 2 * n)?;
        f.add_term(MultiIndex::full(n), s)?;
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, index: MultiIndex) -> S {
        self.coeffs.get(&index).cloned().unwrap_or_else(S::zero)
    }

    /// Adds `s * w^I` in place; cancelled coefficients are removed.
    pub fn add_term(&mut self, index: MultiIndex, s: S) -> Result<()> {
        if index.degree() != self.degree {
            return Err(Error::domain(format!(
                "term {index:?} has degree {} but form has degree {}",
                index.degree(),
                self.degree
            )));
        }
        if index.bits() >> (2 * self.n) != 0 {
            return Err(Error::domain(format!("term {index:?} outside C^{}", 2 * self.n)));
        }
        if s.is_zero() {
            return Ok(());
        }
        match self.coeffs.get_mut(&index) {
            Some(c) => {
                let sum = c.plus(&s);
                if sum.is_zero() {
                    self.coeffs.remove(&index);
                } else {
                    *c = sum;
                }
            }
            None => {
                self.coeffs.insert(index, s);
            }
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::domain(format!("dimension mismatch: {} vs {}", self.n, other.n)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::domain(format!(
                "cannot add forms of degrees {} and {}",
                self.degree, other.degree
            )));
        }
        let mut out = self.clone();
        for (i, c) in &other.coeffs {
            out.add_term(*i, c.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map_coeffs(|c| c.times(s))
    }

    /// Applies `f` coefficient-wise, dropping results that vanish.
    pub fn map_coeffs(&self, mut f: impl FnMut(&S) -> S) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter_map(|(i, c)| {
                let v = f(c);
                (!v.is_zero()).then_some((*i, v))
            })
            .collect();
        Form { n: self.n, degree: self.degree, coeffs }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let degree = self.degree + other.degree;
        let mut out = Form::zero(self.n, degree)?;
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let sign = i.wedge_sign(*j);
                if sign == 0 {
                    continue;
                }
                let prod = a.times(b);
                let term = if sign > 0 { prod } else { prod.negated() };
                out.add_term(i.union(*j), term)?;
            }
        }
        Ok(out)
    }

    /// Coefficient `s` of a top-degree form `s * Omega_{2n}`.
    pub fn top_coefficient(&self) -> Result<S> {
        if self.degree != 2 * self.n {
            return Err(Error::domain(format!(
                "top coefficient needs degree {}, got {}",
                2 * self.n,
                self.degree
            )));
        }
        Ok(self.coeff(MultiIndex::full(self.n)))
    }

    pub fn to_top(&self) -> Result<TopForm<S>> {
        Ok(TopForm { n: self.n, scalar: self.top_coefficient()? })
    }
}

/// `scalar * Omega_{2n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TopForm<S: Scalar> {
    pub n: usize,
    pub scalar: S,
}

impl<S: Scalar> TopForm<S> {
    pub fn into_form(self) -> Result<Form<S>> {
        Form::top(self.n, self.scalar)
    }
}

/// Top coefficient of `C_1 ^ ... ^ C_n` for 2-forms given by dense coefficient
/// matrices (`C = sum_{i,j} c[i][j] w^i ^ w^j`), evaluated through `pairings`.
pub fn top_of_two_forms<T>(pairings: &[Pairing], factors: &[&[T]], dim: usize) -> T
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Add<Output = T> + std::ops::Neg<Output = T> + Zero + One,
{
    let mut acc = T::zero();
    for p in pairings {
        let mut prod = T::one();
        for (k, &(i, j)) in p.pairs.iter().enumerate() {
            prod = prod * factors[k][i * dim + j];
        }
        acc = if p.sign > 0 { acc + prod } else { acc + (-prod) };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    type Q = BigRational;

    fn q(v: i64) -> Q {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn permutation_sign_examples() {
        assert_eq!(permutation_sign(&[0, 1, 2, 3]).unwrap(), 1);
        assert_eq!(permutation_sign(&[1, 0, 2, 3]).unwrap(), -1);
        assert_eq!(permutation_sign(&[0, 0, 2, 3]).unwrap(), 0);
        assert!(permutation_sign(&[0, 1, 2, 4]).is_err());
    }

    fn inversion_sign(seq: &[usize]) -> i8 {
        let mut inv = 0;
        for a in 0..seq.len() {
            for b in a + 1..seq.len() {
                if seq[a] == seq[b] {
                    return 0;
                }
                if seq[a] > seq[b] {
                    inv += 1;
                }
            }
        }
        if inv % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn permutation_sign_matches_inversion_count_on_all_of_s4() {
        let pairings = top_pairings(2);
        assert_eq!(pairings.len(), 24);
        for p in &pairings {
            let seq: Vec<usize> = p.pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
            assert_eq!(p.sign, inversion_sign(&seq), "{seq:?}");
        }
        // Sequences with repeats too.
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let s = [a, b, c, d];
                        assert_eq!(permutation_sign(&s).unwrap(), inversion_sign(&s));
                    }
                }
            }
        }
    }

    #[test]
    fn wedge_examples() {
        let w0 = Form::<Q>::basis(1, 0).unwrap();
        let w1 = Form::<Q>::basis(1, 1).unwrap();
        let w01 = w0.wedge(&w1).unwrap();
        assert_eq!(w01.coeff(MultiIndex::new(&[0, 1], 1).unwrap()), q(1));
        let w10 = w1.wedge(&w0).unwrap();
        assert_eq!(w10, w01.neg());
        assert!(w0.wedge(&w0).unwrap().is_zero());
    }

    #[test]
    fn wedge_dimension_mismatch() {
        let a = Form::<Q>::basis(1, 0).unwrap();
        let b = Form::<Q>::basis(2, 0).unwrap();
        assert!(a.wedge(&b).is_err());
    }

    #[test]
    fn wedge_beyond_top_degree_is_rejected() {
        let top = Form::<Q>::top(1, q(1)).unwrap();
        let w0 = Form::<Q>::basis(1, 0).unwrap();
        assert!(top.wedge(&w0).is_err());
    }

    #[test]
    fn top_coefficient_examples() {
        assert_eq!(Form::<Q>::top(2, q(1)).unwrap().top_coefficient().unwrap(), q(1));
        assert_eq!(Form::<Q>::zero(2, 4).unwrap().top_coefficient().unwrap(), q(0));
        let mut f = Form::<Q>::zero(1, 2).unwrap();
        f.add_term(MultiIndex::new(&[0, 1], 1).unwrap(), q(3)).unwrap();
        assert_eq!(f.top_coefficient().unwrap(), q(3));
        assert!(Form::<Q>::basis(1, 0).unwrap().top_coefficient().is_err());
    }

    #[test]
    fn multi_index_validation() {
        assert!(MultiIndex::new(&[1, 0], 2).is_err());
        assert!(MultiIndex::new(&[0, 4], 2).is_err());
        assert_eq!(MultiIndex::new(&[0, 2, 3], 2).unwrap().degree(), 3);
    }

    #[test]
    fn top_of_two_forms_matches_wedge() {
        // n = 2, two dense 2-forms with integer coefficients.
        let n = 2;
        let dim = 2 * n;
        let a: Vec<f64> = (0..16).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..16).map(|k| ((k * 5 + 1) % 13) as f64 - 6.0).collect();
        let to_form = |c: &[f64]| {
            let mut f = Form::<f64>::zero(n, 2).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    let s = MultiIndex::single(i).wedge_sign(MultiIndex::single(j));
                    if s != 0 {
                        f.add_term(MultiIndex::single(i).union(MultiIndex::single(j)), s as f64 * c[i * dim + j])
                            .unwrap();
                    }
                }
            }
            f
        };
        let expected = to_form(&a).wedge(&to_form(&b)).unwrap().top_coefficient().unwrap();
        let got = top_of_two_forms(&top_pairings(n), &[&a, &b], dim);
        assert_eq!(got, expected);
    }
}
