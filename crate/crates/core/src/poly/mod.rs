//! Exact symbolic backend: multivariate polynomials on R^{4n} with complex
//! rational coefficients, the first-order operators and their exterior
//! calculus, and Moore determinants of hyperhermitian Hessians.

mod calculus;
mod identities;
mod moore;
mod random;

pub use calculus::{NablaTable, NablaTerm, PolyCalculus};
pub use identities::{verify_identity, IdentityOptions, IdentityReport, IdentityTag};
pub use moore::{complex_embedding_det, mixed_moore_det, moore_det, HyperhermitianPoly};
pub use random::{random_form, random_hyperhermitian, random_poly, random_psd_hyperhermitian, quadratic_from_matrix};

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::algebra::Scalar;

pub type CRational = Complex<BigRational>;

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn crational(re: BigRational, im: BigRational) -> CRational {
    Complex::new(re, im)
}

pub fn creal(q: BigRational) -> CRational {
    Complex::new(q, <BigRational as Zero>::zero())
}

/// Exponent vector with trailing zeros trimmed, so `x_0` and `x_0 x_7^0` coincide.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(Vec<u8>);

impl Monomial {
    pub fn new(mut exps: Vec<u8>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(k: usize) -> Self {
        let mut e = vec![0u8; k + 1];
        e[k] = 1;
        Monomial(e)
    }

    pub fn exponent(&self, k: usize) -> u8 {
        self.0.get(k).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let len = self.0.len().max(other.0.len());
        Monomial((0..len).map(|k| self.exponent(k) + other.exponent(k)).collect())
    }
}

/// Polynomial in the real coordinates `x_0, ..., x_{4n-1}`.
#[derive(Clone, PartialEq, Default)]
pub struct PolyField {
    terms: BTreeMap<Monomial, CRational>,
}

impl fmt::Debug for PolyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let vars: Vec<String> = m
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(k, &e)| if e == 1 { format!("x{k}") } else { format!("x{k}^{e}") })
                    .collect();
                format!("({} + {}i){}", c.re, c.im, vars.join(""))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl PolyField {
    pub fn zero() -> Self {
        PolyField::default()
    }

    pub fn constant(c: CRational) -> Self {
        let mut p = PolyField::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self::constant(creal(q))
    }

    pub fn from_int(v: i64) -> Self {
        Self::from_rational(rational(v, 1))
    }

    /// The coordinate `x_k`.
    pub fn var(k: usize) -> Self {
        let mut p = PolyField::zero();
        p.add_term(Monomial::var(k), creal(rational(1, 1)));
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: CRational) {
        if Scalar::is_zero(&c) {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = &*v + &c;
                if Scalar::is_zero(v) {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &CRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        PolyField { terms: self.terms.iter().map(|(m, c)| (m.clone(), Scalar::negated(c))).collect() }
    }

    pub fn scale(&self, s: &CRational) -> Self {
        let mut out = PolyField::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = PolyField::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = PolyField::from_int(1);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Formal partial derivative in `x_k`.
    pub fn derivative(&self, k: usize) -> Self {
        let mut out = PolyField::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(k);
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[k] -= 1;
            let factor = creal(rational(e as i64, 1));
            out.add_term(Monomial::new(exps), c * factor);
        }
        out
    }

    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Number of leading coordinates the polynomial depends on.
    pub fn nvars_used(&self) -> usize {
        self.terms.keys().map(|m| m.0.len()).max().unwrap_or(0)
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| Zero::is_zero(&c.im))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.0.is_empty())
    }

    /// Constant term (the value at the origin).
    pub fn constant_term(&self) -> CRational {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(<CRational as Scalar>::zero)
    }

    pub fn real_part(&self) -> Self {
        let mut out = PolyField::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), creal(c.re.clone()));
        }
        out
    }

    pub fn imag_part(&self) -> Self {
        let mut out = PolyField::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), creal(c.im.clone()));
        }
        out
    }

    /// Largest `max(|re|, |im|)` over the coefficients; zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> BigRational {
        self.terms
            .values()
            .flat_map(|c| [c.re.abs(), c.im.abs()])
            .max()
            .unwrap_or_else(<BigRational as Zero>::zero)
    }

    pub fn eval(&self, x: &[BigRational]) -> CRational {
        let mut acc = <CRational as Scalar>::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (k, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    v = v * creal(x[k].clone());
                }
            }
            acc = acc + v;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = 1.0;
            for (k, &e) in m.0.iter().enumerate() {
                v *= x[k].powi(e as i32);
            }
            let cf = Complex::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN));
            acc += cf * v;
        }
        acc
    }

    /// Real part evaluated in floating point.
    pub fn eval_real_f64(&self, x: &[f64]) -> f64 {
        self.eval_f64(x).re
    }

    /// Floating-point copy for repeated evaluation.
    pub fn compile(&self) -> CompiledPoly {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let powers = m.0.iter().enumerate().filter(|(_, &e)| e > 0).map(|(k, &e)| (k, e as i32)).collect();
                let cf = Complex::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN));
                (powers, cf)
            })
            .collect();
        CompiledPoly { terms }
    }
}

/// A [`PolyField`] with `f64` coefficients, for fast sampling.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(Vec<(usize, i32)>, Complex<f64>)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (powers, c) in &self.terms {
            let v: f64 = powers.iter().map(|&(k, e)| x[k].powi(e)).product();
            acc += c * v;
        }
        acc
    }

    pub fn eval_real(&self, x: &[f64]) -> f64 {
        self.eval(x).re
    }
}

impl Scalar for PolyField {
    fn zero() -> Self {
        PolyField::zero()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn times(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn from_sign(sign: i8) -> Self {
        PolyField::from_int(sign as i64)
    }
}
