use super::{creal, crational, rational, CRational, PolyField};
use crate::algebra::{permutation_sign, MAX_N};
use crate::error::{Error, Result};
use crate::quat::{unit_product, Quat};

/// Square quaternionic matrix with real-polynomial components, stored row-major,
/// satisfying `H_{kj} = conj(H_{jk})`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperhermitianPoly {
    n: usize,
    entries: Vec<Quat<PolyField>>,
}

impl HyperhermitianPoly {
    pub fn new(n: usize, entries: Vec<Quat<PolyField>>) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::domain(format!("matrix size {n} unsupported")));
        }
        if entries.len() != n * n {
            return Err(Error::domain(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        if entries.iter().any(|q| q.0.iter().any(|c| !c.is_real())) {
            return Err(Error::domain("quaternion components must be real polynomials"));
        }
        for j in 0..n {
            for k in j..n {
                if entries[k * n + j] != entries[j * n + k].conj() {
                    return Err(Error::domain(format!("entry ({k}, {j}) is not the conjugate of ({j}, {k})")));
                }
            }
        }
        Ok(HyperhermitianPoly { n, entries })
    }

    /// Constant matrix from rational quaternion entries `[re, i, j, k]` (row-major).
    pub fn from_rationals(n: usize, entries: &[[num_rational::BigRational; 4]]) -> Result<Self> {
        let q = entries
            .iter()
            .map(|e| Quat(std::array::from_fn(|a| PolyField::from_rational(e[a].clone()))))
            .collect();
        Self::new(n, q)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut e = vec![Quat::zero(); n * n];
        for j in 0..n {
            e[j * n + j] = Quat::real(PolyField::from_int(1));
        }
        Self::new(n, e)
    }

    /// The quaternionic Hessian of a real polynomial `u` on `R^{4n}`, with
    /// `(j, k)` entry `sum_{a,b} e_a conj(e_b) d_{4j+a} d_{4k+b} u` over the units
    /// `e = (1, i, j, k)`. Under this convention `Re(q^* A q)` has Hessian `8 A`,
    /// so positivity matches subharmonicity along right lines `q = xi * lambda`.
    pub fn hessian(u: &PolyField, n: usize) -> Result<Self> {
        if !u.is_real() {
            return Err(Error::domain("the quaternionic Hessian needs a real polynomial"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let mut q = Quat::<PolyField>::zero();
                for a in 0..4 {
                    let du = u.derivative(4 * j + a);
                    for b in 0..4 {
                        let conj_sign = if b == 0 { 1 } else { -1 };
                        let d2 = du.derivative(4 * k + b);
                        if d2.is_zero() {
                            continue;
                        }
                        let (s, c) = unit_product(a, b);
                        q.0[c] = if s * conj_sign > 0 { q.0[c].add(&d2) } else { q.0[c].sub(&d2) };
                    }
                }
                entries.push(q);
            }
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> &Quat<PolyField> {
        &self.entries[j * self.n + k]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::domain("matrix size mismatch"));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect();
        Ok(HyperhermitianPoly { n: self.n, entries })
    }
}

/// Moore determinant: the sum over permutations written as products of
/// disjoint cycles, each cycle led by its smallest element and the cycles
/// ordered by decreasing leading element, of `sign * prod M_{i, sigma(i)}`
/// taken in cycle order.
pub fn moore_det(h: &HyperhermitianPoly) -> PolyField {
    let n = h.n;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut acc = Quat::<PolyField>::zero();
    for_each_permutation(&mut perm, 0, &mut |sigma| {
        let sign = permutation_sign(sigma).expect("valid permutation");
        let mut term = Quat::real(PolyField::from_int(sign as i64));
        for start in cycle_leaders(sigma).into_iter().rev() {
            let mut i = start;
            loop {
                let next = sigma[i];
                term = term.mul(h.get(i, next));
                i = next;
                if i == start {
                    break;
                }
            }
        }
        acc = acc.add(&term);
    });
    debug_assert!(acc.is_real(), "Moore determinant of a hyperhermitian matrix is real");
    let [re, ..] = acc.0;
    re
}

/// Cycle leaders (smallest elements) in increasing order.
fn cycle_leaders(sigma: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; sigma.len()];
    let mut leaders = Vec::new();
    for start in 0..sigma.len() {
        if seen[start] {
            continue;
        }
        leaders.push(start);
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = sigma[i];
        }
    }
    leaders
}

fn for_each_permutation(v: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        for_each_permutation(v, k + 1, visit);
        v.swap(k, i);
    }
}

/// Mixed Moore determinant by polarization,
/// `(1/n!) sum_{S} (-1)^{n-|S|} det(sum_{i in S} H_i)`.
pub fn mixed_moore_det(hs: &[&HyperhermitianPoly]) -> Result<PolyField> {
    let n = hs.first().map(|h| h.n).ok_or_else(|| Error::domain("no matrices given"))?;
    if hs.len() != n || hs.iter().any(|h| h.n != n) {
        return Err(Error::domain(format!("mixed determinant needs {n} matrices of size {n}")));
    }
    let mut acc = PolyField::zero();
    for mask in 1u32..(1 << n) {
        let mut sum: Option<HyperhermitianPoly> = None;
        for (i, h) in hs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum = Some(match sum {
                    None => (*h).clone(),
                    Some(s) => s.add(h)?,
                });
            }
        }
        let det = moore_det(&sum.expect("nonempty subset"));
        let size = mask.count_ones() as usize;
        acc = if (n - size) % 2 == 0 { acc.add(&det) } else { acc.sub(&det) };
    }
    let factorial: i64 = (1..=n as i64).product();
    Ok(acc.scale(&creal(rational(1, factorial))))
}

/// Determinant of the `2n x 2n` complex matrix obtained by sending each entry
/// `z + w j` (with `z, w` complex) to `[[z, w], [-conj(w), conj(z)]]`.
/// For hyperhermitian input it equals the square of the Moore determinant.
pub fn complex_embedding_det(h: &HyperhermitianPoly) -> PolyField {
    let n = h.n;
    let dim = 2 * n;
    let i_unit: CRational = crational(rational(0, 1), rational(1, 1));
    let complex = |re: &PolyField, im: &PolyField, conj: bool| {
        let s = if conj { i_unit.clone().conj() } else { i_unit.clone() };
        re.add(&im.scale(&s))
    };
    let mut m = vec![PolyField::zero(); dim * dim];
    for j in 0..n {
        for k in 0..n {
            let [a0, a1, a2, a3] = &h.get(j, k).0;
            m[(2 * j) * dim + 2 * k] = complex(a0, a1, false);
            m[(2 * j) * dim + 2 * k + 1] = complex(a2, a3, false);
            m[(2 * j + 1) * dim + 2 * k] = complex(a2, a3, true).neg();
            m[(2 * j + 1) * dim + 2 * k + 1] = complex(a0, a1, true);
        }
    }
    let mut perm: Vec<usize> = (0..dim).collect();
    let mut acc = PolyField::zero();
    for_each_permutation(&mut perm, 0, &mut |sigma| {
        let sign = permutation_sign(sigma).expect("valid permutation");
        let mut term = PolyField::from_int(sign as i64);
        for (row, &col) in sigma.iter().enumerate() {
            term = term.mul(&m[row * dim + col]);
            if term.is_zero() {
                return;
            }
        }
        acc = acc.add(&term);
    });
    acc
}
