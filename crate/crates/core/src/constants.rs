//! Frozen normalization constants.

use num_rational::BigRational;

/// Ratio between the top coefficient of `Delta u_1 ^ ... ^ Delta u_n` and
/// `n!` times the mixed Moore determinant of the quaternionic Hessians, as
/// `(numerator, denominator)` for `n = 1, 2, 3`.
const KAPPA: [(i64, i64); 3] = [(1, 1), (1, 1), (1, 1)];

pub fn kappa_exact(n: usize) -> BigRational {
    let (p, q) = KAPPA[n - 1];
    BigRational::new(p.into(), q.into())
}

pub fn kappa(n: usize) -> f64 {
    let (p, q) = KAPPA[n - 1];
    p as f64 / q as f64
}
