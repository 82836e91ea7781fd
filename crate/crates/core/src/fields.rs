//! Seeded generators of PSH test data on grids.

use rand::Rng;

use crate::envelope::{envelope, EnvelopeOptions, ObstacleSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::quat::Quat;

/// Hyperhermitian `n x n` quaternionic matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuatMatrix {
    pub n: usize,
    pub entries: Vec<Quat<f64>>,
}

impl QuatMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Quat::zero(); n * n];
        for j in 0..n {
            entries[j * n + j] = Quat::real(1.0);
        }
        QuatMatrix { n, entries }
    }

    /// `B^* B + delta I` with `B` uniform in `[-1, 1]` componentwise.
    pub fn random_psd<R: Rng>(rng: &mut R, n: usize, delta: f64) -> Self {
        let b: Vec<Quat<f64>> = (0..n * n).map(|_| Quat(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))).collect();
        let mut entries = vec![Quat::zero(); n * n];
        for j in 0..n {
            for k in j..n {
                let mut acc = Quat::zero();
                for l in 0..n {
                    acc = acc.add(&b[l * n + j].conj().mul(&b[l * n + k]));
                }
                if j == k {
                    acc = acc.add(&Quat::real(delta));
                }
                entries[k * n + j] = acc.conj();
                entries[j * n + k] = acc;
            }
        }
        QuatMatrix { n, entries }
    }

    /// `Re sum_{j,k} conj(q_j) A_{jk} q_k` at a point of `R^{4n}`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let q: Vec<Quat<f64>> = (0..n).map(|j| Quat([x[4 * j], x[4 * j + 1], x[4 * j + 2], x[4 * j + 3]])).collect();
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += q[j].conj().mul(&self.entries[j * n + k]).mul(&q[k]).0[0];
            }
        }
        acc
    }
}

/// `Re(y^* A y) + bump * |x - c_b|^4 + <linear, x> + shift` with `y = x - center`.
/// PSH whenever `A` is positive semidefinite and `bump >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPsh {
    pub a: QuatMatrix,
    pub center: Vec<f64>,
    pub bump: f64,
    pub bump_center: Vec<f64>,
    pub linear: Vec<f64>,
    pub shift: f64,
}

impl QuadraticPsh {
    pub fn new(a: QuatMatrix) -> Self {
        let d = 4 * a.n;
        QuadraticPsh { a, center: vec![0.0; d], bump: 0.0, bump_center: vec![0.0; d], linear: vec![0.0; d], shift: 0.0 }
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        let d = 4 * n;
        let a = QuatMatrix::random_psd(rng, n, 0.2);
        let center = (0..d).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let bump = rng.gen_range(0.0..0.3);
        let bump_center = (0..d).map(|_| rng.gen_range(-0.3..0.3)).collect();
        QuadraticPsh { a, center, bump, bump_center, linear: vec![0.0; d], shift: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r2: f64 = x.iter().zip(&self.bump_center).map(|(a, b)| (a - b) * (a - b)).sum();
        let lin: f64 = x.iter().zip(&self.linear).map(|(a, b)| a * b).sum();
        self.a.quadratic(&y) + self.bump * r2 * r2 + lin + self.shift
    }

    pub fn field(&self, grid: Grid) -> Result<GridField> {
        if 4 * self.a.n != grid.dims() {
            return Err(Error::domain("quadratic and grid dimensions differ"));
        }
        Ok(GridField::from_fn(grid, |x| self.eval(x)))
    }
}

/// Random negative discrete-PSH field with zero boundary trace: the envelope
/// below `s * (f / c - 1)`, where `f` is a random PSH quadratic and `c` its
/// minimum over the boundary nodes.
pub fn random_e0_field<R: Rng>(rng: &mut R, grid: Grid, opts: &EnvelopeOptions) -> Result<GridField> {
    let f = QuadraticPsh::random(rng, grid.n).field(grid)?;
    let c = (0..grid.len()).filter(|&i| !grid.is_interior(i)).map(|i| f.get(i)).fold(f64::INFINITY, f64::min);
    if !(c > 0.0) {
        return Err(Error::domain("degenerate random quadratic"));
    }
    let s = rng.gen_range(0.5..1.5);
    let obstacle = f.map(|v| s * (v / c - 1.0)).with_trace(|_, _| 0.0);
    Ok(envelope(&ObstacleSpec::new(obstacle), opts)?.field)
}

/// Random smooth function, not PSH in general: a sum of three cosines.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineObstacle {
    terms: Vec<(f64, Vec<f64>, f64)>,
    offset: f64,
}

impl CosineObstacle {
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        let terms = (0..3)
            .map(|_| {
                let amp = rng.gen_range(0.1..0.3);
                let freq = (0..4 * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                (amp, freq, rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        CosineObstacle { terms, offset: rng.gen_range(-0.6..-0.2) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|(a, f, p)| a * (x.iter().zip(f).map(|(xi, fi)| xi * fi).sum::<f64>() + p).cos())
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::trial_rng;

    #[test]
    fn identity_quadratic_is_squared_norm() {
        let a = QuatMatrix::identity(2);
        let x = [1.0, 2.0, 0.0, -1.0, 0.5, 0.0, 0.0, 1.0];
        assert!((a.quadratic(&x) - 7.25).abs() < 1e-12);
    }

    #[test]
    fn random_psd_is_hyperhermitian_and_nonnegative() {
        let mut rng = trial_rng(3, 0);
        let a = QuatMatrix::random_psd(&mut rng, 2, 0.0);
        assert_eq!(a.entries[1], a.entries[2].conj());
        for t in 0..50 {
            let x: Vec<f64> = (0..8).map(|k| ((t * 7 + k * 3) % 11) as f64 - 5.0).collect();
            assert!(a.quadratic(&x) >= -1e-9);
        }
    }
}
