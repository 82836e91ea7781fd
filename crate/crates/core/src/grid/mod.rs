//! Finite-difference realization of the calculus on cube grids in `R^{4n}`,
//! `n in {1, 2}`.

mod io;
mod stencil;

pub use io::{read_field, read_field_json, write_field, write_slice_csv, FieldHeader};
pub use stencil::{
    fd_baston_coeffs, gamma_top, hessian_at, integrate, integrate_volume, ma_density, ma_top_raw, mollify,
    hessian_min_eigenvalue, quaternionic_hessian, stokes_residual, BastonCoeffs, BastonStencil, GridForm,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic grid on the cube `[lo, hi]^{4n}` with `m` points per axis,
/// row-major with the last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub m: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Grid {
    pub fn new(n: usize, m: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::domain(format!("grid backend supports n in {{1, 2}}, got {n}")));
        }
        if m < 5 || m % 2 == 0 {
            return Err(Error::domain(format!("points per axis must be odd and >= 5, got {m}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::domain(format!("invalid box [{lo}, {hi}]")));
        }
        Ok(Grid { n, m, lo, hi })
    }

    /// Default grid for dimension `n`: `33^4` or `7^8` on `[-1, 1]`.
    pub fn default_for(n: usize) -> Result<Self> {
        Grid::new(n, if n == 1 { 33 } else { 7 }, -1.0, 1.0)
    }

    pub fn dims(&self) -> usize {
        4 * self.n
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dims() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.m - 1) as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dims() as i32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.m.pow((self.dims() - 1 - axis) as u32)
    }

    pub fn axis_coord(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.h()
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for axis in (0..self.dims()).rev() {
            out[axis] = idx % self.m;
            idx /= self.m;
        }
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.m + k)
    }

    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let mut rest = idx;
        for axis in (0..self.dims()).rev() {
            out[axis] = self.axis_coord(rest % self.m);
            rest /= self.m;
        }
    }

    pub fn point_vec(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dims()];
        self.point(idx, &mut x);
        x
    }

    /// Interior nodes are those at least one node away from every face.
    pub fn is_interior(&self, mut idx: usize) -> bool {
        for _ in 0..self.dims() {
            let k = idx % self.m;
            if k == 0 || k == self.m - 1 {
                return false;
            }
            idx /= self.m;
        }
        true
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i)).collect()
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::domain(format!("grid mismatch: {self:?} vs {other:?}")));
        }
        Ok(())
    }

    /// Euclidean distance from node `idx` to the boundary of the cube.
    pub fn distance_to_boundary(&self, idx: usize) -> f64 {
        let mut x = vec![0.0; self.dims()];
        self.point(idx, &mut x);
        x.iter().map(|&c| (c - self.lo).min(self.hi - c)).fold(f64::INFINITY, f64::min)
    }

    /// A grid over the same box with `m` points per axis.
    pub fn with_points(&self, m: usize) -> Result<Grid> {
        Grid::new(self.n, m, self.lo, self.hi)
    }
}

const SUM_CHUNK: usize = 4096;

/// Deterministic compensated sum of `f(i)` for `i in 0..len`: fixed chunks
/// summed in parallel with Neumaier compensation, then combined in order.
pub fn det_sum(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks = len.div_ceil(SUM_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Neumaier::default();
            for i in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(len) {
                acc.add(f(i));
            }
            (acc.sum, acc.comp)
        })
        .collect();
    let mut acc = Neumaier::default();
    for (s, c) in partial {
        acc.add(s);
        acc.add(c);
    }
    acc.value()
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Real function sampled at every node; boundary nodes carry the trace.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite value at node {i}")));
        }
        Ok(GridField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let d = grid.dims();
        let values = (0..grid.len())
            .into_par_iter()
            .map_init(|| vec![0.0; d], |x, i| {
                grid.point(i, x);
                f(x)
            })
            .collect();
        GridField { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridField { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        GridField { grid: self.grid, values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let values = self.values.par_iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridField { grid: self.grid, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_with(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    pub fn min_with(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Largest absolute value over boundary nodes.
    pub fn trace_sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&i| !self.grid.is_interior(i))
            .fold(0.0, |m, i| m.max(self.values[i].abs()))
    }

    /// Copy with every boundary node replaced by `f(node value)`.
    pub fn with_trace(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.grid.len() {
            if !self.grid.is_interior(i) {
                out.values[i] = f(i, self.values[i]);
            }
        }
        out
    }
}

/// Nonnegative density against Lebesgue measure, stored at every node (zero
/// on the boundary), with bookkeeping for clamped negative samples.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureDensity {
    grid: Grid,
    density: Vec<f64>,
    /// Nodes whose raw value fell below the negativity tolerance.
    pub flagged_nodes: usize,
    /// Most negative raw value seen (zero if none).
    pub worst_negative: f64,
}

impl MeasureDensity {
    pub fn from_values(grid: Grid, mut density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::domain(format!("expected {} values, got {}", grid.len(), density.len())));
        }
        if let Some(i) = density.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain(format!("density must be finite and nonnegative (node {i}: {})", density[i])));
        }
        for (i, v) in density.iter_mut().enumerate() {
            if !grid.is_interior(i) {
                *v = 0.0;
            }
        }
        Ok(MeasureDensity { grid, density, flagged_nodes: 0, worst_negative: 0.0 })
    }

    pub fn zero(grid: Grid) -> Self {
        MeasureDensity { grid, density: vec![0.0; grid.len()], flagged_nodes: 0, worst_negative: 0.0 }
    }

    /// Density equal to `f(x)` at interior nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        let field = GridField::from_fn(grid, f);
        Self::from_values(grid, field.into_values())
    }

    pub(crate) fn from_parts(grid: Grid, density: Vec<f64>, flagged_nodes: usize, worst_negative: f64) -> Self {
        MeasureDensity { grid, density, flagged_nodes, worst_negative }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.density
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.density[idx]
    }

    pub fn total_mass(&self) -> f64 {
        let vol = self.grid.cell_volume();
        det_sum(self.density.len(), |i| self.density[i]) * vol
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::domain(format!("density scale {s} must be nonnegative")));
        }
        let mut out = self.clone();
        out.density.iter_mut().for_each(|v| *v *= s);
        Ok(out)
    }

    /// Copy keeping only nodes where `keep(idx)` holds.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut out = self.clone();
        for (i, v) in out.density.iter_mut().enumerate() {
            if !keep(i) {
                *v = 0.0;
            }
        }
        out
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        Ok(self.density.iter().zip(&other.density).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_zero(&self) -> bool {
        self.density.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 4, -1.0, 1.0).is_err());
        assert!(Grid::new(1, 3, -1.0, 1.0).is_err());
        assert!(Grid::new(3, 5, -1.0, 1.0).is_err());
        assert!(Grid::new(1, 5, 1.0, 1.0).is_err());
        let g = Grid::new(1, 5, -1.0, 1.0).unwrap();
        assert_eq!(g.len(), 625);
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.interior_indices().len(), 81);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(1, 7, 0.0, 1.0).unwrap();
        let mut mi = [0usize; 4];
        for idx in [0, 1, 48, 2400 - 1] {
            g.multi_index(idx, &mut mi);
            assert_eq!(g.index_of(&mi), idx);
        }
        g.multi_index(7 * 7 * 7 * 2 + 3, &mut mi);
        assert_eq!(mi, [2, 0, 0, 3]);
        assert_eq!(g.point_vec(7 * 7 * 7 * 2 + 3)[3], 0.5);
    }

    #[test]
    fn det_sum_is_compensated() {
        let n = 100_003;
        let s = det_sum(n, |i| if i == 0 { 1e16 } else { 1.0 });
        assert_eq!(s, 1e16 + (n - 1) as f64);
    }

    #[test]
    fn densities_reject_negative_values() {
        let g = Grid::new(1, 5, -1.0, 1.0).unwrap();
        let mut v = vec![1.0; g.len()];
        assert!(MeasureDensity::from_values(g, v.clone()).is_ok());
        v[300] = -1.0;
        assert!(MeasureDensity::from_values(g, v).is_err());
    }
}
