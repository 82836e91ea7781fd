use num_complex::Complex;
use rayon::prelude::*;

use super::{det_sum, Grid, GridField, MeasureDensity};
use crate::algebra::{top_of_two_forms, top_pairings, Form, MultiIndex, Pairing};
use crate::error::{Error, Result};
use crate::poly::{NablaTable, PolyField};

type C64 = Complex<f64>;

/// Second-difference Hessian of `u` at interior node `idx`, row-major `d x d`.
/// Exact (up to rounding) on quadratics.
pub fn hessian_at(u: &GridField, idx: usize, out: &mut [f64]) {
    let g = u.grid();
    let d = g.dims();
    let v = u.values();
    let h2 = g.h() * g.h();
    let c = v[idx];
    for a in 0..d {
        let sa = g.stride(a);
        out[a * d + a] = (v[idx + sa] - 2.0 * c + v[idx - sa]) / h2;
        for b in a + 1..d {
            let sb = g.stride(b);
            let x = (v[idx + sa + sb] - v[idx + sa - sb] - v[idx - sa + sb] + v[idx - sa - sb]) / (4.0 * h2);
            out[a * d + b] = x;
            out[b * d + a] = x;
        }
    }
}

/// Quaternionic Hessian `H_{jk} = sum_{a,b} e_a conj(e_b) D_{4j+a,4k+b}` from a
/// real Hessian, as row-major quaternions `[re, i, j, k]`.
pub fn quaternionic_hessian(hess: &[f64], n: usize) -> Vec<[f64; 4]> {
    let d = 4 * n;
    let mut out = vec![[0.0; 4]; n * n];
    for j in 0..n {
        for k in 0..n {
            let q = &mut out[j * n + k];
            for a in 0..4 {
                for b in 0..4 {
                    let (s, c) = crate::quat::unit_product(a, b);
                    let sign = if b == 0 { s } else { -s };
                    q[c] += sign as f64 * hess[(4 * j + a) * d + 4 * k + b];
                }
            }
        }
    }
    out
}

/// Least eigenvalue of the quaternionic Hessian (equivalently of its complex
/// `2n x 2n` Hermitian embedding) for `n <= 2`.
pub fn hessian_min_eigenvalue(hess: &[f64], n: usize) -> f64 {
    let q = quaternionic_hessian(hess, n);
    match n {
        1 => q[0][0],
        2 => {
            let a = q[0][0];
            let c = q[3][0];
            let b2: f64 = q[1].iter().map(|x| x * x).sum();
            0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b2).sqrt()
        }
        _ => unreachable!("grid backend is limited to n <= 2"),
    }
}

/// Precomputed map from the real Hessian to `Delta_{ij}`, and from the
/// gradient to `nabla_{i alpha}`.
#[derive(Clone, Debug)]
pub struct BastonStencil {
    n: usize,
    /// `nabla[i][alpha]`: list of (axis, coefficient).
    nabla: Vec<[Vec<(usize, C64)>; 2]>,
    /// For each `(i, j)` with `i < j`, the terms `(p, q, c)` with `Delta_{ij} = sum c D_pq`.
    terms: Vec<((usize, usize), Vec<(usize, usize, C64)>)>,
    pairings: Vec<Pairing>,
}

impl BastonStencil {
    pub fn new(n: usize) -> Result<Self> {
        let table = NablaTable::new(n)?;
        let dim = 2 * n;
        let d = 4 * n;
        let mut nabla = Vec::with_capacity(dim);
        for i in 0..dim {
            let row: [Vec<(usize, C64)>; 2] = std::array::from_fn(|alpha| {
                table.entry(i, alpha).expect("in range").iter().map(|t| (t.var, t.coefficient())).collect()
            });
            nabla.push(row);
        }
        let mut terms = Vec::new();
        for i in 0..dim {
            for j in i + 1..dim {
                let mut dense = vec![C64::new(0.0, 0.0); d * d];
                for &(p, cp) in &nabla[i][0] {
                    for &(q, cq) in &nabla[j][1] {
                        dense[p * d + q] += 0.5 * cp * cq;
                    }
                }
                for &(p, cp) in &nabla[i][1] {
                    for &(q, cq) in &nabla[j][0] {
                        dense[p * d + q] -= 0.5 * cp * cq;
                    }
                }
                let mut list = Vec::new();
                for p in 0..d {
                    for q in p..d {
                        let c = if p == q { dense[p * d + q] } else { dense[p * d + q] + dense[q * d + p] };
                        if c.norm() > 0.0 {
                            list.push((p, q, c));
                        }
                    }
                }
                terms.push(((i, j), list));
            }
        }
        Ok(BastonStencil { n, nabla, terms, pairings: top_pairings(n) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.terms.iter().map(|(ij, _)| *ij)
    }

    /// Dense antisymmetric `2n x 2n` matrix of `Delta_{ij}` from a real Hessian.
    pub fn delta_matrix(&self, hess: &[f64], out: &mut [C64]) {
        let dim = 2 * self.n;
        let d = 4 * self.n;
        out.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        for ((i, j), list) in &self.terms {
            let mut acc = C64::new(0.0, 0.0);
            for &(p, q, c) in list {
                acc += c * hess[p * d + q];
            }
            out[i * dim + j] = acc;
            out[j * dim + i] = -acc;
        }
    }

    /// `2n x 2n` matrix `(nabla_{i0} u nabla_{j1} v - nabla_{i1} u nabla_{j0} v) / 2`
    /// from two gradients.
    pub fn gamma_matrix(&self, du: &[f64], dv: &[f64], out: &mut [C64]) {
        let dim = 2 * self.n;
        let apply = |i: usize, alpha: usize, grad: &[f64]| -> C64 {
            self.nabla[i][alpha].iter().map(|&(p, c)| c * grad[p]).sum()
        };
        let nu: Vec<[C64; 2]> = (0..dim).map(|i| [apply(i, 0, du), apply(i, 1, du)]).collect();
        let nv: Vec<[C64; 2]> = (0..dim).map(|i| [apply(i, 0, dv), apply(i, 1, dv)]).collect();
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = 0.5 * (nu[i][0] * nv[j][1] - nu[i][1] * nv[j][0]);
            }
        }
    }

    /// `nabla_{i alpha} f` from a gradient.
    pub fn nabla_apply(&self, i: usize, alpha: usize, grad: &[f64]) -> C64 {
        self.nabla[i][alpha].iter().map(|&(p, c)| c * grad[p]).sum()
    }

    pub fn top(&self, factors: &[&[C64]]) -> C64 {
        top_of_two_forms(&self.pairings, factors, 2 * self.n)
    }
}

/// `Delta_{ij} u` for `i < j` at every interior node.
#[derive(Clone, Debug)]
pub struct BastonCoeffs {
    pub grid: Grid,
    pub pairs: Vec<(usize, usize)>,
    pub nodes: Vec<usize>,
    /// `values[k * pairs.len() + p]` belongs to node `nodes[k]` and pair `pairs[p]`.
    pub values: Vec<C64>,
}

impl BastonCoeffs {
    pub fn get(&self, node_pos: usize, i: usize, j: usize) -> C64 {
        let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        if a == b {
            return C64::new(0.0, 0.0);
        }
        let p = self.pairs.iter().position(|&ij| ij == (a, b)).expect("valid pair");
        s * self.values[node_pos * self.pairs.len() + p]
    }
}

fn check_stencil_grid(g: &Grid) -> Result<()> {
    if g.m < 5 {
        return Err(Error::domain("grid too small for second differences"));
    }
    Ok(())
}

pub fn fd_baston_coeffs(u: &GridField) -> Result<BastonCoeffs> {
    let g = *u.grid();
    check_stencil_grid(&g)?;
    let st = BastonStencil::new(g.n)?;
    let d = g.dims();
    let dim = 2 * g.n;
    let nodes = g.interior_indices();
    let pairs: Vec<(usize, usize)> = st.pairs().collect();
    let values: Vec<C64> = nodes
        .par_iter()
        .map_init(
            || (vec![0.0; d * d], vec![C64::new(0.0, 0.0); dim * dim]),
            |(hess, delta), &idx| {
                hessian_at(u, idx, hess);
                st.delta_matrix(hess, delta);
                pairs.iter().map(|&(i, j)| delta[i * dim + j]).collect::<Vec<_>>()
            },
        )
        .flatten()
        .collect();
    Ok(BastonCoeffs { grid: g, pairs, nodes, values })
}

fn check_fields(us: &[&GridField]) -> Result<Grid> {
    let g = *us.first().ok_or_else(|| Error::domain("no fields given"))?.grid();
    for u in us {
        g.same_as(u.grid())?;
    }
    if us.len() != g.n {
        return Err(Error::domain(format!("need exactly n = {} fields, got {}", g.n, us.len())));
    }
    check_stencil_grid(&g)?;
    Ok(g)
}

/// Per-node `(top coefficient, Hessian scale)` of `Delta u_1 ^ ... ^ Delta u_n`.
fn top_with_scale(us: &[&GridField]) -> Result<(Grid, Vec<(f64, f64)>)> {
    let g = check_fields(us)?;
    let st = BastonStencil::new(g.n)?;
    let d = g.dims();
    let dim = 2 * g.n;
    let k = us.len();
    let out: Vec<(f64, f64)> = (0..g.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; d * d], vec![C64::new(0.0, 0.0); k * dim * dim]),
            |(hess, deltas), idx| {
                if !g.is_interior(idx) {
                    return (0.0, 0.0);
                }
                let mut scale: f64 = 0.0;
                for (f, u) in us.iter().enumerate() {
                    hessian_at(u, idx, hess);
                    scale = scale.max(hess.iter().fold(0.0, |m, x| m.max(x.abs())));
                    st.delta_matrix(hess, &mut deltas[f * dim * dim..(f + 1) * dim * dim]);
                }
                let factors: Vec<&[C64]> = deltas.chunks(dim * dim).collect();
                (st.top(&factors).re, scale)
            },
        )
        .collect();
    Ok((g, out))
}

/// Unclamped top coefficient of `Delta u_1 ^ ... ^ Delta u_n` at every node
/// (zero on the boundary). Mixed products of non-PSH data may be negative.
pub fn ma_top_raw(us: &[&GridField]) -> Result<Vec<f64>> {
    Ok(top_with_scale(us)?.1.into_iter().map(|(t, _)| t).collect())
}

/// Monge-Ampere density `Delta u_1 ^ ... ^ Delta u_n / Omega_{2n}`. Values in
/// `[-eps, 0)` with `eps = 10 h^2 s^n` (`s` the largest Hessian entry at the
/// node) are treated as rounding and set to zero; more negative values are
/// also zeroed but counted in `flagged_nodes`.
pub fn ma_density(us: &[&GridField]) -> Result<MeasureDensity> {
    let (g, raw) = top_with_scale(us)?;
    let h2 = g.h() * g.h();
    let mut flagged = 0;
    let mut worst: f64 = 0.0;
    let density = raw
        .into_iter()
        .map(|(t, s)| {
            if t >= 0.0 {
                return t;
            }
            let eps = 10.0 * h2 * s.powi(g.n as i32);
            if t < -eps {
                flagged += 1;
                worst = worst.min(t);
            }
            0.0
        })
        .collect();
    Ok(MeasureDensity::from_parts(g, density, flagged, worst))
}

/// `sum f * density * h^{4n}`.
pub fn integrate(f: &GridField, mu: &MeasureDensity) -> Result<f64> {
    f.grid().same_as(mu.grid())?;
    let vol = f.grid().cell_volume();
    Ok(det_sum(f.grid().len(), |i| f.get(i) * mu.get(i)) * vol)
}

/// `sum f * h^{4n}` over interior nodes.
pub fn integrate_volume(f: &GridField) -> f64 {
    let g = f.grid();
    det_sum(g.len(), |i| if g.is_interior(i) { f.get(i) } else { 0.0 }) * g.cell_volume()
}

fn gradient_at(u: &GridField, idx: usize, out: &mut [f64]) {
    let g = u.grid();
    let v = u.values();
    let inv = 0.5 / g.h();
    for (a, o) in out.iter_mut().enumerate() {
        let s = g.stride(a);
        *o = (v[idx + s] - v[idx - s]) * inv;
    }
}

/// Top coefficient of `gamma(u, v) ^ Delta w_1 ^ ... ^ Delta w_{n-1}` at every
/// node (zero on the boundary), with centered first differences.
pub fn gamma_top(u: &GridField, v: &GridField, ws: &[&GridField]) -> Result<Vec<f64>> {
    let g = *u.grid();
    g.same_as(v.grid())?;
    for w in ws {
        g.same_as(w.grid())?;
    }
    if ws.len() + 1 != g.n {
        return Err(Error::domain(format!("need n - 1 = {} extra fields, got {}", g.n - 1, ws.len())));
    }
    let st = BastonStencil::new(g.n)?;
    let d = g.dims();
    let dim = 2 * g.n;
    let k = g.n;
    Ok((0..g.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; d], vec![0.0; d * d], vec![C64::new(0.0, 0.0); k * dim * dim]),
            |(du, dv, hess, mats), idx| {
                if !g.is_interior(idx) {
                    return 0.0;
                }
                gradient_at(u, idx, du);
                gradient_at(v, idx, dv);
                st.gamma_matrix(du, dv, &mut mats[..dim * dim]);
                for (f, w) in ws.iter().enumerate() {
                    hessian_at(w, idx, hess);
                    st.delta_matrix(hess, &mut mats[(f + 1) * dim * dim..(f + 2) * dim * dim]);
                }
                let factors: Vec<&[C64]> = mats.chunks(dim * dim).collect();
                st.top(&factors).re
            },
        )
        .collect())
}

/// Separable smoothing with hat weights `r + 1 - |k|` over `|k| <= r`,
/// `r = floor(eps / h)`. Along each axis, nodes closer than `r` to a face
/// keep their value.
pub fn mollify(u: &GridField, eps: f64) -> Result<GridField> {
    let g = *u.grid();
    let h = g.h();
    if !(eps >= h * (1.0 - 1e-12)) {
        return Err(Error::domain(format!("mollifier width {eps} below grid spacing {h}")));
    }
    let r = ((eps / h) + 1e-9).floor() as usize;
    let weights: Vec<f64> = (0..=2 * r).map(|k| (r + 1) as f64 - (k as f64 - r as f64).abs()).collect();
    let total: f64 = weights.iter().sum();
    let mut cur = u.values().to_vec();
    for axis in 0..g.dims() {
        let s = g.stride(axis);
        let m = g.m;
        let prev = cur;
        cur = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let k = (idx / s) % m;
                if k < r || k + r >= m || !g.is_interior(idx) {
                    return prev[idx];
                }
                let mut acc = 0.0;
                for (t, w) in weights.iter().enumerate() {
                    acc += w * prev[idx + t * s - r * s];
                }
                acc / total
            })
            .collect();
    }
    GridField::from_values(g, cur)
}

/// A form with coefficients sampled on the grid.
#[derive(Clone, Debug)]
pub struct GridForm {
    pub grid: Grid,
    pub degree: usize,
    pub coeffs: Vec<(MultiIndex, Vec<C64>)>,
}

impl GridForm {
    /// Samples a polynomial form at every node.
    pub fn sample(grid: Grid, form: &Form<PolyField>) -> Result<Self> {
        if form.n() != grid.n {
            return Err(Error::domain("form and grid dimensions differ"));
        }
        let coeffs = form
            .terms()
            .map(|(idx, p)| {
                let p = p.compile();
                let vals = (0..grid.len())
                    .into_par_iter()
                    .map_init(|| vec![0.0; grid.dims()], |x, i| {
                        grid.point(i, x);
                        p.eval(x)
                    })
                    .collect();
                (*idx, vals)
            })
            .collect();
        Ok(GridForm { grid, degree: form.degree(), coeffs })
    }
}

/// `|sum h d_alpha T + sum d_alpha h ^ T|` (top coefficients, times the cell
/// volume) for a `(2n-1)`-form `T` and a function `h` vanishing on the boundary.
pub fn stokes_residual(t: &GridForm, hfn: &GridField, alpha: usize) -> Result<f64> {
    let g = *hfn.grid();
    g.same_as(&t.grid)?;
    if t.degree + 1 != 2 * g.n {
        return Err(Error::domain(format!("T must have degree {}, got {}", 2 * g.n - 1, t.degree)));
    }
    if alpha > 1 {
        return Err(Error::domain("alpha must be 0 or 1"));
    }
    let trace = hfn.trace_sup_norm();
    if trace > 1e-14 * (1.0 + hfn.sup_norm()) {
        return Err(Error::domain(format!("h must vanish on the boundary (trace {trace:.3e})")));
    }
    let st = BastonStencil::new(g.n)?;
    let dim = 2 * g.n;
    let d = g.dims();
    let full = MultiIndex::full(g.n);
    // (k, coefficient slot, sign) for each summand of the top coefficient.
    let mut plan = Vec::new();
    for (slot, (idx, _)) in t.coeffs.iter().enumerate() {
        for k in 0..dim {
            let s = MultiIndex::single(k).wedge_sign(*idx);
            if s != 0 && MultiIndex::single(k).union(*idx) == full {
                plan.push((k, slot, s as f64));
            }
        }
    }
    let inv = 0.5 / g.h();
    let sum = |part: usize| {
        det_sum(g.len(), |i| {
            if !g.is_interior(i) {
                return 0.0;
            }
            let mut gh = vec![0.0; d];
            gradient_at(hfn, i, &mut gh);
            let mut acc = C64::new(0.0, 0.0);
            for &(k, slot, s) in &plan {
                let tv = &t.coeffs[slot].1;
                let mut gt = vec![C64::new(0.0, 0.0); d];
                for (a, o) in gt.iter_mut().enumerate() {
                    let st_a = g.stride(a);
                    *o = (tv[i + st_a] - tv[i - st_a]) * inv;
                }
                let dt: C64 = st.nabla[k][alpha].iter().map(|&(p, c)| c * gt[p]).sum();
                let dh = st.nabla_apply(k, alpha, &gh);
                acc += s * (hfn.get(i) * dt + dh * tv[i]);
            }
            if part == 0 {
                acc.re
            } else {
                acc.im
            }
        })
    };
    let vol = g.cell_volume();
    Ok((sum(0) * vol).hypot(sum(1) * vol))
}
