//! Plurisubharmonicity test and PSH envelopes: relative extremal functions,
//! the projection `P` onto PSH minorants, and exhaustion functions.
//!
//! Discretely, `u` is PSH at a node when along every right quaternionic line
//! `q = x + xi * lambda` of a fixed direction set its value is at most the
//! average over the eight lattice neighbours `x +- xi e_c h`, `c = 0..3`. For
//! `n = 1` there is a single line and this is the usual discrete
//! subharmonicity. Envelopes are the largest grid functions below an obstacle
//! with this property, computed by projected Gauss-Seidel sweeps
//! `u <- min(obstacle, min over lines of the line mean)` in a parity colouring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{hessian_at, hessian_min_eigenvalue, integrate, ma_density, Grid, GridField};
use crate::quat::Quat;

/// Analytic subset of the grid box, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region {
    /// Closed ball; an empty `center` means the origin.
    Ball {
        #[serde(default)]
        center: Vec<f64>,
        radius: f64,
    },
    /// Closed axis-aligned box; one-element bounds apply to every axis.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Union { parts: Vec<Region> },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn cube(lo: f64, hi: f64) -> Self {
        Region::Box { lo: vec![lo], hi: vec![hi] }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        fn comp(v: &[f64], k: usize) -> f64 {
            match v.len() {
                0 => 0.0,
                1 => v[0],
                _ => v[k],
            }
        }
        match self {
            Region::Ball { center, radius } => {
                let r2: f64 = x.iter().enumerate().map(|(k, &c)| (c - comp(center, k)).powi(2)).sum();
                r2 <= radius * radius
            }
            Region::Box { lo, hi } => x.iter().enumerate().all(|(k, &c)| c >= comp(lo, k) && c <= comp(hi, k)),
            Region::Union { parts } => parts.iter().any(|p| p.contains(x)),
        }
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        let ok_len = |v: &Vec<f64>, allow_empty: bool| (allow_empty && v.is_empty()) || v.len() == 1 || v.len() == dims;
        match self {
            Region::Ball { center, radius } => {
                if !ok_len(center, true) || !(*radius > 0.0) {
                    return Err(Error::domain(format!("invalid ball (center length {}, radius {radius})", center.len())));
                }
            }
            Region::Box { lo, hi } => {
                if !ok_len(lo, false) || !ok_len(hi, false) {
                    return Err(Error::domain("box bounds must have length 1 or 4n"));
                }
            }
            Region::Union { parts } => {
                for p in parts {
                    p.validate(dims)?;
                }
            }
        }
        Ok(())
    }

    /// Fraction `theta in (0, 1]` along the segment `a -> b` at which membership
    /// changes, found by bisection (`a` and `b` must differ in membership).
    fn crossing(&self, a: &[f64], b: &[f64]) -> f64 {
        let inside_a = self.contains(a);
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut x = vec![0.0; a.len()];
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            for k in 0..a.len() {
                x[k] = a[k] + mid * (b[k] - a[k]);
            }
            if self.contains(&x) == inside_a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.max(1e-3)
    }
}

/// Where `u <= -1` is imposed: a node mask or an analytic region.
#[derive(Clone, Debug, PartialEq)]
pub enum KSet {
    Mask(Vec<bool>),
    Region(Region),
}

/// Obstacle problem data. Boundary nodes take the obstacle's values as their
/// trace; nodes in `k` are fixed to `k_level`; nodes outside `domain` are
/// fixed to the obstacle value there.
#[derive(Clone, Debug)]
pub struct ObstacleSpec {
    pub obstacle: GridField,
    pub k: Option<KSet>,
    pub k_level: f64,
    pub domain: Option<Region>,
}

impl ObstacleSpec {
    pub fn new(obstacle: GridField) -> Self {
        ObstacleSpec { obstacle, k: None, k_level: -1.0, domain: None }
    }
}

/// Right quaternionic line directions `xi in H^n` with integer components.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSet {
    n: usize,
    lines: Vec<Vec<[i8; 4]>>,
}

impl LineSet {
    /// For `n = 1` the single line; for `n = 2` the 34 directions `(1, 0)`,
    /// `(0, 1)`, `(1, u)` for the eight units `u`, and `(1, +-e_a +- e_b)`.
    pub fn standard(n: usize) -> Result<Self> {
        let one = [1, 0, 0, 0];
        let zero = [0, 0, 0, 0];
        match n {
            1 => Ok(LineSet { n, lines: vec![vec![one]] }),
            2 => {
                let mut lines = vec![vec![one, zero], vec![zero, one]];
                for a in 0..4 {
                    for s in [1i8, -1] {
                        let mut u = [0i8; 4];
                        u[a] = s;
                        lines.push(vec![one, u]);
                    }
                }
                for a in 0..4 {
                    for b in a + 1..4 {
                        for sa in [1i8, -1] {
                            for sb in [1i8, -1] {
                                let mut u = [0i8; 4];
                                u[a] = sa;
                                u[b] = sb;
                                lines.push(vec![one, u]);
                            }
                        }
                    }
                }
                Ok(LineSet { n, lines })
            }
            _ => Err(Error::domain(format!("line sets exist for n in {{1, 2}}, got {n}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// The four lattice offsets `xi e_c` (in units of `h`) of line `l`, and `|xi|^2`.
    pub fn offsets(&self, l: usize) -> ([Vec<i8>; 4], f64) {
        let xi = &self.lines[l];
        let norm2: f64 = xi.iter().flat_map(|q| q.iter()).map(|&c| (c as f64).powi(2)).sum();
        let offs = std::array::from_fn(|c| {
            let mut v = vec![0i8; 4 * self.n];
            for (blk, q) in xi.iter().enumerate() {
                let mut ec = [0i8; 4];
                ec[c] = 1;
                let prod = Quat(q.map(|x| x as f64)).mul(&Quat(ec.map(|x| x as f64)));
                for a in 0..4 {
                    v[4 * blk + a] = prod.0[a] as i8;
                }
            }
            v
        });
        (offs, norm2)
    }

    /// Linear index offsets of the eight neighbours of each line, grouped by line.
    fn index_offsets(&self, g: &Grid) -> Vec<[isize; 8]> {
        (0..self.len())
            .map(|l| {
                let (offs, _) = self.offsets(l);
                let mut out = [0isize; 8];
                for (c, v) in offs.iter().enumerate() {
                    let lin: isize = v.iter().enumerate().map(|(a, &s)| s as isize * g.stride(a) as isize).sum();
                    out[2 * c] = lin;
                    out[2 * c + 1] = -lin;
                }
                out
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct EnvelopeOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Relaxation factor; `None` picks `2 / (1 + sin(pi / (m - 1)))` for `n = 1`
    /// and `1.2` for `n = 2`.
    pub omega: Option<f64>,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions { tol: 1e-8, max_sweeps: 100_000, omega: None }
    }
}

#[derive(Clone, Debug)]
pub struct Envelope {
    pub field: GridField,
    pub sweeps: usize,
    pub final_change: f64,
    /// Free nodes whose line stencils are plain lattice stencils, plus fixed
    /// nodes inside `K`: the nodes where the output is certified PSH.
    pub certified: Vec<bool>,
}

#[derive(Clone, Copy, Debug)]
enum Src {
    Node(usize),
    Value(f64),
}

struct CutNode {
    idx: usize,
    /// Per line: weighted neighbour terms and the weight total.
    lines: Vec<(Vec<(Src, f64)>, f64)>,
}

struct Engine {
    grid: Grid,
    obstacle: Vec<f64>,
    offsets: Vec<[isize; 8]>,
    /// Per colour: regular free nodes and indices into `cut`.
    colors: Vec<(Vec<usize>, Vec<usize>)>,
    cut: Vec<CutNode>,
    init: Vec<f64>,
    certified: Vec<bool>,
}

fn build_engine(spec: &ObstacleSpec, lines: &LineSet) -> Result<Engine> {
    let g = *spec.obstacle.grid();
    let d = g.dims();
    if let Some(r) = &spec.domain {
        r.validate(d)?;
    }
    if let Some(KSet::Region(r)) = &spec.k {
        r.validate(d)?;
    }
    if let Some(KSet::Mask(m)) = &spec.k {
        if m.len() != g.len() {
            return Err(Error::domain("K mask length does not match the grid"));
        }
    }
    let psi = spec.obstacle.values();
    let in_k = |i: usize, x: &[f64]| match &spec.k {
        None => false,
        Some(KSet::Mask(m)) => m[i],
        Some(KSet::Region(r)) => r.contains(x),
    };
    let outside = |x: &[f64]| spec.domain.as_ref().is_some_and(|r| !r.contains(x));

    // 0 = free, 1 = fixed (trace / exterior), 2 = fixed in K.
    let mut kind = vec![0u8; g.len()];
    let mut init = psi.to_vec();
    let mut x = vec![0.0; d];
    for i in 0..g.len() {
        g.point(i, &mut x);
        if !g.is_interior(i) || outside(&x) {
            kind[i] = 1;
        } else if in_k(i, &x) {
            kind[i] = 2;
            init[i] = spec.k_level;
        }
    }

    let offsets = lines.index_offsets(&g);
    let ncolors = 1usize << d;
    let mut colors = vec![(Vec::new(), Vec::new()); ncolors];
    let mut cut = Vec::new();
    let mut certified = vec![false; g.len()];
    let mut mi = vec![0usize; d];
    let mut y = vec![0.0; d];
    for i in 0..g.len() {
        if kind[i] == 2 {
            certified[i] = true;
        }
        if kind[i] != 0 {
            continue;
        }
        g.point(i, &mut x);
        g.multi_index(i, &mut mi);
        let color = mi.iter().enumerate().fold(0usize, |acc, (a, &k)| acc | ((k & 1) << a));
        let mut regular = true;
        let mut node_lines = Vec::with_capacity(lines.len());
        for offs in &offsets {
            let mut terms = Vec::with_capacity(8);
            let mut wsum = 0.0;
            for c in 0..4 {
                let mut arm = [(Src::Value(0.0), 1.0f64); 2];
                for s in 0..2 {
                    let j = (i as isize + offs[2 * c + s]) as usize;
                    let mut src = Src::Node(j);
                    let mut theta = 1.0;
                    if kind[j] != 0 {
                        g.point(j, &mut y);
                        let region = if kind[j] == 2 {
                            match &spec.k {
                                Some(KSet::Region(r)) => Some(r),
                                _ => None,
                            }
                        } else if outside(&y) {
                            spec.domain.as_ref()
                        } else {
                            None
                        };
                        let value = if kind[j] == 2 { spec.k_level } else { psi[j] };
                        if let Some(r) = region {
                            theta = r.crossing(&x, &y);
                            src = Src::Value(value);
                            regular = false;
                        } else if kind[j] == 2 || outside(&y) {
                            src = Src::Value(value);
                        }
                    }
                    arm[s] = (src, theta);
                }
                let (tp, tm) = (arm[0].1, arm[1].1);
                let wp = 2.0 / (tp * (tp + tm));
                let wm = 2.0 / (tm * (tp + tm));
                terms.push((arm[0].0, wp));
                terms.push((arm[1].0, wm));
                wsum += wp + wm;
            }
            node_lines.push((terms, wsum));
        }
        if regular {
            colors[color].0.push(i);
            certified[i] = true;
        } else {
            colors[color].1.push(cut.len());
            cut.push(CutNode { idx: i, lines: node_lines });
        }
    }
    for i in 0..g.len() {
        if kind[i] == 0 {
            init[i] = psi[i];
        }
    }
    Ok(Engine { grid: g, obstacle: psi.to_vec(), offsets, colors, cut, init, certified })
}

impl Engine {
    fn regular_update(&self, u: &[f64], i: usize, omega: f64) -> f64 {
        let mut best = f64::INFINITY;
        for offs in &self.offsets {
            let mut s = 0.0;
            for &o in offs {
                s += u[(i as isize + o) as usize];
            }
            best = best.min(s * 0.125);
        }
        let cur = u[i];
        (cur + omega * (best - cur)).min(self.obstacle[i])
    }

    fn cut_update(&self, u: &[f64], node: &CutNode, omega: f64) -> f64 {
        let mut best = f64::INFINITY;
        for (terms, wsum) in &node.lines {
            let mut s = 0.0;
            for &(src, w) in terms {
                s += w * match src {
                    Src::Node(j) => u[j],
                    Src::Value(v) => v,
                };
            }
            best = best.min(s / wsum);
        }
        let cur = u[node.idx];
        (cur + omega * (best - cur)).min(self.obstacle[node.idx])
    }

    fn run(&self, opts: &EnvelopeOptions) -> Result<Envelope> {
        let g = &self.grid;
        let omega = opts.omega.unwrap_or(if self.offsets.len() == 1 {
            2.0 / (1.0 + (std::f64::consts::PI / (g.m - 1) as f64).sin())
        } else {
            1.2
        });
        if !(omega > 0.0 && omega < 2.0) {
            return Err(Error::domain(format!("relaxation factor {omega} outside (0, 2)")));
        }
        let mut u = self.init.clone();
        let mut change = f64::INFINITY;
        for sweep in 1..=opts.max_sweeps {
            change = 0.0;
            for (regular, cuts) in &self.colors {
                let new_regular: Vec<f64> = regular.par_iter().map(|&i| self.regular_update(&u, i, omega)).collect();
                let new_cut: Vec<f64> = cuts.par_iter().map(|&k| self.cut_update(&u, &self.cut[k], omega)).collect();
                for (&i, v) in regular.iter().zip(new_regular) {
                    change = f64::max(change, (v - u[i]).abs());
                    u[i] = v;
                }
                for (&k, v) in cuts.iter().zip(new_cut) {
                    let i = self.cut[k].idx;
                    change = f64::max(change, (v - u[i]).abs());
                    u[i] = v;
                }
            }
            if change < opts.tol {
                return Ok(Envelope {
                    field: GridField::from_values(*g, u)?,
                    sweeps: sweep,
                    final_change: change,
                    certified: self.certified.clone(),
                });
            }
        }
        Err(Error::Convergence { context: "PSH envelope".into(), iterations: opts.max_sweeps, residual: change })
    }
}

/// Largest discrete PSH function below the obstacle with the given fixed data.
pub fn envelope(spec: &ObstacleSpec, opts: &EnvelopeOptions) -> Result<Envelope> {
    let lines = LineSet::standard(spec.obstacle.grid().n)?;
    build_engine(spec, &lines)?.run(opts)
}

/// Relative extremal function of `K` in `domain` (the whole box when `None`):
/// the envelope of the obstacle `0` with `u = -1` on `K` and trace `0`.
pub fn extremal_function(grid: Grid, k: KSet, domain: Option<Region>, opts: &EnvelopeOptions) -> Result<Envelope> {
    let mut any = false;
    let mut x = vec![0.0; grid.dims()];
    for i in 0..grid.len() {
        grid.point(i, &mut x);
        let inside = match &k {
            KSet::Mask(m) => {
                if m.len() != grid.len() {
                    return Err(Error::domain("K mask length does not match the grid"));
                }
                m[i]
            }
            KSet::Region(r) => r.contains(&x),
        };
        if !inside {
            continue;
        }
        any = true;
        if !grid.is_interior(i) || domain.as_ref().is_some_and(|r| !r.contains(&x)) {
            return Err(Error::domain("K must lie strictly inside the domain"));
        }
    }
    if !any {
        return Err(Error::domain("K contains no grid nodes"));
    }
    let spec = ObstacleSpec { obstacle: GridField::zeros(grid), k: Some(k), k_level: -1.0, domain };
    envelope(&spec, opts)
}

/// Relative extremal function of the ball `|x - a| <= r` in the ball
/// `|x - a| < big_r` of `R^4` (`n = 1`): `max(-1, (R^-2 - |x - a|^-2) / (r^-2 - R^-2))`.
pub fn ball_extremal_exact(x: &[f64], center: &[f64], r: f64, big_r: f64) -> f64 {
    let d2: f64 = x.iter().enumerate().map(|(k, v)| (v - center.get(k).copied().unwrap_or(0.0)).powi(2)).sum();
    if d2 == 0.0 {
        return -1.0;
    }
    let val = (big_r.powi(-2) - 1.0 / d2) / (r.powi(-2) - big_r.powi(-2));
    val.max(-1.0)
}

/// The projection `P(u)`: largest discrete PSH minorant of `u` with boundary
/// trace `min(u, 0)`.
pub fn project_p(u: &GridField, opts: &EnvelopeOptions) -> Result<GridField> {
    let obstacle = u.with_trace(|_, v| v.min(0.0));
    Ok(envelope(&ObstacleSpec::new(obstacle), opts)?.field)
}

/// Negative PSH exhaustion `rho = P(-dist(., boundary))`.
pub fn exhaustion(grid: Grid, opts: &EnvelopeOptions) -> Result<GridField> {
    let d = GridField::from_values(grid, (0..grid.len()).map(|i| -grid.distance_to_boundary(i)).collect())?;
    project_p(&d, opts)
}

#[derive(Clone, Debug)]
pub struct PshOptions {
    /// Violations are tolerated down to `-rel_tol * (1 + sup|u|) / h^2`.
    pub rel_tol: f64,
}

impl Default for PshOptions {
    fn default() -> Self {
        PshOptions { rel_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PshReport {
    pub is_psh: bool,
    /// Smallest line Laplacian `sum_c delta^2_{xi e_c} u / (|xi|^2 h^2)` over
    /// tested nodes and lines; negative values are violations.
    pub worst_violation: f64,
    pub violating_node: Option<Vec<f64>>,
    pub tolerance: f64,
    /// Least eigenvalue of the second-difference quaternionic Hessian over the
    /// tested nodes (diagnostic; unreliable across kinks).
    pub hessian_min_eigenvalue: f64,
    pub tested_nodes: usize,
}

/// Line-restricted subharmonicity test at interior nodes (all of them, or those
/// selected by `mask`).
pub fn psh_test(u: &GridField, mask: Option<&[bool]>, opts: &PshOptions) -> Result<PshReport> {
    let g = *u.grid();
    if let Some(m) = mask {
        if m.len() != g.len() {
            return Err(Error::domain("mask length does not match the grid"));
        }
    }
    let lines = LineSet::standard(g.n)?;
    let offsets = lines.index_offsets(&g);
    let norms: Vec<f64> = (0..lines.len()).map(|l| lines.offsets(l).1).collect();
    let h2 = g.h() * g.h();
    let d = g.dims();
    let v = u.values();
    let nodes: Vec<usize> =
        (0..g.len()).filter(|&i| g.is_interior(i) && mask.is_none_or(|m| m[i])).collect();
    let per_node: Vec<(f64, f64)> = nodes
        .par_iter()
        .map_init(
            || vec![0.0; d * d],
            |hess, &i| {
                let mut worst = f64::INFINITY;
                for (offs, n2) in offsets.iter().zip(&norms) {
                    let s: f64 = offs.iter().map(|&o| v[(i as isize + o) as usize]).sum::<f64>() - 8.0 * v[i];
                    worst = worst.min(s / (n2 * h2));
                }
                hessian_at(u, i, hess);
                (worst, hessian_min_eigenvalue(hess, g.n))
            },
        )
        .collect();
    let tolerance = opts.rel_tol * (1.0 + u.sup_norm()) / h2;
    let mut worst = f64::INFINITY;
    let mut worst_node = None;
    let mut eig = f64::INFINITY;
    for (k, &(w, e)) in per_node.iter().enumerate() {
        if w < worst {
            worst = w;
            worst_node = Some(nodes[k]);
        }
        eig = eig.min(e);
    }
    let is_psh = nodes.is_empty() || worst >= -tolerance;
    Ok(PshReport {
        is_psh,
        worst_violation: if nodes.is_empty() { 0.0 } else { worst },
        violating_node: if is_psh { None } else { worst_node.map(|i| g.point_vec(i)) },
        tolerance,
        hessian_min_eigenvalue: if nodes.is_empty() { 0.0 } else { eig },
        tested_nodes: nodes.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassDiagnostics {
    pub trace_sup_norm: f64,
    pub total_mass: f64,
    pub energy_p: f64,
    pub p: f64,
    pub flagged_density_nodes: usize,
}

/// Boundary trace size, total Monge-Ampere mass and `E_p` of a sampled function.
pub fn class_diagnostics(u: &GridField, p: f64) -> Result<ClassDiagnostics> {
    let g = *u.grid();
    let fields: Vec<&GridField> = vec![u; g.n];
    let mu = ma_density(&fields)?;
    let weight = u.map(|v| (-v).max(0.0).powf(p));
    Ok(ClassDiagnostics {
        trace_sup_norm: u.trace_sup_norm(),
        total_mass: mu.total_mass(),
        energy_p: integrate(&weight, &mu)?,
        p,
        flagged_density_nodes: mu.flagged_nodes,
    })
}
