//! Dirichlet problem `(Delta phi)^n = mu`: a linear solve for `n = 1` and
//! preconditioned descent on `F_mu` with projection onto PSH functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, functional_f};
use crate::envelope::{envelope, psh_test, project_p, EnvelopeOptions, ObstacleSpec, PshOptions, PshReport};
use crate::error::{Error, Result};
use crate::grid::{det_sum, integrate, ma_density, ma_top_raw, Grid, GridField, MeasureDensity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DirectN1,
    Variational,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub method: Method,
    pub max_iters: usize,
    /// Backtracking factor applied to rejected steps.
    pub armijo_factor: f64,
    /// Sufficient-decrease constant.
    pub armijo_c: f64,
    pub max_backtracks: usize,
    /// Stop once the sup residual is below this (relative to `1 + sup mu`).
    pub residual_tol: f64,
    /// Stop once `|F_{k+1} - F_k| <= energy_tol * (1 + |F_k|)`.
    pub energy_tol: f64,
    /// Relative residual for the conjugate-gradient Laplacian solves.
    pub cg_tol: f64,
    pub envelope: EnvelopeOptions,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            method: Method::Variational,
            max_iters: 200,
            armijo_factor: 0.5,
            armijo_c: 1e-4,
            max_backtracks: 30,
            residual_tol: 1e-8,
            energy_tol: 1e-14,
            cg_tol: 1e-12,
            envelope: EnvelopeOptions::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.residual_tol, self.energy_tol, self.cg_tol, self.armijo_c];
        if positive.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::domain("solver tolerances must be positive"));
        }
        if !(self.armijo_factor > 0.0 && self.armijo_factor < 1.0) {
            return Err(Error::domain("backtracking factor must lie in (0, 1)"));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub phi: GridField,
    /// Sup over interior nodes of `|top coefficient of (Delta phi)^n - mu|`.
    pub residual: f64,
    /// `F_mu` after each accepted iterate (relative to the initial field when
    /// the trace is nonzero).
    pub energies: Vec<f64>,
    pub iterations: usize,
    pub projections: usize,
    pub psh: PshReport,
}

#[derive(Serialize)]
pub struct SolveSummary {
    pub residual: f64,
    pub iterations: usize,
    pub projections: usize,
    pub energies: Vec<f64>,
    pub psh: PshReport,
    pub min: f64,
    pub max: f64,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            residual: self.residual,
            iterations: self.iterations,
            projections: self.projections,
            energies: self.energies.clone(),
            psh: self.psh.clone(),
            min: self.phi.min_value(),
            max: self.phi.max_value(),
        }
    }
}

/// Second-difference Laplacian at interior nodes, zero on the boundary.
pub fn laplacian(u: &GridField) -> GridField {
    let g = *u.grid();
    let v = u.values();
    let h2 = g.h() * g.h();
    let out = (0..g.len())
        .into_par_iter()
        .map(|i| {
            if !g.is_interior(i) {
                return 0.0;
            }
            let mut acc = 0.0;
            for a in 0..g.dims() {
                let s = g.stride(a);
                acc += v[i + s] + v[i - s] - 2.0 * v[i];
            }
            acc / h2
        })
        .collect();
    GridField::from_values(g, out).expect("finite input gives finite output")
}

fn dot(g: &Grid, a: &[f64], b: &[f64]) -> f64 {
    det_sum(g.len(), |i| a[i] * b[i])
}

/// Solves `L x = b` at interior nodes with `x = 0` on the boundary, by
/// conjugate gradients on `-L`.
pub fn solve_laplacian(b: &GridField, tol: f64, max_iters: usize) -> Result<GridField> {
    let g = *b.grid();
    let interior: Vec<bool> = (0..g.len()).map(|i| g.is_interior(i)).collect();
    // Residual of -L x = -b starting from x = 0.
    let mut r: Vec<f64> = b.values().iter().zip(&interior).map(|(&v, &k)| if k { -v } else { 0.0 }).collect();
    let mut x = vec![0.0; g.len()];
    let mut p = r.clone();
    let mut rr = dot(&g, &r, &r);
    let target = tol * tol * rr.max(f64::MIN_POSITIVE);
    for _ in 0..max_iters {
        if rr <= target {
            return GridField::from_values(g, x);
        }
        let ap = laplacian(&GridField::from_values(g, p.clone())?).map(|v| -v);
        let pap = dot(&g, &p, ap.values());
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(ap.values()).for_each(|(r, a)| *r -= alpha * a);
        let rr_new = dot(&g, &r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.par_iter_mut().zip(&r).for_each(|(p, r)| *p = r + beta * *p);
    }
    if rr <= target {
        return GridField::from_values(g, x);
    }
    Err(Error::Convergence { context: "Laplacian solve".into(), iterations: max_iters, residual: rr.sqrt() })
}

fn trace_field(mu: &MeasureDensity, trace: Option<&GridField>) -> Result<GridField> {
    let g = *mu.grid();
    match trace {
        Some(t) => {
            g.same_as(t.grid())?;
            Ok(GridField::zeros(g).with_trace(|i, _| t.get(i)))
        }
        None => Ok(GridField::zeros(g)),
    }
}

fn residual(phi: &GridField, mu: &MeasureDensity) -> Result<f64> {
    let g = *phi.grid();
    let top = ma_top_raw(&vec![phi; g.n])?;
    Ok((0..g.len()).filter(|&i| g.is_interior(i)).fold(0.0, |m, i| m.max((top[i] - mu.get(i)).abs())))
}

fn certificate(phi: &GridField) -> Result<PshReport> {
    psh_test(phi, None, &PshOptions::default())
}

/// `n = 1`: the density is the Laplacian, so `(Delta phi)^1 = mu` is a linear
/// Dirichlet problem.
pub fn solve_direct_n1(mu: &MeasureDensity, trace: Option<&GridField>, cfg: &SolveConfig) -> Result<SolveResult> {
    let g = *mu.grid();
    if g.n != 1 {
        return Err(Error::domain(format!("the direct solver needs n = 1, got n = {}", g.n)));
    }
    cfg.validate()?;
    let lift = trace_field(mu, trace)?;
    let lg = laplacian(&lift);
    let rhs = GridField::from_values(g, (0..g.len()).map(|i| mu.get(i) - lg.get(i)).collect())?;
    let w = solve_laplacian(&rhs, cfg.cg_tol, 50 * g.m * g.dims())?;
    let phi = lift.add(&w)?;
    let zero_trace = lift.sup_norm() == 0.0;
    let energies = if zero_trace && phi.max_value() <= 1e-9 * (1.0 + phi.sup_norm()) {
        vec![functional_f(&phi, mu)?]
    } else {
        Vec::new()
    };
    Ok(SolveResult {
        residual: residual(&phi, mu)?,
        psh: certificate(&phi)?,
        phi,
        energies,
        iterations: 1,
        projections: 0,
    })
}

/// Two-point Gauss-Legendre value of `int_0^1 <-(b - a), rho(a + t (b - a))> dt`,
/// the change of `E / (n + 1)` along the segment from `a` to `b`.
fn energy_increment(a: &GridField, b: &GridField) -> Result<f64> {
    let g = *a.grid();
    let d = b.sub(a)?;
    let mut acc = 0.0;
    for t in [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()] {
        let x = a.add(&d.scale(t))?;
        let top = ma_top_raw(&vec![&x; g.n])?;
        acc += 0.5 * det_sum(g.len(), |i| -d.get(i) * top[i]);
    }
    Ok(acc * g.cell_volume())
}

struct Objective<'a> {
    mu: &'a MeasureDensity,
    zero_trace: bool,
}

impl Objective<'_> {
    /// `F_mu(next)`, given `F_mu(prev)` when the trace is nonzero.
    fn value(&self, prev: &GridField, prev_value: f64, next: &GridField) -> Result<f64> {
        if self.zero_trace {
            return functional_f(next, self.mu);
        }
        let lin = integrate(&next.sub(prev)?, self.mu)?;
        Ok(prev_value + energy_increment(prev, next)? + lin)
    }
}

fn project_with_trace(u: &GridField, lift: &GridField, env: &EnvelopeOptions) -> Result<GridField> {
    let obstacle = u.with_trace(|i, _| lift.get(i));
    Ok(envelope(&ObstacleSpec::new(obstacle), env)?.field)
}

/// Default starting point: the PSH envelope below `min(trace) - c dist` with
/// `c` chosen so that the Monge-Ampère mass of `-c dist` matches `mu`.
fn initial_guess(mu: &MeasureDensity, lift: &GridField, env: &EnvelopeOptions) -> Result<GridField> {
    let g = *mu.grid();
    let dist = GridField::from_values(g, (0..g.len()).map(|i| -g.distance_to_boundary(i)).collect())?;
    let base = ma_density(&vec![&dist; g.n])?.total_mass();
    let c = if base > 0.0 { (mu.total_mass() / base).powf(1.0 / g.n as f64) } else { 0.0 };
    let floor = (0..g.len()).filter(|&i| !g.is_interior(i)).map(|i| lift.get(i)).fold(0.0f64, f64::min);
    let obstacle = dist.map(|v| floor + c * v).with_trace(|i, _| lift.get(i));
    Ok(envelope(&ObstacleSpec::new(obstacle), env)?.field)
}

/// Minimizes `F_mu` over PSH fields with the given trace (zero by default).
/// Each step moves along the Laplacian-preconditioned residual with the step
/// from the local quadratic model, backtracks on `F_mu`, and projects onto
/// PSH fields when the line test fails.
pub fn solve_variational(
    mu: &MeasureDensity,
    trace: Option<&GridField>,
    init: Option<&GridField>,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    let g = *mu.grid();
    cfg.validate()?;
    let lift = trace_field(mu, trace)?;
    let zero_trace = lift.sup_norm() == 0.0;
    if zero_trace && mu.is_zero() && init.is_none() {
        let phi = GridField::zeros(g);
        return Ok(SolveResult {
            residual: 0.0,
            psh: certificate(&phi)?,
            phi,
            energies: vec![0.0],
            iterations: 0,
            projections: 0,
        });
    }
    let mut phi = match init {
        Some(f) => {
            g.same_as(f.grid())?;
            let f = f.with_trace(|i, _| lift.get(i));
            if certificate(&f)?.is_psh {
                f
            } else {
                project_with_trace(&f, &lift, &cfg.envelope)?
            }
        }
        None => initial_guess(mu, &lift, &cfg.envelope)?,
    };
    let obj = Objective { mu, zero_trace };
    let mut value = if zero_trace { functional_f(&phi, mu)? } else { integrate(&phi, mu)? };
    let mut energies = vec![value];
    let mut projections = 0;
    let scale = 1.0 + mu.values().iter().fold(0.0f64, |m, &v| m.max(v));
    let vol = g.cell_volume();
    for iter in 1..=cfg.max_iters {
        let top = ma_top_raw(&vec![&phi; g.n])?;
        let r = GridField::from_values(
            g,
            (0..g.len()).map(|i| if g.is_interior(i) { mu.get(i) - top[i] } else { 0.0 }).collect(),
        )?;
        let res = r.sup_norm();
        if res <= cfg.residual_tol * scale {
            return finish(phi, mu, energies, iter - 1, projections);
        }
        // Newton direction for n = 1: L d = r.
        let d = solve_laplacian(&r, cfg.cg_tol, 50 * g.m * g.dims())?;
        let slope = vol * det_sum(g.len(), |i| r.get(i) * d.get(i));
        if !(slope < 0.0) {
            return finish(phi, mu, energies, iter - 1, projections);
        }
        // Quadratic model: <d, J d> with J d = n * mixed(phi, ..., phi, d).
        let mut fs: Vec<&GridField> = vec![&phi; g.n - 1];
        fs.push(&d);
        let jd = ma_top_raw(&fs)?;
        let curv = -vol * g.n as f64 * det_sum(g.len(), |i| d.get(i) * jd[i]);
        let mut step = if curv > 0.0 { -slope / curv } else { 1.0 };
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let mut cand = phi.add(&d.scale(step))?;
            let mut projected = false;
            if !certificate(&cand)?.is_psh {
                cand = project_with_trace(&cand, &lift, &cfg.envelope)?;
                projected = true;
            }
            let v = obj.value(&phi, value, &cand)?;
            if v <= value + cfg.armijo_c * step * slope {
                accepted = Some((cand, v, projected));
                break;
            }
            step *= cfg.armijo_factor;
        }
        let Some((cand, v, projected)) = accepted else {
            return finish(phi, mu, energies, iter - 1, projections);
        };
        projections += projected as usize;
        let change = (v - value).abs();
        phi = cand;
        value = v;
        energies.push(v);
        if change <= cfg.energy_tol * (1.0 + value.abs()) {
            return finish(phi, mu, energies, iter, projections);
        }
    }
    let res = residual(&phi, mu)?;
    if res <= cfg.residual_tol * scale {
        return finish(phi, mu, energies, cfg.max_iters, projections);
    }
    Err(Error::Convergence { context: "variational Monge-Ampere solve".into(), iterations: cfg.max_iters, residual: res })
}

fn finish(phi: GridField, mu: &MeasureDensity, energies: Vec<f64>, iterations: usize, projections: usize) -> Result<SolveResult> {
    Ok(SolveResult { residual: residual(&phi, mu)?, psh: certificate(&phi)?, phi, energies, iterations, projections })
}

pub fn solve(mu: &MeasureDensity, trace: Option<&GridField>, cfg: &SolveConfig) -> Result<SolveResult> {
    match cfg.method {
        Method::DirectN1 => solve_direct_n1(mu, trace, cfg),
        Method::Variational => solve_variational(mu, trace, None, cfg),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeRow {
    pub t: f64,
    pub quotient: f64,
    pub relative_error: f64,
    /// `int h_t (Delta u)^k ^ (Delta P(u + t v))^(n-k)` for `k = 0..=n` (`t < 0` only).
    pub h_t_integrals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    /// `(n + 1) int (-v) (Delta u)^n`.
    pub formula: f64,
    pub rows: Vec<DerivativeRow>,
}

impl DerivativeReport {
    pub fn row(&self, t: f64) -> Option<&DerivativeRow> {
        self.rows.iter().find(|r| r.t == t)
    }
}

/// One-sided difference quotients of `t -> E(P(u + t v))` against
/// `(n + 1) int (-v) (Delta u)^n`.
pub fn check_derivative_formula(u: &GridField, v: &GridField, ts: &[f64], env: &EnvelopeOptions) -> Result<DerivativeReport> {
    let g = *u.grid();
    g.same_as(v.grid())?;
    let n = g.n;
    let du = ma_density(&vec![u; n])?;
    let formula = (n as f64 + 1.0) * integrate(&v.map(|x| -x), &du)?;
    let e0 = energy(u)?;
    let mut rows = Vec::new();
    for &t in ts {
        if t == 0.0 {
            return Err(Error::domain("difference step t must be nonzero"));
        }
        let w = project_p(&u.add(&v.scale(t))?, env)?;
        let quotient = (energy(&w)? - e0) / t;
        let relative_error = if formula != 0.0 { (quotient - formula).abs() / formula.abs() } else { quotient.abs() };
        let mut h_t_integrals = Vec::new();
        if t < 0.0 {
            let ht = w.sub(&v.scale(t))?.sub(u)?.scale(1.0 / t);
            for k in 0..=n {
                let mut fs: Vec<&GridField> = vec![u; k];
                fs.extend(std::iter::repeat(&w).take(n - k));
                h_t_integrals.push(integrate(&ht, &ma_density(&fs)?)?);
            }
        }
        rows.push(DerivativeRow { t, quotient, relative_error, h_t_integrals });
    }
    Ok(DerivativeReport { formula, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsolutionReport {
    /// `min (phi - psi)`; nonnegative when the sandwich holds.
    pub gap_below: f64,
    /// `max phi`; nonpositive when the sandwich holds.
    pub max_phi: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Solves with a measure dominated by `(Delta psi)^n` and checks
/// `psi <= phi <= 0`.
pub fn check_subsolution_solve(psi: &GridField, mu: &MeasureDensity, cfg: &SolveConfig) -> Result<(SolveResult, SubsolutionReport)> {
    let g = *psi.grid();
    g.same_as(mu.grid())?;
    let dpsi = ma_density(&vec![psi; g.n])?;
    let slack = 1e-9 * (1.0 + dpsi.values().iter().fold(0.0f64, |m, &v| m.max(v)));
    if let Some(i) = (0..g.len()).find(|&i| mu.get(i) > dpsi.get(i) + slack) {
        return Err(Error::domain(format!("mu exceeds (Delta psi)^n at node {i}")));
    }
    if psi.max_value() > 1e-9 * (1.0 + psi.sup_norm()) {
        return Err(Error::domain("psi must be nonpositive"));
    }
    let result = solve_variational(mu, None, None, cfg)?;
    let tolerance = 1e-6 * (1.0 + psi.sup_norm());
    let gap_below = result.phi.sub(psi)?.min_value();
    let max_phi = result.phi.max_value();
    let report = SubsolutionReport {
        gap_below,
        max_phi,
        residual: result.residual,
        tolerance,
        passed: gap_below >= -tolerance && max_phi <= tolerance,
    };
    Ok((result, report))
}
