//! Seeded randomized suites over the grid backend: inequality margins,
//! derivative quotients, contact-set masses and the two-start solve.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{
    check_blocki, check_cauchy_schwarz, check_comparison, check_demailly, check_energy_estimate,
    check_energy_subadditivity, check_holder_step, check_integration_by_parts, check_locality, check_mass_holder,
    check_monotonicity, DpParse, InequalityMargin, Tolerance,
};
use crate::envelope::{project_p, EnvelopeOptions};
use crate::error::Result;
use crate::fields::{random_e0_field, CosineObstacle};
use crate::grid::{ma_density, Grid, GridField};
use crate::seeding::trial_rng;
use crate::solver::{check_derivative_formula, solve_variational, SolveConfig};

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub seed: u64,
    pub trial: u64,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip)]
    pub scale: f64,
}

impl TrialRow {
    pub fn from_margin(seed: u64, trial: u64, m: &InequalityMargin) -> Self {
        TrialRow {
            seed,
            trial,
            check: m.name.clone(),
            lhs: m.lhs,
            rhs: m.rhs,
            margin: m.margin,
            tol: m.tol,
            pass: m.passed,
            scale: m.scale,
        }
    }

    /// Margin divided by the problem scale.
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.margin / self.scale
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub worst_relative_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub grid: Grid,
    pub trials: usize,
    pub checks: BTreeMap<String, CheckSummary>,
    pub violations: usize,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, grid: Grid, trials: usize, rows: Vec<TrialRow>) -> Self {
        let mut checks: BTreeMap<String, CheckSummary> = BTreeMap::new();
        for r in &rows {
            let c = checks.entry(r.check.clone()).or_insert(CheckSummary {
                trials: 0,
                violations: 0,
                worst_margin: f64::INFINITY,
                worst_relative_margin: f64::INFINITY,
            });
            c.trials += 1;
            c.violations += !r.pass as usize;
            c.worst_margin = c.worst_margin.min(r.margin);
            c.worst_relative_margin = c.worst_relative_margin.min(r.relative());
        }
        let violations = rows.iter().filter(|r| !r.pass).count();
        SuiteReport { suite: suite.into(), seed, grid, trials, checks, violations, passed: violations == 0, rows }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(|e| crate::Error::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mollification width for the Demailly check.
pub fn demailly_width(grid: &Grid) -> f64 {
    if grid.n == 1 {
        2.0 * grid.h()
    } else {
        grid.h()
    }
}

/// All inequality checks on one seeded triple `u, v, w` of random negative
/// PSH fields with zero trace.
pub fn inequality_trial(grid: Grid, seed: u64, trial: u64, tol: &Tolerance, env: &EnvelopeOptions) -> Result<Vec<InequalityMargin>> {
    let mut rng = trial_rng(seed, trial);
    let u = random_e0_field(&mut rng, grid, env)?;
    let v = random_e0_field(&mut rng, grid, env)?;
    let w = random_e0_field(&mut rng, grid, env)?;
    let n = grid.n;
    // T = (Delta w)^(n-1); the n-tuples are (v, w, ...).
    let ws: Vec<&GridField> = vec![&w; n - 1];
    let mut vs: Vec<&GridField> = vec![&v];
    vs.extend(std::iter::repeat(&w).take(n - 1));
    let mut us: Vec<&GridField> = vec![&u];
    us.extend(std::iter::repeat(&v).take(n - 1));
    let sum = u.add(&v)?;

    let mut out = vec![
        check_cauchy_schwarz(&u, &v, &ws, tol)?,
        check_mass_holder(&us, None, tol)?,
        check_mass_holder(&us, Some(&w), tol)?.renamed("mass-holder-weighted"),
        check_energy_estimate(&u, &vs, 1.0, DpParse::Grouped, tol)?,
        check_energy_estimate(&u, &vs, 2.0, DpParse::Grouped, tol)?,
        check_energy_subadditivity(&u, &v, tol)?,
        check_locality(&u, &v, &ws, tol)?,
        check_integration_by_parts(&u, &v, &ws, tol)?,
    ];
    out.extend(check_holder_step(&u, &v, &ws, 1.0, tol)?.into_iter().map(|m| m.suffixed("-p1")));
    out.extend(check_holder_step(&u, &v, &ws, 2.0, tol)?.into_iter().map(|m| m.suffixed("-p2")));
    out.extend(check_comparison(&u, &v, tol)?);
    out.extend(check_monotonicity(&sum, &u, tol)?);
    out.extend(check_demailly(&u, &v, demailly_width(&grid), tol)?);
    out.extend(check_blocki(&sum, &u, &vs, tol)?);
    Ok(out)
}

pub fn run_inequality_suite(grid: Grid, seed: u64, trials: usize, tol: &Tolerance, env: &EnvelopeOptions) -> Result<SuiteReport> {
    let per: Vec<Vec<InequalityMargin>> =
        (0..trials as u64).into_par_iter().map(|t| inequality_trial(grid, seed, t, tol, env)).collect::<Result<_>>()?;
    let rows = per
        .iter()
        .enumerate()
        .flat_map(|(t, ms)| ms.iter().map(move |m| TrialRow::from_margin(seed, t as u64, m)))
        .collect();
    Ok(SuiteReport::new("inequalities", seed, grid, trials, rows))
}

/// Relative-error thresholds for the two branches of the derivative check.
pub const DERIVATIVE_TOL_NEGATIVE: f64 = 0.05;
pub const DERIVATIVE_TOL_POSITIVE: f64 = 0.01;

/// Difference quotients at `t = +-step` on seeded random pairs. Rows carry the
/// relative error as `lhs` and the allowed error as `rhs`.
pub fn run_derivative_suite(grid: Grid, seed: u64, trials: usize, step: f64, env: &EnvelopeOptions) -> Result<SuiteReport> {
    let per: Vec<Vec<TrialRow>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let u = random_e0_field(&mut rng, grid, env)?;
            let v = random_e0_field(&mut rng, grid, env)?;
            let report = check_derivative_formula(&u, &v, &[step, -step], env)?;
            Ok(report
                .rows
                .iter()
                .map(|r| {
                    let (name, allowed) = if r.t > 0.0 {
                        ("derivative-positive", DERIVATIVE_TOL_POSITIVE)
                    } else {
                        ("derivative-negative", DERIVATIVE_TOL_NEGATIVE)
                    };
                    TrialRow::from_margin(seed, t, &InequalityMargin::new(name, r.relative_error, allowed, 0.0))
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::new("derivative", seed, grid, trials, per.into_iter().flatten().collect()))
}

/// Monge-Ampère mass of `P(psi)` on the non-contact set `{P(psi) < psi - 2h}`,
/// and the total mass.
pub fn contact_mass(psi: &GridField, env: &EnvelopeOptions) -> Result<(f64, f64)> {
    let g = *psi.grid();
    let p = project_p(psi, env)?;
    let mu = ma_density(&vec![&p; g.n])?;
    let gap = 2.0 * g.h();
    let off = mu.restrict(|i| p.get(i) < psi.get(i) - gap).total_mass();
    Ok((off, mu.total_mass()))
}

/// Seeded random smooth obstacle sampled on `grid`.
pub fn cosine_obstacle(grid: Grid, seed: u64, trial: u64) -> GridField {
    let mut rng = trial_rng(seed, trial);
    let c = CosineObstacle::random(&mut rng, grid.n);
    GridField::from_fn(grid, |x| c.eval(x))
}

/// Two solves of `(Delta phi)^n = mu / 2` with `mu` the density of a random
/// field `psi`: from the zero field and from `psi`. Returns the sup distance
/// between the two solutions.
pub fn two_start_distance(grid: Grid, seed: u64, trial: u64, cfg: &SolveConfig) -> Result<f64> {
    let mut rng = trial_rng(seed, trial);
    let psi = random_e0_field(&mut rng, grid, &cfg.envelope)?;
    let mu = ma_density(&vec![&psi; grid.n])?.scale(0.5)?;
    let a = solve_variational(&mu, None, Some(&GridField::zeros(grid)), cfg)?;
    let b = solve_variational(&mu, None, Some(&psi), cfg)?;
    a.phi.sup_distance(&b.phi)
}
