//! Energies, the bilinear form `gamma`, and numerical verifiers for the
//! integral inequalities of the finite-energy classes.
//!
//! Every verifier returns [`InequalityMargin`] records of the form
//! `lhs <= rhs`, with `margin = rhs - lhs` and a tolerance band from
//! [`Tolerance`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::Form;
use crate::envelope::{extremal_function, EnvelopeOptions, KSet};
use crate::error::{Error, Result};
use crate::grid::{det_sum, gamma_top, integrate, ma_density, ma_top_raw, mollify, Grid, GridField, MeasureDensity};
use crate::poly::{PolyCalculus, PolyField};

/// `gamma(u, v) = (d0 u ^ d1 v - d1 u ^ d0 v) / 2` for polynomial functions.
pub fn gamma_form(calc: &PolyCalculus, u: &PolyField, v: &PolyField) -> Result<Form<PolyField>> {
    let n = calc.n();
    let fu = Form::scalar(n, u.clone())?;
    let fv = Form::scalar(n, v.clone())?;
    let a = calc.d0(&fu)?.wedge(&calc.d1(&fv)?)?;
    let b = calc.d1(&fu)?.wedge(&calc.d0(&fv)?)?;
    let half = crate::poly::creal(crate::poly::rational(1, 2));
    Ok(a.sub(&b)?.scale(&PolyField::constant(half)))
}

/// Allowed violation `scale * (rel + c_h * h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub rel: f64,
    pub c_h: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-9, c_h: 0.5 }
    }
}

impl Tolerance {
    /// Rounding-only band, for discretely exact checks.
    pub fn tight() -> Self {
        Tolerance { rel: 1e-9, c_h: 0.0 }
    }

    pub fn band(&self, scale: f64, h: f64) -> f64 {
        scale.abs().max(f64::MIN_POSITIVE) * (self.rel + self.c_h * h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityMargin {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub passed: bool,
    /// Problem scale for `relative`; `max(|lhs|, |rhs|)` unless set.
    #[serde(skip)]
    pub scale: f64,
}

impl InequalityMargin {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = rhs - lhs;
        InequalityMargin {
            name: name.into(),
            lhs,
            rhs,
            margin,
            tol,
            passed: margin >= -tol && margin.is_finite(),
            scale: lhs.abs().max(rhs.abs()),
        }
    }

    fn banded(name: &str, lhs: f64, rhs: f64, tol: &Tolerance, h: f64) -> Self {
        Self::new(name, lhs, rhs, tol.band(lhs.abs().max(rhs.abs()), h))
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale.abs();
        self
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    pub fn suffixed(mut self, suffix: &str) -> Self {
        self.name.push_str(suffix);
        self
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

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub p: f64,
    pub value: f64,
    pub components: BTreeMap<String, f64>,
}

fn check_nonpositive(u: &GridField, what: &str) -> Result<()> {
    let max = u.max_value();
    if max > 1e-9 * (1.0 + u.sup_norm()) {
        return Err(Error::domain(format!("{what} must be nonpositive (max {max:.3e})")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("energy exponent p = {p} must be at least 1")));
    }
    Ok(())
}

/// `int (-u)^p dmu`.
pub fn weighted_mass(u: &GridField, p: f64, mu: &MeasureDensity) -> Result<f64> {
    integrate(&u.map(|v| (-v).max(0.0).powf(p)), mu)
}

/// `E_p(u) = int (-u)^p (Delta u)^n`, or the mutual energy against
/// `Delta w_1 ^ ... ^ Delta w_n` when `weights` is nonempty.
pub fn energy_p(u: &GridField, p: f64, weights: &[&GridField]) -> Result<EnergyRecord> {
    check_p(p)?;
    check_nonpositive(u, "u")?;
    let n = u.grid().n;
    let mu = if weights.is_empty() {
        ma_density(&vec![u; n])?
    } else {
        ma_density(weights)?
    };
    let value = weighted_mass(u, p, &mu)?;
    let mut components = BTreeMap::new();
    components.insert("mass".to_string(), mu.total_mass());
    components.insert("sup_u".to_string(), u.sup_norm());
    components.insert("flagged_nodes".to_string(), mu.flagged_nodes as f64);
    Ok(EnergyRecord { p, value, components })
}

pub fn energy(u: &GridField) -> Result<f64> {
    Ok(energy_p(u, 1.0, &[])?.value)
}

/// `F_mu(u) = E(u) / (n + 1) + int u dmu`.
pub fn functional_f(u: &GridField, mu: &MeasureDensity) -> Result<f64> {
    let n = u.grid().n as f64;
    Ok(energy(u)? / (n + 1.0) + integrate(u, mu)?)
}

/// `alpha(n, p) = (p + 2) ((p + 1) / p)^(n - 1) - (p + 1)`.
pub fn alpha(n: usize, p: f64) -> f64 {
    (p + 2.0) * ((p + 1.0) / p).powi(n as i32 - 1) - (p + 1.0)
}

/// The two readings of the printed energy-estimate constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DpParse {
    /// `p^(p alpha / (p - 1))`.
    Grouped,
    /// `p^((p alpha / p) - 1) = p^(alpha - 1)`.
    Literal,
}

pub fn d_p(n: usize, p: f64, parse: DpParse) -> f64 {
    if p == 1.0 {
        return 1.0;
    }
    let a = alpha(n, p);
    match parse {
        DpParse::Grouped => p.powf(p * a / (p - 1.0)),
        DpParse::Literal => p.powf(a - 1.0),
    }
}

/// `C_1 = 1`, `C_p = p^(p / (p - 1))`.
pub fn c_p(p: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else {
        p.powf(p / (p - 1.0))
    }
}

fn same_grids(fields: &[&GridField]) -> Result<Grid> {
    let g = *fields.first().ok_or_else(|| Error::domain("no fields given"))?.grid();
    for f in fields {
        g.same_as(f.grid())?;
    }
    Ok(g)
}

fn gamma_integral(u: &GridField, v: &GridField, ws: &[&GridField]) -> Result<f64> {
    let top = gamma_top(u, v, ws)?;
    Ok(det_sum(top.len(), |i| top[i]) * u.grid().cell_volume())
}

/// `int gamma(u, v) ^ T <= (int gamma(u, u) ^ T)^(1/2) (int gamma(v, v) ^ T)^(1/2)`
/// with `T = Delta w_1 ^ ... ^ Delta w_{n-1}`.
pub fn check_cauchy_schwarz(u: &GridField, v: &GridField, ws: &[&GridField], tol: &Tolerance) -> Result<InequalityMargin> {
    let g = same_grids(&[u, v])?;
    let uv = gamma_integral(u, v, ws)?;
    let uu = gamma_integral(u, u, ws)?;
    let vv = gamma_integral(v, v, ws)?;
    if uu < 0.0 || vv < 0.0 {
        return Err(Error::domain("gamma(u, u) ^ T is not positive for these inputs"));
    }
    Ok(InequalityMargin::banded("cauchy-schwarz", uv, (uu * vv).sqrt(), tol, g.h()))
}

/// `int (-h) Delta u_1 ^ ... ^ Delta u_n <= prod (int (-h) (Delta u_i)^n)^(1/n)`;
/// without `h` the weight is `1`.
pub fn check_mass_holder(us: &[&GridField], h: Option<&GridField>, tol: &Tolerance) -> Result<InequalityMargin> {
    let g = same_grids(us)?;
    let n = g.n;
    let weight = match h {
        Some(h) => {
            check_nonpositive(h, "h")?;
            h.map(|v| -v)
        }
        None => GridField::constant(g, 1.0),
    };
    let lhs = integrate(&weight, &ma_density(us)?)?;
    let mut rhs = 1.0;
    for u in us {
        rhs *= integrate(&weight, &ma_density(&vec![*u; n])?)?.max(0.0).powf(1.0 / n as f64);
    }
    Ok(InequalityMargin::banded("mass-holder", lhs, rhs, tol, g.h()))
}

/// `E_p(u, v_1, ..., v_n) <= D_p E_p(u)^(p/(n+p)) prod E_p(v_i)^(1/(n+p))`.
pub fn check_energy_estimate(
    u: &GridField,
    vs: &[&GridField],
    p: f64,
    parse: DpParse,
    tol: &Tolerance,
) -> Result<InequalityMargin> {
    check_p(p)?;
    let g = same_grids(&[u])?;
    let n = g.n;
    if vs.len() != n {
        return Err(Error::domain(format!("need n = {n} fields v_i")));
    }
    let lhs = energy_p(u, p, vs)?.value;
    let np = n as f64 + p;
    let mut rhs = d_p(n, p, parse) * energy_p(u, p, &[])?.value.powf(p / np);
    for v in vs {
        rhs *= energy_p(v, p, &[])?.value.powf(1.0 / np);
    }
    Ok(InequalityMargin::banded(&format!("energy-estimate-p{p}"), lhs, rhs, tol, g.h()))
}

/// The Hölder step `E_p(u, v, T) <= C_p E_p(u, u, T)^(p/(p+1)) E_p(v, v, T)^(1/(p+1))`
/// and, for `p > 1`, its two one-sided halves.
pub fn check_holder_step(
    u: &GridField,
    v: &GridField,
    vs: &[&GridField],
    p: f64,
    tol: &Tolerance,
) -> Result<Vec<InequalityMargin>> {
    check_p(p)?;
    let g = same_grids(&[u, v])?;
    if vs.len() + 1 != g.n {
        return Err(Error::domain(format!("need n - 1 = {} fields v_i", g.n - 1)));
    }
    let with = |a: &GridField, b: &GridField| -> Result<f64> {
        let mut ws: Vec<&GridField> = vec![b];
        ws.extend_from_slice(vs);
        energy_p(a, p, &ws).map(|r| r.value)
    };
    let uv = with(u, v)?;
    let uu = with(u, u)?;
    let vv = with(v, v)?;
    let vu = with(v, u)?;
    let h = g.h();
    let mut out = vec![InequalityMargin::banded(
        "holder-step",
        uv,
        c_p(p) * uu.powf(p / (p + 1.0)) * vv.powf(1.0 / (p + 1.0)),
        tol,
        h,
    )];
    if p > 1.0 {
        out.push(InequalityMargin::banded(
            "holder-step-u",
            uv,
            p * uu.powf((p - 1.0) / p) * vu.powf(1.0 / p),
            tol,
            h,
        ));
        out.push(InequalityMargin::banded(
            "holder-step-v",
            vu,
            p * vv.powf((p - 1.0) / p) * uv.powf(1.0 / p),
            tol,
            h,
        ));
    }
    Ok(out)
}

fn integral_over(mu: &MeasureDensity, set: impl Fn(usize) -> bool + Sync) -> f64 {
    det_sum(mu.values().len(), |i| if set(i) { mu.get(i) } else { 0.0 }) * mu.grid().cell_volume()
}

/// Comparison principle: `int_{u<v} (Delta v)^n <= int_{u<v} (Delta u)^n` when
/// `trace(u) >= trace(v)`, and for two zero-trace fields also
/// `int_{u>v} (Delta u)^n <= int_{u>v} (Delta v)^n`.
pub fn check_comparison(u: &GridField, v: &GridField, tol: &Tolerance) -> Result<Vec<InequalityMargin>> {
    let g = same_grids(&[u, v])?;
    let scale = 1.0 + u.sup_norm().max(v.sup_norm());
    let worst_trace = (0..g.len())
        .filter(|&i| !g.is_interior(i))
        .map(|i| v.get(i) - u.get(i))
        .fold(f64::NEG_INFINITY, f64::max);
    if worst_trace > 1e-9 * scale {
        return Err(Error::domain(format!("boundary condition trace(u) >= trace(v) fails by {worst_trace:.3e}")));
    }
    let n = g.n;
    let mu = ma_density(&vec![u; n])?;
    let mv = ma_density(&vec![v; n])?;
    let below = |i: usize| u.get(i) < v.get(i);
    let mut out = vec![InequalityMargin::banded(
        "comparison",
        integral_over(&mv, below),
        integral_over(&mu, below),
        tol,
        g.h(),
    )];
    let zero = 1e-12 * scale;
    if u.trace_sup_norm() <= zero && v.trace_sup_norm() <= zero {
        let above = |i: usize| u.get(i) > v.get(i);
        out.push(InequalityMargin::banded(
            "comparison-energy-class",
            integral_over(&mu, above),
            integral_over(&mv, above),
            tol,
            g.h(),
        ));
    }
    Ok(out)
}

/// Nodes whose index-cube of radius `r` contains both signs of `f`.
fn sign_change_band(f: &GridField, r: usize) -> Vec<bool> {
    let g = *f.grid();
    let mut lo = f.values().to_vec();
    let mut hi = lo.clone();
    for axis in 0..g.dims() {
        let s = g.stride(axis);
        let m = g.m;
        let (plo, phi) = (lo, hi);
        let filtered: Vec<(f64, f64)> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let k = (i / s) % m;
                let a = k.saturating_sub(r);
                let b = (k + r).min(m - 1);
                let base = i - k * s;
                (a..=b).fold((f64::INFINITY, f64::NEG_INFINITY), |(x, y), t| {
                    (x.min(plo[base + t * s]), y.max(phi[base + t * s]))
                })
            })
            .collect();
        lo = filtered.iter().map(|p| p.0).collect();
        hi = filtered.iter().map(|p| p.1).collect();
    }
    lo.iter().zip(&hi).map(|(&a, &b)| a < 0.0 && b >= 0.0).collect()
}

/// Nodes at index distance at least `r` from every face.
fn core_nodes(g: &Grid, r: usize) -> Vec<bool> {
    let mut mi = vec![0; g.dims()];
    (0..g.len())
        .map(|i| {
            g.multi_index(i, &mut mi);
            mi.iter().all(|&k| k >= r && k + r < g.m)
        })
        .collect()
}

/// Demailly-type inequality `(Delta max(u, v))^n >= 1_{u>=v} (Delta u)^n +
/// 1_{u<v} (Delta v)^n`. All three functions are mollified with width `width`
/// (at least `h`) before differencing. Returns the aggregate form over the
/// nodes where the mollifier is defined, and the node-wise form away from the
/// band where `u - v` changes sign within the stencil reach.
pub fn check_demailly(u: &GridField, v: &GridField, width: f64, tol: &Tolerance) -> Result<Vec<InequalityMargin>> {
    let g = same_grids(&[u, v])?;
    let n = g.n;
    let r = ((width / g.h()) + 1e-9).floor() as usize;
    let dm = ma_density(&vec![&mollify(&u.max_with(v)?, width)?; n])?;
    let du = ma_density(&vec![&mollify(u, width)?; n])?;
    let dv = ma_density(&vec![&mollify(v, width)?; n])?;
    let core = core_nodes(&g, r + 1);
    let diff = u.sub(v)?;
    let band = sign_change_band(&diff, r + 1);
    let rhs_at = |i: usize| if diff.get(i) >= 0.0 { du.get(i) } else { dv.get(i) };
    let vol = g.cell_volume();
    let lhs = det_sum(g.len(), |i| if core[i] { rhs_at(i) } else { 0.0 }) * vol;
    let rhs = det_sum(g.len(), |i| if core[i] { dm.get(i) } else { 0.0 }) * vol;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..g.len() {
        if core[i] && !band[i] {
            worst = worst.min(dm.get(i) - rhs_at(i));
            scale = scale.max(dm.get(i).abs()).max(rhs_at(i).abs());
        }
    }
    Ok(vec![
        InequalityMargin::banded("demailly", lhs, rhs, tol, g.h()),
        InequalityMargin::new("demailly-nodewise", -worst, 0.0, tol.band(scale, g.h())).with_scale(scale),
    ])
}

/// Locality: `Delta max(u, v) ^ T = Delta u ^ T` on `{u > v}`, compared node
/// by node where the whole stencil lies in `{u > v}`. The record holds the sup
/// difference as `lhs` and `0` as `rhs`.
pub fn check_locality(u: &GridField, v: &GridField, ws: &[&GridField], tol: &Tolerance) -> Result<InequalityMargin> {
    let g = same_grids(&[u, v])?;
    if ws.len() + 1 != g.n {
        return Err(Error::domain(format!("need n - 1 = {} fields w_i", g.n - 1)));
    }
    let mx = u.max_with(v)?;
    let mut a: Vec<&GridField> = vec![&mx];
    a.extend_from_slice(ws);
    let mut b: Vec<&GridField> = vec![u];
    b.extend_from_slice(ws);
    let tm = ma_top_raw(&a)?;
    let tu = ma_top_raw(&b)?;
    let diff = u.sub(v)?;
    // Nodes whose stencil cube sees u <= v somewhere.
    let shifted = diff.map(|x| if x > 0.0 { 1.0 } else { -1.0 });
    let band = sign_change_band(&shifted, 1);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..g.len() {
        if g.is_interior(i) && diff.get(i) > 0.0 && !band[i] {
            worst = worst.max((tm[i] - tu[i]).abs());
            scale = scale.max(tu[i].abs());
        }
    }
    Ok(InequalityMargin::new("locality", worst, 0.0, tol.band(scale, g.h())).with_scale(scale))
}

/// Błocki-type estimate `int (h - u)^n Delta v_1 ^ ... ^ Delta v_n <=
/// n! |v_1| ... |v_{n-1}| int |v_n| (Delta u)^n` (sup norms), its inductive
/// steps for `p = n, ..., 2`, and the closing step.
pub fn check_blocki(u: &GridField, h: &GridField, vs: &[&GridField], tol: &Tolerance) -> Result<Vec<InequalityMargin>> {
    let g = same_grids(&[u, h])?;
    let n = g.n;
    if vs.len() != n {
        return Err(Error::domain(format!("need n = {n} fields v_i")));
    }
    let scale = 1.0 + u.sup_norm().max(h.sup_norm());
    let gap = h.sub(u)?;
    if gap.min_value() < -1e-9 * scale {
        return Err(Error::domain("u <= h fails"));
    }
    if gap.trace_sup_norm() > 1e-9 * scale {
        return Err(Error::domain("h - u must vanish on the boundary"));
    }
    for v in vs {
        check_nonpositive(v, "v_i")?;
    }
    let gap = gap.map(|x| x.max(0.0));
    let norms: Vec<f64> = vs.iter().map(|v| v.sup_norm()).collect();
    let hh = g.h();
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let prod_norms: f64 = norms[..n - 1].iter().product();
    let du = ma_density(&vec![u; n])?;
    let last_mass = integrate(&vs[n - 1].map(f64::abs), &du)?;
    let mut out = vec![InequalityMargin::banded(
        "blocki",
        integrate(&gap.map(|x| x.powi(n as i32)), &ma_density(vs)?)?,
        factorial * prod_norms * last_mass,
        tol,
        hh,
    )];
    // (h - u)^p (Delta u)^{n-p} ^ Delta v_{n-p+1} ^ ... ^ Delta v_n.
    let term = |p: usize| -> Result<f64> {
        let mut fs: Vec<&GridField> = vec![u; n - p];
        fs.extend_from_slice(&vs[n - p..]);
        integrate(&gap.map(|x| x.powi(p as i32)), &ma_density(&fs)?)
    };
    for p in (2..=n).rev() {
        out.push(InequalityMargin::banded(
            &format!("blocki-step-{p}"),
            term(p)?,
            p as f64 * norms[n - p] * term(p - 1)?,
            tol,
            hh,
        ));
    }
    out.push(InequalityMargin::banded("blocki-final", term(1)?, last_mass, tol, hh));
    Ok(out)
}

/// `int_U (Delta phi)^n <= D_p C_n(U)^(p/(p+n)) E_p(phi)^(n/(p+n))`, where
/// `C_n(U)` is the total Monge-Ampère mass of the relative extremal function
/// of `U` in the grid box. Returns the margin and `C_n(U)`.
pub fn capacity_estimate(
    u_mask: &[bool],
    phi: &GridField,
    p: f64,
    env: &EnvelopeOptions,
    tol: &Tolerance,
) -> Result<(InequalityMargin, f64)> {
    check_p(p)?;
    let g = *phi.grid();
    if u_mask.len() != g.len() {
        return Err(Error::domain("mask length does not match the grid"));
    }
    if !u_mask.iter().any(|&b| b) {
        return Ok((InequalityMargin::new("capacity", 0.0, 0.0, 0.0), 0.0));
    }
    let ext = extremal_function(g, KSet::Mask(u_mask.to_vec()), None, env)?;
    let cap = ma_density(&vec![&ext.field; g.n])?.total_mass();
    let dphi = ma_density(&vec![phi; g.n])?;
    let lhs = integral_over(&dphi, |i| u_mask[i]);
    let n = g.n as f64;
    let rhs = d_p(g.n, p, DpParse::Grouped) * cap.powf(p / (p + n)) * energy_p(phi, p, &[])?.value.powf(n / (p + n));
    Ok((InequalityMargin::banded("capacity", lhs, rhs, tol, g.h()), cap))
}

/// `E(u + v)^(1/(n+1)) <= E(u)^(1/(n+1)) + E(v)^(1/(n+1))`.
pub fn check_energy_subadditivity(u: &GridField, v: &GridField, tol: &Tolerance) -> Result<InequalityMargin> {
    let g = same_grids(&[u, v])?;
    let e = 1.0 / (g.n as f64 + 1.0);
    let lhs = energy(&u.add(v)?)?.powf(e);
    let rhs = energy(u)?.powf(e) + energy(v)?.powf(e);
    Ok(InequalityMargin::banded("energy-subadditivity", lhs, rhs, tol, g.h()))
}

/// For `u <= v`: `int (Delta v)^n <= int (Delta u)^n` and `E(v) <= E(u)`.
pub fn check_monotonicity(u: &GridField, v: &GridField, tol: &Tolerance) -> Result<Vec<InequalityMargin>> {
    let g = same_grids(&[u, v])?;
    let d = v.sub(u)?.min_value();
    if d < -1e-9 * (1.0 + u.sup_norm()) {
        return Err(Error::domain(format!("u <= v fails by {:.3e}", -d)));
    }
    let n = g.n;
    let mu = ma_density(&vec![u; n])?;
    let mv = ma_density(&vec![v; n])?;
    Ok(vec![
        InequalityMargin::banded("mass-monotonicity", mv.total_mass(), mu.total_mass(), tol, g.h()),
        InequalityMargin::banded("energy-monotonicity", energy(v)?, energy(u)?, tol, g.h()),
    ])
}

/// Empirical `E_p(v) / E_p(u)` for `u <= v` (no constant is asserted for `p > 1`).
pub fn energy_ratio(u: &GridField, v: &GridField, p: f64) -> Result<f64> {
    Ok(energy_p(v, p, &[])?.value / energy_p(u, p, &[])?.value)
}

/// Symmetry `int u Delta v ^ T = int v Delta u ^ T` for zero-trace data, as
/// `lhs = |difference|`, `rhs = 0`.
pub fn check_integration_by_parts(u: &GridField, v: &GridField, ws: &[&GridField], tol: &Tolerance) -> Result<InequalityMargin> {
    let g = same_grids(&[u, v])?;
    if ws.len() + 1 != g.n {
        return Err(Error::domain(format!("need n - 1 = {} fields w_i", g.n - 1)));
    }
    let pair = |a: &GridField, b: &GridField| -> Result<f64> {
        let mut fs: Vec<&GridField> = vec![b];
        fs.extend_from_slice(ws);
        let t = ma_top_raw(&fs)?;
        Ok(det_sum(g.len(), |i| a.get(i) * t[i]) * g.cell_volume())
    };
    let a = pair(u, v)?;
    let b = pair(v, u)?;
    let scale = a.abs().max(b.abs());
    Ok(InequalityMargin::new("integration-by-parts", (a - b).abs(), 0.0, tol.band(scale, g.h())).with_scale(scale))
}
