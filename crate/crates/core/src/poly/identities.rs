use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::random::{quadratic_from_matrix, random_form, random_poly, random_psd_hyperhermitian};
use super::{mixed_moore_det, moore_det, rational, HyperhermitianPoly, PolyCalculus, PolyField};
use crate::algebra::Form;
use crate::constants;
use crate::error::{Error, Result};
use crate::seeding::trial_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityTag {
    Leibniz,
    DSquared,
    Anticommute,
    #[serde(rename = "chain-2.3")]
    Chain,
    MooreCorrespondence,
}

impl IdentityTag {
    pub const ALL: [IdentityTag; 5] = [
        IdentityTag::Leibniz,
        IdentityTag::DSquared,
        IdentityTag::Anticommute,
        IdentityTag::Chain,
        IdentityTag::MooreCorrespondence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityTag::Leibniz => "leibniz",
            IdentityTag::DSquared => "d-squared",
            IdentityTag::Anticommute => "anticommute",
            IdentityTag::Chain => "chain-2.3",
            IdentityTag::MooreCorrespondence => "moore-correspondence",
        }
    }
}

impl fmt::Display for IdentityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown identity tag '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct IdentityOptions {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Run against the deliberately broken operator table.
    pub faulty: bool,
}

impl IdentityOptions {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        IdentityOptions { n, trials, seed, faulty: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub tag: IdentityTag,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub status: String,
    /// Largest coefficient magnitude of any residual, as an exact rational.
    pub worst_residual: String,
    /// For the Moore correspondence: the common ratio, when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<String>,
    pub failed_trials: usize,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

fn form_residual(a: &Form<PolyField>, b: &Form<PolyField>) -> Result<BigRational> {
    let diff = a.sub(b)?;
    Ok(diff.terms().map(|(_, c)| c.max_abs_coeff()).max().unwrap_or_else(BigRational::zero))
}

enum Ratio {
    Degenerate,
    NotConstant,
    Value(BigRational),
}

struct Trial<'a> {
    calc: &'a PolyCalculus,
    n: usize,
}

impl Trial<'_> {
    fn leibniz<R: Rng>(&self, rng: &mut R) -> Result<BigRational> {
        let top = 2 * self.n - 1;
        let p = rng.gen_range(0..=top);
        let q = rng.gen_range(0..=top - p);
        let f = random_form(rng, self.n, p)?;
        let g = random_form(rng, self.n, q)?;
        let mut worst = BigRational::zero();
        for alpha in 0..2 {
            let lhs = self.calc.d(alpha, &f.wedge(&g)?)?;
            let mut second = f.wedge(&self.calc.d(alpha, &g)?)?;
            if p % 2 == 1 {
                second = second.neg();
            }
            let rhs = self.calc.d(alpha, &f)?.wedge(&g)?.add(&second)?;
            worst = worst.max(form_residual(&lhs, &rhs)?);
        }
        Ok(worst)
    }

    fn d_squared<R: Rng>(&self, rng: &mut R) -> Result<BigRational> {
        let p = rng.gen_range(0..=2 * self.n - 2);
        let f = random_form(rng, self.n, p)?;
        let zero = Form::zero(self.n, p + 2)?;
        let mut worst = BigRational::zero();
        for alpha in 0..2 {
            let dd = self.calc.d(alpha, &self.calc.d(alpha, &f)?)?;
            worst = worst.max(form_residual(&dd, &zero)?);
        }
        // d_alpha Delta = 0 wherever the degrees allow it.
        if p + 3 <= 2 * self.n {
            let delta = self.calc.delta(&f)?;
            let zero3 = Form::zero(self.n, p + 3)?;
            for alpha in 0..2 {
                worst = worst.max(form_residual(&self.calc.d(alpha, &delta)?, &zero3)?);
            }
        }
        Ok(worst)
    }

    fn anticommute<R: Rng>(&self, rng: &mut R) -> Result<BigRational> {
        let p = rng.gen_range(0..=2 * self.n - 2);
        let f = random_form(rng, self.n, p)?;
        let a = self.calc.d0(&self.calc.d1(&f)?)?;
        let b = self.calc.d1(&self.calc.d0(&f)?)?;
        form_residual(&a, &b.neg())
    }

    fn chain<R: Rng>(&self, rng: &mut R) -> Result<BigRational> {
        let n = self.n;
        let us: Vec<PolyField> = (0..n).map(|_| random_poly(rng, 4 * n, 3, 5, false)).collect();
        let rest = self.calc.ma_product(&us[1..])?;
        let u1 = Form::scalar(n, us[0].clone())?;
        let full = self.calc.ma_product(&us)?;
        let b = self.calc.d0(&self.calc.d1(&u1)?.wedge(&rest)?)?;
        let c = self.calc.d1(&self.calc.d0(&u1)?.wedge(&rest)?)?.neg();
        let d = self.calc.delta(&u1.wedge(&rest)?)?;
        let e = self.calc.ma_index_sum(&us).and_then(|s| Form::top(n, s))?;
        let mut worst = BigRational::zero();
        for other in [&b, &c, &d, &e] {
            worst = worst.max(form_residual(&full, other)?);
        }
        Ok(worst)
    }

    /// `top / (n! * mixed Moore det)` for a random PSH quadratic tuple.
    fn moore_ratio<R: Rng>(&self, rng: &mut R, trial: usize) -> Result<Ratio> {
        let n = self.n;
        let count = if trial % 2 == 0 { 1 } else { n };
        let mats: Vec<HyperhermitianPoly> =
            (0..count).map(|_| random_psd_hyperhermitian(rng, n)).collect::<Result<_>>()?;
        let mut us: Vec<PolyField> = mats.iter().map(quadratic_from_matrix).collect();
        while us.len() < n {
            us.push(us[0].clone());
        }
        let top = self.calc.ma_top(&us)?;
        let hessians: Vec<HyperhermitianPoly> =
            us.iter().map(|u| HyperhermitianPoly::hessian(u, n)).collect::<Result<_>>()?;
        let refs: Vec<&HyperhermitianPoly> = hessians.iter().collect();
        let det = if n == 1 { moore_det(refs[0]) } else { mixed_moore_det(&refs)? };
        if det.is_zero() {
            return Ok(Ratio::Degenerate);
        }
        let factorial: i64 = (1..=n as i64).product();
        let t = top.constant_term();
        let d = det.constant_term();
        if !top.is_constant() || !t.im.is_zero() || !d.im.is_zero() {
            return Ok(Ratio::NotConstant);
        }
        Ok(Ratio::Value(t.re / (d.re * rational(factorial, 1))))
    }
}

/// Runs `trials` seeded exact checks of one identity and summarizes them.
pub fn verify_identity(tag: IdentityTag, opts: &IdentityOptions) -> Result<IdentityReport> {
    let n = opts.n;
    if !(1..=3).contains(&n) {
        return Err(Error::domain(format!("identity checks support n in 1..=3, got {n}")));
    }
    let calc = if opts.faulty { PolyCalculus::faulty(n)? } else { PolyCalculus::new(n)? };
    let trial = Trial { calc: &calc, n };

    let mut report = IdentityReport {
        tag,
        n,
        trials: opts.trials,
        seed: opts.seed,
        status: String::new(),
        worst_residual: String::new(),
        kappa: None,
        failed_trials: 0,
    };

    if tag == IdentityTag::MooreCorrespondence {
        let ratios: Vec<Ratio> = (0..opts.trials)
            .into_par_iter()
            .map(|t| trial.moore_ratio(&mut trial_rng(opts.seed, t as u64), t))
            .collect::<Result<_>>()?;
        let frozen = constants::kappa_exact(n);
        let mut worst = BigRational::zero();
        let mut first: Option<BigRational> = None;
        let mut constant = true;
        for r in &ratios {
            match r {
                Ratio::Degenerate => {}
                Ratio::NotConstant => {
                    report.failed_trials += 1;
                    constant = false;
                }
                Ratio::Value(r) => {
                    let dev = (r - &frozen).abs();
                    if !dev.is_zero() {
                        report.failed_trials += 1;
                    }
                    worst = worst.max(dev);
                    match &first {
                        None => first = Some(r.clone()),
                        Some(f) => constant &= f == r,
                    }
                }
            }
        }
        let any = first.is_some();
        report.kappa = if constant { first.map(|k| k.to_string()) } else { None };
        report.worst_residual = worst.to_string();
        report.status = if any && report.failed_trials == 0 { "pass" } else { "fail" }.into();
        return Ok(report);
    }

    let residuals: Vec<BigRational> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(opts.seed, t as u64);
            match tag {
                IdentityTag::Leibniz => trial.leibniz(&mut rng),
                IdentityTag::DSquared => trial.d_squared(&mut rng),
                IdentityTag::Anticommute => trial.anticommute(&mut rng),
                IdentityTag::Chain => trial.chain(&mut rng),
                IdentityTag::MooreCorrespondence => unreachable!(),
            }
        })
        .collect::<Result<_>>()?;
    report.failed_trials = residuals.iter().filter(|r| !r.is_zero()).count();
    report.worst_residual = residuals.into_iter().max().unwrap_or_else(BigRational::zero).to_string();
    report.status = if report.failed_trials == 0 { "pass" } else { "fail" }.into();
    Ok(report)
}
