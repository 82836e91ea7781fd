use std::path::{Path, PathBuf};

use quatma::envelope::Region;
use quatma::grid::Grid;
use quatma::solver::Method;
use quatma::{Error, Result};
use serde::{Deserialize, Serialize};

/// Run configuration: a TOML file, overridden by command-line flags.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    /// Points per axis.
    pub grid: Option<usize>,
    /// Box `[lo, hi]` of every axis.
    #[serde(rename = "box")]
    pub bounds: Option<[f64; 2]>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub tolerance: ToleranceConfig,
    pub extremal: ExtremalConfig,
    pub solve: SolveSection,
    pub energy: EnergySection,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rel: Option<f64>,
    pub c_h: Option<f64>,
    pub envelope: Option<f64>,
    pub max_sweeps: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtremalConfig {
    pub k: Region,
    pub domain: Option<Region>,
}

impl Default for ExtremalConfig {
    fn default() -> Self {
        ExtremalConfig { k: Region::ball(Vec::new(), 0.5), domain: Some(Region::ball(Vec::new(), 1.0)) }
    }
}

/// Right-hand side of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MuSpec {
    Constant { value: f64 },
    Ball {
        #[serde(default)]
        center: Vec<f64>,
        radius: f64,
        value: f64,
    },
    /// The density of `|q|^2 - 1`, solved with that function's trace.
    Manufactured,
    /// Node values read from a field file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub mu: MuSpec,
    pub method: Method,
    pub max_iters: Option<usize>,
    pub residual_tol: Option<f64>,
    pub energy_tol: Option<f64>,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection { mu: MuSpec::Manufactured, method: Method::Variational, max_iters: None, residual_tol: None, energy_tol: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    /// Field to analyse; a seeded random field when absent.
    pub input: Option<PathBuf>,
    pub p: Vec<f64>,
    /// Also run the derivative suite with this step.
    pub derivative_step: Option<f64>,
}

impl Default for EnergySection {
    fn default() -> Self {
        EnergySection { input: None, p: vec![1.0, 2.0], derivative_step: None }
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(1)
    }

    pub fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("qma-out"))
    }

    pub fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    /// Grid from the configured `n`, points per axis and box.
    pub fn grid(&self, default_m: impl Fn(usize) -> usize) -> Result<Grid> {
        let n = self.n();
        let [lo, hi] = self.bounds.unwrap_or([-1.0, 1.0]);
        Grid::new(n, self.grid.unwrap_or_else(|| default_m(n)), lo, hi)
    }
}
