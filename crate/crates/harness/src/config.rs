//! Run configuration: a JSON file mirroring [`RunConfig`], with CLI overrides
//! applied on top by the binary.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use helmholtz_cip::{GammaSpec, SolverOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fem,
    Cip,
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fem" => Ok(Method::Fem),
            "cip" => Ok(Method::Cip),
            other => Err(format!("unknown method `{other}` (expected fem or cip)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fem => "fem",
            Method::Cip => "cip",
        })
    }
}

/// Default k-grid of the sweep: 10, 20, ..., 300.
pub fn default_sweep_ks() -> Vec<f64> {
    (1..=30).map(|i| 10.0 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Solve,
    Convergence,
    Sweep,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    /// Polynomial orders; every experiment loops over them.
    pub p: Vec<usize>,
    /// Empty selects the default of the experiment, see [`RunConfig::fill_defaults`].
    pub k: Vec<f64>,
    /// Elements per side for `solve` and `convergence`; empty selects the default.
    pub m: Vec<usize>,
    /// Ignored for the FEM.
    pub gamma: GammaSpec,
    /// Gauss points per direction for the load vector and the error
    /// integrals; `p + 2` when absent.
    pub quadrature: Option<usize>,
    pub solver: SolverOptions,
    pub output: PathBuf,
    /// Tolerance on the relative H¹-seminorm error for `critical-h`.
    pub eps: f64,
    /// `kh/p` of the sweep; `m = round(k / (kh/p · p))`.
    pub kh_over_p: f64,
    /// Largest system the experiments will attempt.
    pub dof_cap: usize,
    /// Reference-slope plots next to the CSV files.
    pub plots: bool,
    /// Write the assembled matrix of `solve` in MatrixMarket format.
    pub export_matrix: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Cip,
            p: vec![1],
            k: Vec::new(),
            m: Vec::new(),
            gamma: GammaSpec::Optimal,
            quadrature: None,
            solver: SolverOptions::default(),
            output: PathBuf::from("out"),
            eps: 0.1,
            kh_over_p: 1.0,
            dof_cap: 4_000_000,
            plots: true,
            export_matrix: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    /// Fills empty k and m lists with the defaults of `experiment`: k = 5 and
    /// m = 8..64 for single solves and convergence, the sweep grid for
    /// `ksweep`, and k = 20..80 for `critical-h`.
    pub fn fill_defaults(&mut self, experiment: Experiment) {
        if self.k.is_empty() {
            self.k = match experiment {
                Experiment::Solve | Experiment::Convergence => vec![5.0],
                Experiment::Sweep => default_sweep_ks(),
                Experiment::Critical => (2..=8).map(|i| 10.0 * i as f64).collect(),
            };
        }
        if self.m.is_empty() {
            self.m = match experiment {
                Experiment::Solve => vec![16],
                _ => vec![8, 16, 32, 64],
            };
        }
    }

    /// Penalty actually used: the FEM never penalizes.
    pub fn effective_gamma(&self) -> GammaSpec {
        match self.method {
            Method::Fem => GammaSpec::Zero,
            Method::Cip => self.gamma.clone(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.p.is_empty() || self.k.is_empty() || self.m.is_empty() {
            bail!("p, k and m lists must be nonempty");
        }
        if let Some(&p) = self.p.iter().find(|&&p| p == 0) {
            bail!("polynomial order must be positive, got {p}");
        }
        if let Some(k) = self.k.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            bail!("wave numbers must be positive, got {k}");
        }
        if self.m.iter().any(|&m| m == 0) {
            bail!("mesh sizes must be positive");
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            bail!("eps must lie in (0, 1], got {}", self.eps);
        }
        if !(self.kh_over_p > 0.0) {
            bail!("kh/p must be positive, got {}", self.kh_over_p);
        }
        if let Some(q) = self.quadrature {
            if let Some(&p) = self.p.iter().find(|&&p| q < p + 1) {
                bail!("quadrature of {q} points is too coarse for p = {p}");
            }
        }
        Ok(())
    }

    /// Points per direction of the load and error rules at order `p`.
    pub fn quadrature_points(&self, p: usize) -> usize {
        self.quadrature.unwrap_or(p + 2)
    }
}
