//! Experiment configuration: one flat TOML table, every key optional.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sgl_core::baselines::GlConfig;
use sgl_core::metrics::{RelErrNorm, TAU_GRID};
use sgl_core::{AdmmConfig, BcdConfig, GenConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    SglHncs,
    Scsgl,
    Gl,
    /// Random labeling with the edge counts of another estimate.
    Chance,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SglHncs => "sgl-hncs",
            Method::Scsgl => "scsgl",
            Method::Gl => "gl",
            Method::Chance => "chance",
        }
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgl-hncs" => Ok(Method::SglHncs),
            "scsgl" => Ok(Method::Scsgl),
            "gl" => Ok(Method::Gl),
            other => Err(CliError::Config(format!(
                "methods: unknown method `{other}` (expected sgl-hncs, scsgl or gl)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Hidden,
    Signals,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<String>,

    pub n: usize,
    pub p_edge: f64,
    pub neg_fraction: f64,
    pub k: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Hidden-node count; `generate` defaults to 2 and `realdata` to 5.
    pub hidden: Option<usize>,

    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub outer_iters: usize,
    pub outer_tol: f64,

    pub rho: f64,
    pub inner_iters: usize,
    pub primal_tol: f64,
    pub domain_eps: f64,
    pub backtrack_max: usize,

    pub gl_alpha: f64,
    pub gl_iters: usize,
    pub gl_tol: f64,

    pub sweep: SweepAxis,
    pub hidden_counts: Vec<usize>,
    pub signal_counts: Vec<usize>,
    pub trials: usize,
    pub tau_grid: Vec<f64>,
    pub relerr_norm: RelErrNorm,
    /// Random labelings drawn per estimate for the chance baseline.
    pub chance_draws: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let gen = GenConfig::default();
        let bcd = BcdConfig::default();
        let admm = AdmmConfig::default();
        let gl = GlConfig::default();
        Self {
            methods: vec!["sgl-hncs".into(), "scsgl".into(), "gl".into()],
            n: gen.n,
            p_edge: gen.p_edge,
            neg_fraction: gen.neg_fraction,
            k: gen.k,
            noise_sigma: gen.noise_sigma,
            seed: gen.seed,
            hidden: None,
            alpha_plus: bcd.alpha_plus,
            alpha_minus: bcd.alpha_minus,
            sigma_plus: bcd.sigma_plus,
            sigma_minus: bcd.sigma_minus,
            eta_plus: bcd.eta_plus,
            eta_minus: bcd.eta_minus,
            outer_iters: bcd.outer_iters,
            outer_tol: bcd.outer_tol,
            rho: admm.rho,
            inner_iters: admm.inner_iters,
            primal_tol: admm.primal_tol,
            domain_eps: admm.domain_eps,
            backtrack_max: admm.backtrack_max,
            gl_alpha: gl.alpha,
            gl_iters: gl.iters,
            gl_tol: gl.tol,
            sweep: SweepAxis::Hidden,
            hidden_counts: vec![1, 2, 3, 4, 5],
            signal_counts: vec![20, 50, 100, 200],
            trials: 20,
            tau_grid: TAU_GRID.to_vec(),
            relerr_norm: RelErrNorm::Spectral,
            chance_draws: 20,
            out: None,
        }
    }
}

fn config_err(e: sgl_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>, CliError> {
        if self.methods.is_empty() {
            return Err(CliError::Config("methods: list must not be empty".into()));
        }
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn gen(&self) -> GenConfig {
        GenConfig {
            n: self.n,
            p_edge: self.p_edge,
            neg_fraction: self.neg_fraction,
            k: self.k,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }

    pub fn bcd(&self) -> BcdConfig {
        BcdConfig {
            alpha_plus: self.alpha_plus,
            alpha_minus: self.alpha_minus,
            sigma_plus: self.sigma_plus,
            sigma_minus: self.sigma_minus,
            eta_plus: self.eta_plus,
            eta_minus: self.eta_minus,
            outer_iters: self.outer_iters,
            outer_tol: self.outer_tol,
        }
    }

    pub fn admm(&self) -> AdmmConfig {
        AdmmConfig {
            rho: self.rho,
            inner_iters: self.inner_iters,
            primal_tol: self.primal_tol,
            domain_eps: self.domain_eps,
            backtrack_max: self.backtrack_max,
        }
    }

    pub fn gl(&self) -> GlConfig {
        GlConfig {
            alpha: self.gl_alpha,
            iters: self.gl_iters,
            tol: self.gl_tol,
        }
    }

    pub fn hidden_or(&self, default: usize) -> usize {
        self.hidden.unwrap_or(default)
    }

    /// Checks every field; the error names the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        self.parsed_methods()?;
        self.gen().validate().map_err(config_err)?;
        self.bcd().validate().map_err(config_err)?;
        self.admm().validate().map_err(config_err)?;
        self.gl().validate().map_err(|e| CliError::Config(format!("gl_{e}")))?;
        if let Some(h) = self.hidden {
            if h + 2 > self.n {
                return Err(CliError::Config(format!(
                    "hidden: {h} hidden nodes leave fewer than 2 observed of n = {}",
                    self.n
                )));
            }
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials: must be at least 1".into()));
        }
        if self.tau_grid.is_empty() {
            return Err(CliError::Config("tau_grid: list must not be empty".into()));
        }
        if let Some(t) = self.tau_grid.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(CliError::Config(format!("tau_grid: {t} is outside [0, 1)")));
        }
        match self.sweep {
            SweepAxis::Hidden => {
                if self.hidden_counts.is_empty() {
                    return Err(CliError::Config("hidden_counts: list must not be empty".into()));
                }
                if let Some(h) = self.hidden_counts.iter().find(|&&h| h + 2 > self.n) {
                    return Err(CliError::Config(format!(
                        "hidden_counts: {h} leaves fewer than 2 observed of n = {}",
                        self.n
                    )));
                }
            }
            SweepAxis::Signals => {
                if self.signal_counts.is_empty() {
                    return Err(CliError::Config("signal_counts: list must not be empty".into()));
                }
                if self.signal_counts.contains(&0) {
                    return Err(CliError::Config("signal_counts: counts must be positive".into()));
                }
            }
            SweepAxis::None => {}
        }
        if self.chance_draws == 0 {
            return Err(CliError::Config("chance_draws: must be at least 1".into()));
        }
        Ok(())
    }
}
