//! Run configuration: built-in defaults, overridden by a JSON config
//! file, overridden by command-line flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qpo_core::compiler::VolatilityMode;
use qpo_core::solvers::SamplerConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Brute,
    Sa,
    Tabu,
    Constrained,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SolverKind::Brute => "brute",
            SolverKind::Sa => "sa",
            SolverKind::Tabu => "tabu",
            SolverKind::Constrained => "constrained",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum H4ModeArg {
    EqualityToZero,
    Linearized,
    SlackConstraint,
}

impl H4ModeArg {
    pub fn to_mode(self, n_assets: usize) -> VolatilityMode {
        match self {
            H4ModeArg::EqualityToZero => VolatilityMode::EqualityToZero,
            H4ModeArg::Linearized => {
                VolatilityMode::Linearized(qpo_core::compiler::uniform_linearization(n_assets))
            }
            H4ModeArg::SlackConstraint => VolatilityMode::SlackConstraint,
        }
    }
}

/// Effective configuration of one run. Serialized next to the outputs so
/// every run is reproducible from its artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub problem: Option<PathBuf>,
    /// Bits per asset (K).
    pub bits: usize,
    pub solver: SolverKind,
    pub h4_mode: H4ModeArg,
    pub seed: u64,
    pub reads: usize,
    pub sweeps: usize,
    pub tabu_tenure: usize,
    /// Penalty-weight overrides; defaults are derived from the problem.
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Uniform override for every linear-constraint weight.
    pub lambda3: Option<f64>,
    pub lambda4: Option<f64>,
    /// Adaptive-penalty growth factor.
    pub eta: f64,
    pub max_rounds: usize,
    pub time_limit_secs: Option<f64>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: None,
            bits: 10,
            solver: SolverKind::Sa,
            h4_mode: H4ModeArg::EqualityToZero,
            seed: 0,
            reads: 50,
            sweeps: 1000,
            tabu_tenure: 10,
            lambda1: None,
            lambda2: None,
            lambda3: None,
            lambda4: None,
            eta: 2.0,
            max_rounds: 20,
            time_limit_secs: None,
            out: PathBuf::from("out"),
        }
    }
}

/// Flag-level overrides shared by the pipeline subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// JSON config file mirroring the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem file (JSON).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Bits per asset (K).
    #[arg(long = "bits")]
    pub bits: Option<usize>,
    #[arg(long)]
    pub solver: Option<SolverKind>,
    #[arg(long = "h4-mode")]
    pub h4_mode: Option<H4ModeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampler restarts.
    #[arg(long)]
    pub reads: Option<usize>,
    /// Sweeps (or tabu moves) per read.
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long = "tabu-tenure")]
    pub tabu_tenure: Option<usize>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub lambda4: Option<f64>,
    /// Adaptive-penalty growth factor (> 1).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long = "max-rounds")]
    pub max_rounds: Option<usize>,
    #[arg(long = "time-limit")]
    pub time_limit_secs: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    /// defaults <- config file <- flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
                })?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                    CliError::Usage(format!("bad config file {}: {e}", path.display()))
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &self.problem {
            cfg.problem = Some(v.clone());
        }
        if let Some(v) = self.bits {
            cfg.bits = v;
        }
        if let Some(v) = self.solver {
            cfg.solver = v;
        }
        if let Some(v) = self.h4_mode {
            cfg.h4_mode = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.reads {
            cfg.reads = v;
        }
        if let Some(v) = self.sweeps {
            cfg.sweeps = v;
        }
        if let Some(v) = self.tabu_tenure {
            cfg.tabu_tenure = v;
        }
        if let Some(v) = self.lambda1 {
            cfg.lambda1 = Some(v);
        }
        if let Some(v) = self.lambda2 {
            cfg.lambda2 = Some(v);
        }
        if let Some(v) = self.lambda3 {
            cfg.lambda3 = Some(v);
        }
        if let Some(v) = self.lambda4 {
            cfg.lambda4 = Some(v);
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.max_rounds {
            cfg.max_rounds = v;
        }
        if let Some(v) = self.time_limit_secs {
            cfg.time_limit_secs = Some(v);
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if cfg.bits == 0 {
            return Err(CliError::Usage("--bits must be at least 1".into()));
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            num_reads: self.reads,
            sweeps: self.sweeps,
            tabu_tenure: self.tabu_tenure,
            time_limit: self.time_limit_secs.map(std::time::Duration::from_secs_f64),
            ..SamplerConfig::default()
        }
    }

    pub fn require_problem(&self) -> Result<&PathBuf, CliError> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Usage("no problem file given (--problem)".into()))
    }
}
