//! Experiment plumbing: run configuration, training runs with their
//! on-disk artifacts, generalization evaluation and run comparison.
//!
//! A run directory holds `model.json`, `metrics.csv`, `curriculum.json`
//! and `manifest.json`. The manifest embeds the resolved configuration, so
//! a run can be repeated from it.

mod compare;
mod eval;
mod metrics;
mod train;

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{
    compare_runs, load_run, steps_to_threshold, write_compare, CompareOutput, CurvePoint,
    LoadedRun, SummaryRow, DEFAULT_BIN_STEPS,
};
pub use eval::{
    evaluate, evaluate_model, greedy_proposal, group_by_nearest_bs, shuffled_bs_positions,
    write_eval, EvalOptions, EvalRow,
};
pub use metrics::{read_metrics, write_metrics, MetricsRow};
pub use train::{
    cmd_train, make_provider, run_id, run_seed, write_run, Manifest, RunOutcome,
};

use crate::curriculum::{DEFAULT_SLOPE_TOL, DEFAULT_WINDOW};
use crate::mdp::EncodingSpec;
use crate::ppo::PpoConfig;
use crate::sim::EnvConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Curriculum,
    Baseline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Curriculum => "curriculum",
            Mode::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Scripted,
    Llm,
    Record,
    Replay,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Scripted => "scripted",
            ProviderKind::Llm => "llm",
            ProviderKind::Record => "record",
            ProviderKind::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub provider: ProviderKind,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub encoding: EncodingSpec,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Env steps per run. Defaults to the scripted curriculum's budget
    /// (sum of stage budgets plus the final one) for both modes.
    pub total_step_budget: Option<u64>,
    /// Overrides the pass mark of the curriculum's final stage.
    pub target_threshold: Option<f64>,
    pub slope_tol: f64,
    /// Keep training on the target stage after it passes.
    pub finish_budget_on_target: bool,
    pub reset_optimizer_on_transition: bool,
    pub llm_endpoint: Option<String>,
    pub cassette: Option<PathBuf>,
    pub llm_model: String,
    pub llm_temperature: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Curriculum,
            provider: ProviderKind::Scripted,
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            encoding: EncodingSpec::default(),
            seeds: vec![0],
            output_dir: PathBuf::from("runs"),
            total_step_budget: None,
            target_threshold: None,
            slope_tol: DEFAULT_SLOPE_TOL,
            finish_budget_on_target: true,
            reset_optimizer_on_transition: false,
            llm_endpoint: None,
            cassette: None,
            llm_model: crate::llm::DEFAULT_MODEL.to_string(),
            llm_temperature: crate::llm::DEFAULT_TEMPERATURE,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        self.env
            .validate()
            .map_err(|e| ExperimentError::Config(format!("env: {e}")))?;
        self.ppo
            .validate()
            .map_err(|e| ExperimentError::Config(format!("ppo: {e}")))?;
        if !self.encoding.fits(self.env.num_ues, self.env.num_bs) {
            return bad(format!(
                "target {}x{} does not fit the {}x{} encoding",
                self.env.num_ues, self.env.num_bs, self.encoding.m_max, self.encoding.n_max
            ));
        }
        if let Some(t) = self.target_threshold {
            if t.is_nan() || t == f64::INFINITY {
                return bad("target_threshold must be a number below +inf".into());
            }
        }
        if !(self.slope_tol.is_finite()) {
            return bad("slope_tol must be finite".into());
        }
        if self.mode == Mode::Curriculum {
            match self.provider {
                ProviderKind::Scripted => {}
                ProviderKind::Llm if self.llm_endpoint.is_none() => {
                    return bad("llm provider needs llm_endpoint".into())
                }
                ProviderKind::Record if self.llm_endpoint.is_none() || self.cassette.is_none() => {
                    return bad("record provider needs llm_endpoint and cassette".into())
                }
                ProviderKind::Replay if self.cassette.is_none() => {
                    return bad("replay provider needs cassette".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Accepts either a run configuration or a run manifest, whose embedded
    /// configuration is used with the manifest's seed.
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let config = if value.get("run_id").is_some() && value.get("config").is_some() {
            let manifest: Manifest =
                serde_json::from_value(value).map_err(|e| ExperimentError::Config(e.to_string()))?;
            RunConfig {
                seeds: vec![manifest.seed],
                ..manifest.config
            }
        } else {
            serde_json::from_value(value).map_err(|e| ExperimentError::Config(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }
}

/// Default sliding window for steps-to-threshold.
pub const COMPARE_WINDOW: usize = DEFAULT_WINDOW;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Data(String),
}

impl ExperimentError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Io { .. } | ExperimentError::Data(_) => 2,
            ExperimentError::Provider(_) => 3,
            ExperimentError::Invariant(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| ExperimentError::Io { path, source }
    }
}
