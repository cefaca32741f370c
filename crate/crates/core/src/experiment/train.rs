use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{write_metrics, MetricsRow};
use super::{ExperimentError, Mode, ProviderKind, RunConfig};
use crate::curriculum::{
    default_global_budget, run_curriculum, scripted_curriculum, train_baseline, Curriculum,
    CurriculumOptions, CurriculumProvider, EpisodeEvent, PpoTrainer, Provenance, RunStatus,
    ScriptedProvider, TrainError,
};
use crate::llm::{LlmClient, ReplayTransport};
use crate::ppo::{save_model, Agent};

/// Written next to the metrics; enough to repeat the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub seed: u64,
    pub mode: Mode,
    pub crate_version: String,
    /// Resolved configuration: one seed, explicit step budget, and a
    /// recording provider turned into replay of the same cassette.
    pub config: RunConfig,
    pub status: serde_json::Value,
    pub total_env_steps: u64,
    pub target_reached_at: Option<u64>,
    pub episodes: u64,
    pub events: serde_json::Value,
}

pub struct RunOutcome {
    pub run_id: String,
    pub metrics: Vec<MetricsRow>,
    /// The curriculum as executed, for curriculum runs.
    pub curriculum: Option<Curriculum>,
    pub agent: Agent,
    pub manifest: Manifest,
    /// Set when the run stopped early; artifacts are still worth writing.
    pub error: Option<ExperimentError>,
}

pub fn run_id(mode: Mode, seed: u64) -> String {
    format!("{}-seed{seed}", mode.as_str())
}

/// Builds the curriculum provider named by the configuration.
pub fn make_provider(
    config: &RunConfig,
) -> Result<Box<dyn CurriculumProvider>, ExperimentError> {
    fn tune<T>(mut c: LlmClient<T>, config: &RunConfig) -> LlmClient<T> {
        c.model = config.llm_model.clone();
        c.temperature = config.llm_temperature;
        c
    }
    match config.provider {
        ProviderKind::Scripted => Ok(Box::new(ScriptedProvider)),
        ProviderKind::Replay => {
            let path = config
                .cassette
                .as_deref()
                .ok_or_else(|| ExperimentError::Config("replay needs a cassette".into()))?;
            let t = ReplayTransport::open(path)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(Box::new(tune(LlmClient::new(t, Provenance::Replay), config)))
        }
        #[cfg(feature = "http")]
        ProviderKind::Llm | ProviderKind::Record => {
            use crate::llm::{HttpTransport, RecordingTransport, Transport};
            let endpoint = config
                .llm_endpoint
                .as_deref()
                .ok_or_else(|| ExperimentError::Config("llm provider needs an endpoint".into()))?;
            let http = HttpTransport::new(endpoint);
            let transport: Box<dyn Transport> = match (&config.provider, &config.cassette) {
                (ProviderKind::Record, Some(path)) => Box::new(
                    RecordingTransport::create(http, path)
                        .map_err(|e| ExperimentError::Config(e.to_string()))?,
                ),
                (ProviderKind::Record, None) => {
                    return Err(ExperimentError::Config("record needs a cassette path".into()))
                }
                _ => Box::new(http),
            };
            Ok(Box::new(tune(LlmClient::new(transport, Provenance::Llm), config)))
        }
        #[cfg(not(feature = "http"))]
        ProviderKind::Llm | ProviderKind::Record => Err(ExperimentError::Config(
            "built without the `http` feature; only scripted and replay providers work".into(),
        )),
    }
}

fn resolved_budget(config: &RunConfig, curriculum: Option<&Curriculum>) -> Result<u64, ExperimentError> {
    if let Some(b) = config.total_step_budget {
        return Ok(b);
    }
    match curriculum {
        Some(c) => Ok(default_global_budget(c)),
        None => scripted_curriculum(&config.env, &config.encoding)
            .map(|c| default_global_budget(&c))
            .map_err(|e| {
                ExperimentError::Config(format!(
                    "no default step budget for this target ({e}); set total_step_budget"
                ))
            }),
    }
}

fn train_error(e: TrainError) -> ExperimentError {
    match e {
        TrainError::Config(e) => ExperimentError::Config(e.to_string()),
        TrainError::Encoding(e) => ExperimentError::Config(e.to_string()),
        e => ExperimentError::Invariant(e.to_string()),
    }
}

/// Trains one seed in memory. `provider` is used only in curriculum mode.
pub fn run_seed(
    config: &RunConfig,
    seed: u64,
    provider: &mut dyn CurriculumProvider,
) -> Result<RunOutcome, ExperimentError> {
    config.validate()?;
    let id = run_id(config.mode, seed);
    let agent = Agent::new(config.ppo.clone(), config.encoding, seed)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut trainer = PpoTrainer::new(agent);
    let mut metrics = Vec::new();
    let mut observer = |ev: &EpisodeEvent<'_>| {
        metrics.push(MetricsRow {
            run_id: id.clone(),
            seed,
            phase: ev.phase.to_string(),
            env_step: ev.env_step,
            episode: ev.episode,
            mean_episode_reward: ev.summary.reward,
            mean_qoe: ev.summary.mean_qoe,
            connected_fraction: ev.summary.connected_fraction,
            dropouts: ev.summary.dropouts,
        });
    };

    let (curriculum, status, total, reached, events, error) = match config.mode {
        Mode::Baseline => {
            let budget = resolved_budget(config, None)?;
            let history = train_baseline(&mut trainer, &config.env, budget, seed, &mut observer)
                .map_err(train_error)?;
            let status = serde_json::to_value(RunStatus::BudgetExhausted).expect("serializes");
            (None, status, history.total_env_steps(), None, serde_json::json!([]), None)
        }
        Mode::Curriculum => {
            let mut curriculum = provider
                .generate(&config.env, &config.encoding)
                .map_err(|e| ExperimentError::Provider(e.to_string()))?;
            if let Some(t) = config.target_threshold {
                let last = curriculum.stages.len() - 1;
                curriculum.stages[last].threshold = t;
            }
            let options = CurriculumOptions {
                global_step_budget: Some(resolved_budget(config, Some(&curriculum))?),
                slope_tol: config.slope_tol,
                finish_budget_on_target: config.finish_budget_on_target,
                reset_optimizer_on_transition: config.reset_optimizer_on_transition,
                seed,
            };
            let run = run_curriculum(
                &mut trainer,
                curriculum,
                &config.env,
                &config.encoding,
                provider,
                &options,
                &mut observer,
            );
            let error = match &run.status {
                RunStatus::Aborted(m) => Some(ExperimentError::Provider(m.clone())),
                RunStatus::Failed(m) => Some(ExperimentError::Invariant(m.clone())),
                _ => None,
            };
            (
                Some(run.curriculum),
                serde_json::to_value(&run.status).expect("serializes"),
                run.total_env_steps,
                run.target_reached_at,
                serde_json::to_value(&run.events).expect("serializes"),
                error,
            )
        }
    };

    let mut resolved = config.clone();
    resolved.seeds = vec![seed];
    resolved.total_step_budget = Some(resolved_budget(config, curriculum.as_ref())?);
    if resolved.provider == ProviderKind::Record {
        resolved.provider = ProviderKind::Replay;
    }
    let manifest = Manifest {
        run_id: id.clone(),
        seed,
        mode: config.mode,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: resolved,
        status,
        total_env_steps: total,
        target_reached_at: reached,
        episodes: metrics.len() as u64,
        events,
    };
    Ok(RunOutcome {
        run_id: id,
        metrics,
        curriculum,
        agent: trainer.into_agent(),
        manifest,
        error,
    })
}

/// Writes the run's artifacts into `<root>/<run_id>/`.
pub fn write_run(outcome: &RunOutcome, root: &Path) -> Result<PathBuf, ExperimentError> {
    let dir = root.join(&outcome.run_id);
    fs::create_dir_all(&dir).map_err(ExperimentError::io(&dir))?;
    save_model(
        &outcome.agent.params,
        &outcome.agent.spec,
        &dir.join("model.json"),
    )
    .map_err(|e| ExperimentError::Data(format!("{}: {e}", dir.display())))?;
    write_metrics(&dir.join("metrics.csv"), &outcome.metrics)?;
    if let Some(c) = &outcome.curriculum {
        let path = dir.join("curriculum.json");
        fs::write(&path, c.to_json()).map_err(ExperimentError::io(&path))?;
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&outcome.manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(ExperimentError::io(&path))?;
    Ok(dir)
}

/// Trains every configured seed and writes one run directory per seed.
/// Stops at the first failing seed after writing what it produced.
pub fn cmd_train(config: &RunConfig) -> Result<Vec<PathBuf>, ExperimentError> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(ExperimentError::io(&config.output_dir))?;
    let mut provider: Box<dyn CurriculumProvider> = match config.mode {
        Mode::Curriculum => make_provider(config)?,
        Mode::Baseline => Box::new(ScriptedProvider),
    };
    let mut dirs = Vec::new();
    for &seed in &config.seeds {
        let mut outcome = run_seed(config, seed, provider.as_mut())?;
        let dir = write_run(&outcome, &config.output_dir)?;
        log::info!(
            "{}: {} episodes, {} env steps -> {}",
            outcome.run_id,
            outcome.metrics.len(),
            outcome.manifest.total_env_steps,
            dir.display()
        );
        if let Some(e) = outcome.error.take() {
            return Err(e);
        }
        dirs.push(dir);
    }
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::PpoConfig;
    use crate::sim::EnvConfig;

    fn tiny(mode: Mode, dir: &Path) -> RunConfig {
        RunConfig {
            mode,
            env: EnvConfig {
                episode_len: 16,
                ..EnvConfig::default()
            },
            ppo: PpoConfig {
                rollout_len: 64,
                minibatch: 32,
                epochs_per_update: 1,
                ..PpoConfig::default()
            },
            seeds: vec![3],
            output_dir: dir.to_path_buf(),
            total_step_budget: Some(256),
            ..RunConfig::default()
        }
    }

    #[test]
    fn artifacts_and_rerun_from_manifest() {
        let dir = tempfile::tempdir().unwrap();
        for mode in [Mode::Baseline, Mode::Curriculum] {
            let config = tiny(mode, dir.path());
            let dirs = cmd_train(&config).unwrap();
            let run = &dirs[0];
            assert!(run.ends_with(run_id(mode, 3)));
            for f in ["model.json", "metrics.csv", "manifest.json"] {
                assert!(run.join(f).exists(), "{f}");
            }
            assert_eq!(run.join("curriculum.json").exists(), mode == Mode::Curriculum);
            let first = fs::read(run.join("metrics.csv")).unwrap();

            let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
            let mut again = RunConfig::from_json(&manifest).unwrap();
            assert_eq!(again.seeds, vec![3]);
            again.output_dir = dir.path().join("again");
            let dirs = cmd_train(&again).unwrap();
            assert_eq!(fs::read(dirs[0].join("metrics.csv")).unwrap(), first);
        }
    }

    #[test]
    fn baseline_without_default_budget_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            env: EnvConfig {
                num_ues: 1,
                num_bs: 1,
                ..EnvConfig::default()
            },
            total_step_budget: None,
            ..tiny(Mode::Baseline, dir.path())
        };
        let e = cmd_train(&config).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
    }
}
