use serde::Serialize;
use thiserror::Error;

use super::progress::{check_progress, Progress, RewardHistory};
use super::stage::{apply_adjustment, Adjustment, Curriculum};
use crate::mdp::{EncodingError, EncodingSpec};
use crate::ppo::PpoError;
use crate::reward::{self, RewardExpr};
use crate::sim::{ConfigError, EnvConfig, SimError};

/// Phase label used for runs without a curriculum.
pub const BASELINE_PHASE: &str = "baseline";
pub const BASELINE_REWARD: &str = "mean_qoe()";
pub const DEFAULT_SLOPE_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error("train_chunk called before begin_stage")]
    NoStage,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Per-episode statistics reported by a trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeSummary {
    /// Mean per-step stage reward.
    pub reward: f64,
    /// Mean per-step base reward (average QoE per UE).
    pub mean_qoe: f64,
    /// Mean per-step fraction of UEs with at least one link.
    pub connected_fraction: f64,
    /// UE-steps without a link while some BS was feasible.
    pub dropouts: u64,
    pub steps: u64,
    /// Env steps into the chunk at which the episode ended.
    pub end_offset: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChunkReport {
    pub env_steps: u64,
    pub episodes: Vec<EpisodeSummary>,
}

/// What the orchestrator needs from a learner: switch task, train one
/// rollout-sized chunk, expose parameter shapes.
pub trait StageTrainer {
    fn begin_stage(
        &mut self,
        env: EnvConfig,
        reward: RewardExpr,
        seed: u64,
    ) -> Result<(), TrainError>;
    fn train_chunk(&mut self) -> Result<ChunkReport, TrainError>;
    fn param_shapes(&self) -> Vec<(usize, usize)>;
    fn reset_optimizer(&mut self) {}
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("curriculum provider failed: {0}")]
pub struct ProviderError(pub String);

/// Everything a provider may look at when asked to review a stuck stage.
#[derive(Debug, Clone, Copy)]
pub struct ReviewContext<'a> {
    pub history: &'a RewardHistory,
    pub curriculum: &'a Curriculum,
    /// Index of the stagnating stage.
    pub stage: usize,
    pub target: &'a EnvConfig,
    pub spec: &'a EncodingSpec,
}

pub trait CurriculumProvider {
    fn generate(
        &mut self,
        target: &EnvConfig,
        spec: &EncodingSpec,
    ) -> Result<Curriculum, ProviderError>;
    fn review(&mut self, ctx: &ReviewContext<'_>) -> Result<Adjustment, ProviderError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumOptions {
    /// Defaults to the sum of stage budgets plus the final stage budget.
    pub global_step_budget: Option<u64>,
    pub slope_tol: f64,
    /// Keep training on the target stage after it passes until the global
    /// budget is spent.
    pub finish_budget_on_target: bool,
    pub reset_optimizer_on_transition: bool,
    pub seed: u64,
}

impl Default for CurriculumOptions {
    fn default() -> Self {
        Self {
            global_step_budget: None,
            slope_tol: DEFAULT_SLOPE_TOL,
            finish_budget_on_target: false,
            reset_optimizer_on_transition: false,
            seed: 0,
        }
    }
}

pub fn default_global_budget(curriculum: &Curriculum) -> u64 {
    let sum: u64 = curriculum.stages.iter().map(|s| s.max_env_steps).sum();
    sum + curriculum.stages.last().map_or(0, |s| s.max_env_steps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum CurriculumEvent {
    Enter { stage: usize, name: String, env_step: u64 },
    Advance { from: usize, env_step: u64 },
    Stagnant { stage: usize, env_step: u64 },
    Adjusted { stage: usize, revision: u32, num_stages: usize },
    Kept { stage: usize },
    AdjustmentRejected { stage: usize, reason: String },
    Regress { from: usize, to: usize },
    TargetReached { env_step: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum RunStatus {
    /// Every stage passed.
    Completed,
    BudgetExhausted,
    /// The provider gave up; history up to that point is kept.
    Aborted(String),
    /// The trainer reported an error.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumRun {
    /// The curriculum as executed, including adjustments.
    pub curriculum: Curriculum,
    pub history: RewardHistory,
    pub events: Vec<CurriculumEvent>,
    pub status: RunStatus,
    pub total_env_steps: u64,
    /// Env step at which the final stage first passed.
    pub target_reached_at: Option<u64>,
}

/// Episode notification with global coordinates.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeEvent<'a> {
    pub phase: &'a str,
    pub stage_index: usize,
    pub env_step: u64,
    /// Zero-based count over the whole run.
    pub episode: u64,
    pub summary: &'a EpisodeSummary,
}

fn stage_seed(seed: u64, visit: u64) -> u64 {
    seed ^ (visit + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Tally<'o> {
    total: u64,
    episodes: u64,
    observer: &'o mut dyn FnMut(&EpisodeEvent<'_>),
}

impl Tally<'_> {
    fn report(&mut self, phase: &str, stage_index: usize, report: &ChunkReport) -> Vec<f64> {
        for ep in &report.episodes {
            (self.observer)(&EpisodeEvent {
                phase,
                stage_index,
                env_step: self.total + ep.end_offset,
                episode: self.episodes,
                summary: ep,
            });
            self.episodes += 1;
        }
        self.total += report.env_steps;
        report.episodes.iter().map(|e| e.reward).collect()
    }
}

/// Trains through the curriculum: advance on a passed window, and on
/// stagnation ask the provider to adjust, then step back one stage.
pub fn run_curriculum<T, P>(
    trainer: &mut T,
    curriculum: Curriculum,
    target: &EnvConfig,
    spec: &EncodingSpec,
    provider: &mut P,
    options: &CurriculumOptions,
    observer: &mut dyn FnMut(&EpisodeEvent<'_>),
) -> CurriculumRun
where
    T: StageTrainer + ?Sized,
    P: CurriculumProvider + ?Sized,
{
    let budget = options
        .global_step_budget
        .unwrap_or_else(|| default_global_budget(&curriculum));
    let shapes = trainer.param_shapes();
    let mut run = CurriculumRun {
        curriculum,
        history: RewardHistory::default(),
        events: Vec::new(),
        status: RunStatus::BudgetExhausted,
        total_env_steps: 0,
        target_reached_at: None,
    };
    let mut tally = Tally {
        total: 0,
        episodes: 0,
        observer,
    };
    let mut s = 0usize;
    let mut visits = 0u64;
    let mut finishing = false;

    'stages: while tally.total < budget {
        if trainer.param_shapes() != shapes {
            run.status = RunStatus::Failed("parameter shapes changed between stages".into());
            break;
        }
        let stage = run.curriculum.stages[s].clone();
        let reward = stage.reward_expr().expect("validated curriculum");
        if let Err(e) = trainer.begin_stage(
            stage.env_config(target),
            reward,
            stage_seed(options.seed, visits),
        ) {
            run.status = RunStatus::Failed(e.to_string());
            break;
        }
        visits += 1;
        run.history.begin(s, &stage.name);
        run.events.push(CurriculumEvent::Enter {
            stage: s,
            name: stage.name.clone(),
            env_step: tally.total,
        });

        while tally.total < budget {
            let report = match trainer.train_chunk() {
                Ok(r) => r,
                Err(e) => {
                    run.status = RunStatus::Failed(e.to_string());
                    break 'stages;
                }
            };
            let rewards = tally.report(&stage.name, s, &report);
            run.history.record(&rewards, report.env_steps);
            if finishing {
                continue;
            }
            let seg = run.history.current().expect("segment begun");
            match check_progress(&seg.episode_rewards, seg.env_steps, &stage, options.slope_tol) {
                Progress::Continue => {}
                Progress::Advance => {
                    run.events.push(CurriculumEvent::Advance {
                        from: s,
                        env_step: tally.total,
                    });
                    if s + 1 == run.curriculum.len() {
                        run.target_reached_at = Some(tally.total);
                        run.events.push(CurriculumEvent::TargetReached {
                            env_step: tally.total,
                        });
                        run.status = RunStatus::Completed;
                        if options.finish_budget_on_target {
                            finishing = true;
                            continue;
                        }
                        break 'stages;
                    }
                    s += 1;
                    if options.reset_optimizer_on_transition {
                        trainer.reset_optimizer();
                    }
                    continue 'stages;
                }
                Progress::Stagnant => {
                    run.events.push(CurriculumEvent::Stagnant {
                        stage: s,
                        env_step: tally.total,
                    });
                    let ctx = ReviewContext {
                        history: &run.history,
                        curriculum: &run.curriculum,
                        stage: s,
                        target,
                        spec,
                    };
                    let adjustment = match provider.review(&ctx) {
                        Ok(a) => a,
                        Err(e) => {
                            run.status = RunStatus::Aborted(e.to_string());
                            break 'stages;
                        }
                    };
                    let event = match (&adjustment, apply_adjustment(&run.curriculum, s, &adjustment, target, spec)) {
                        (Adjustment::Keep, _) => CurriculumEvent::Kept { stage: s },
                        (_, Ok(c)) => {
                            run.curriculum = c;
                            CurriculumEvent::Adjusted {
                                stage: s,
                                revision: run.curriculum.revision,
                                num_stages: run.curriculum.len(),
                            }
                        }
                        (_, Err(e)) => {
                            log::warn!("adjustment at stage {s} rejected: {e}");
                            CurriculumEvent::AdjustmentRejected {
                                stage: s,
                                reason: e.to_string(),
                            }
                        }
                    };
                    run.events.push(event);
                    let to = s.saturating_sub(1);
                    run.events.push(CurriculumEvent::Regress { from: s, to });
                    s = to;
                    if options.reset_optimizer_on_transition {
                        trainer.reset_optimizer();
                    }
                    continue 'stages;
                }
            }
        }
    }
    run.total_env_steps = tally.total;
    run
}

/// Trains directly on the target task with the base reward until `budget`
/// env steps have been spent.
pub fn train_baseline<T: StageTrainer + ?Sized>(
    trainer: &mut T,
    target: &EnvConfig,
    budget: u64,
    seed: u64,
    observer: &mut dyn FnMut(&EpisodeEvent<'_>),
) -> Result<RewardHistory, TrainError> {
    let mut history = RewardHistory::default();
    history.begin(0, BASELINE_PHASE);
    if budget == 0 {
        return Ok(history);
    }
    let reward = reward::parse(BASELINE_REWARD).expect("baseline reward parses");
    trainer.begin_stage(target.clone(), reward, stage_seed(seed, 0))?;
    let mut tally = Tally {
        total: 0,
        episodes: 0,
        observer,
    };
    while tally.total < budget {
        let report = trainer.train_chunk()?;
        let rewards = tally.report(BASELINE_PHASE, 0, &report);
        history.record(&rewards, report.env_steps);
    }
    Ok(history)
}
