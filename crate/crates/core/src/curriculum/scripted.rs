use super::runner::{CurriculumProvider, ProviderError, ReviewContext};
use super::stage::{Adjustment, Curriculum, CurriculumError, Provenance, Stage, StageEnv};
use crate::mdp::EncodingSpec;
use crate::sim::EnvConfig;

pub const DEFAULT_WINDOW: usize = 20;
pub const S1_EPISODE_LEN: usize = 25;
pub const SLOW_VELOCITY: [f64; 2] = [0.5, 2.0];

/// Fraction of `|threshold|` removed when easing a stage.
pub const EASE_FRACTION: f64 = 0.25;

/// The fixed four-stage curriculum: connectivity, mobility, a scaled-down
/// QoE task, then the target task itself.
pub fn scripted_curriculum(
    target: &EnvConfig,
    spec: &EncodingSpec,
) -> Result<Curriculum, CurriculumError> {
    target
        .validate()
        .map_err(|e| CurriculumError::Schema(format!("target config: {e}")))?;
    let want = (target.num_ues, target.num_bs);
    let stage = |name: &str, m, n, velocity, episode_len, reward: &str, threshold, budget| Stage {
        name: name.to_string(),
        env: StageEnv {
            num_ues: m,
            num_bs: n,
            ue_velocity_range: velocity,
            episode_len,
            bs_positions: None,
        },
        reward: reward.to_string(),
        threshold,
        window: DEFAULT_WINDOW,
        max_env_steps: budget,
    };
    let stages = vec![
        stage("basic-connectivity", 2, 1, [0.0, 0.0], S1_EPISODE_LEN, "sum_connected()", 1.8, 50_000),
        stage("mobility", 2, 2, SLOW_VELOCITY, target.episode_len, "persistence()", 3.2, 50_000),
        stage(
            "preliminary-qoe",
            3,
            2,
            target.ue_velocity_range,
            target.episode_len,
            "mean_qoe()",
            0.5,
            100_000,
        ),
        stage(
            "target",
            want.0,
            want.1,
            target.ue_velocity_range,
            target.episode_len,
            "mean_qoe()",
            0.6,
            300_000,
        ),
    ];
    for (index, s) in stages.iter().enumerate() {
        let dims = (s.env.num_ues, s.env.num_bs);
        if dims.0 > want.0 || dims.1 > want.1 {
            return Err(CurriculumError::TargetTooSmall {
                index,
                stage: dims,
                target: want,
            });
        }
    }
    let raw = serde_json::to_string_pretty(&super::stage::CurriculumDoc {
        stages: stages.clone(),
    })
    .expect("curriculum serializes");
    Curriculum::new(stages, Provenance::Scripted, raw, target, spec)
}

/// Same stage with a lower pass mark.
pub fn eased(stage: &Stage) -> Stage {
    Stage {
        name: format!("{}-eased", stage.name),
        threshold: stage.threshold - EASE_FRACTION * stage.threshold.abs(),
        ..stage.clone()
    }
}

/// Deterministic fallback adjustment: an eased clone of the failing stage
/// followed by the failing stage and everything after it.
pub fn scripted_adjustment(curriculum: &Curriculum, s: usize) -> Adjustment {
    let mut tail = vec![eased(&curriculum.stages[s])];
    tail.extend(curriculum.stages[s..].iter().cloned());
    Adjustment::Replace(tail)
}

/// Provider that needs no network: the fixed curriculum and eased-stage
/// adjustments.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider;

impl CurriculumProvider for ScriptedProvider {
    fn generate(
        &mut self,
        target: &EnvConfig,
        spec: &EncodingSpec,
    ) -> Result<Curriculum, ProviderError> {
        scripted_curriculum(target, spec).map_err(|e| ProviderError(e.to_string()))
    }

    fn review(&mut self, ctx: &ReviewContext<'_>) -> Result<Adjustment, ProviderError> {
        Ok(scripted_adjustment(ctx.curriculum, ctx.stage))
    }
}
