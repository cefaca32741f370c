use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::EncodingSpec;
use crate::reward::{self, ParseError, RewardExpr};
use crate::sim::{EnvConfig, Point};

/// Upper bound on curriculum length, including inserted eased stages.
pub const MAX_STAGES: usize = 64;

/// Environment overrides a stage applies on top of the target scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEnv {
    pub num_ues: usize,
    pub num_bs: usize,
    pub ue_velocity_range: [f64; 2],
    pub episode_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_positions: Option<Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub name: String,
    pub env: StageEnv,
    /// Reward expression source text.
    pub reward: String,
    /// Pass mark for the sliding-window mean of episode rewards.
    pub threshold: f64,
    /// Sliding window length in episodes.
    pub window: usize,
    pub max_env_steps: u64,
}

impl Stage {
    pub fn reward_expr(&self) -> Result<RewardExpr, ParseError> {
        reward::parse(&self.reward)
    }

    /// Target scenario with this stage's overrides applied.
    ///
    /// Without explicit positions the stage inherits the target layout when
    /// the BS count matches, otherwise it uses the grid layout.
    pub fn env_config(&self, target: &EnvConfig) -> EnvConfig {
        let bs_positions = match &self.env.bs_positions {
            Some(p) => Some(p.clone()),
            None if self.env.num_bs == target.num_bs => target.bs_positions.clone(),
            None => None,
        };
        EnvConfig {
            num_ues: self.env.num_ues,
            num_bs: self.env.num_bs,
            ue_velocity_range: self.env.ue_velocity_range,
            episode_len: self.env.episode_len,
            bs_positions,
            ..target.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Scripted,
    Llm,
    Replay,
}

/// Wire form of a curriculum: the JSON document an LLM is asked to emit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumDoc {
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curriculum {
    pub stages: Vec<Stage>,
    pub provenance: Provenance,
    /// Text the curriculum was generated from, kept for audit.
    pub raw_text: String,
    /// Number of accepted adjustments applied so far.
    pub revision: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum CurriculumError {
    #[error("curriculum JSON does not match the schema: {0}")]
    Schema(String),
    #[error("curriculum has no stages")]
    Empty,
    #[error("curriculum has {0} stages, limit is {MAX_STAGES}")]
    TooManyStages(usize),
    #[error("stage {index}: {reason}")]
    Stage { index: usize, reason: String },
    #[error("stage {index}: reward expression: {error}")]
    Reward { index: usize, error: ParseError },
    #[error("final stage is {got:?} (UEs, BSs) but the target task is {target:?}")]
    FinalStageMismatch {
        got: (usize, usize),
        target: (usize, usize),
    },
    #[error("target task {target:?} is smaller than stage {index} ({stage:?})")]
    TargetTooSmall {
        index: usize,
        stage: (usize, usize),
        target: (usize, usize),
    },
    #[error("cannot adjust at stage {stage}: curriculum has {len} stages")]
    AdjustIndex { stage: usize, len: usize },
}

fn stage_error(index: usize, reason: impl Into<String>) -> CurriculumError {
    CurriculumError::Stage {
        index,
        reason: reason.into(),
    }
}

/// Checks one stage in isolation.
pub fn validate_stage(
    index: usize,
    stage: &Stage,
    target: &EnvConfig,
    spec: &EncodingSpec,
) -> Result<(), CurriculumError> {
    if stage.name.trim().is_empty() {
        return Err(stage_error(index, "name is empty"));
    }
    if stage.threshold.is_nan() || stage.threshold == f64::INFINITY {
        return Err(stage_error(index, "threshold must be a number below +inf"));
    }
    if stage.window == 0 {
        return Err(stage_error(index, "window must be at least 1"));
    }
    if stage.max_env_steps == 0 {
        return Err(stage_error(index, "max_env_steps must be at least 1"));
    }
    let (m, n) = (stage.env.num_ues, stage.env.num_bs);
    if !spec.fits(m, n) {
        return Err(stage_error(
            index,
            format!(
                "{m} UEs x {n} BSs exceeds the {}x{} encoding",
                spec.m_max, spec.n_max
            ),
        ));
    }
    stage
        .env_config(target)
        .validate()
        .map_err(|e| stage_error(index, e.to_string()))?;
    stage
        .reward_expr()
        .map_err(|error| CurriculumError::Reward { index, error })?;
    Ok(())
}

/// Full validation: every stage, the length cap, and the final stage
/// matching the target task dimensions.
pub fn validate_stages(
    stages: &[Stage],
    target: &EnvConfig,
    spec: &EncodingSpec,
) -> Result<(), CurriculumError> {
    if stages.is_empty() {
        return Err(CurriculumError::Empty);
    }
    if stages.len() > MAX_STAGES {
        return Err(CurriculumError::TooManyStages(stages.len()));
    }
    for (index, stage) in stages.iter().enumerate() {
        validate_stage(index, stage, target, spec)?;
    }
    let last = &stages[stages.len() - 1].env;
    let got = (last.num_ues, last.num_bs);
    let want = (target.num_ues, target.num_bs);
    if got != want {
        return Err(CurriculumError::FinalStageMismatch { got, target: want });
    }
    Ok(())
}

impl Curriculum {
    pub fn new(
        stages: Vec<Stage>,
        provenance: Provenance,
        raw_text: String,
        target: &EnvConfig,
        spec: &EncodingSpec,
    ) -> Result<Self, CurriculumError> {
        validate_stages(&stages, target, spec)?;
        Ok(Self {
            stages,
            provenance,
            raw_text,
            revision: 0,
        })
    }

    /// Parses and validates a curriculum document.
    pub fn from_json(
        text: &str,
        provenance: Provenance,
        target: &EnvConfig,
        spec: &EncodingSpec,
    ) -> Result<Self, CurriculumError> {
        let doc: CurriculumDoc =
            serde_json::from_str(text).map_err(|e| CurriculumError::Schema(e.to_string()))?;
        Self::new(doc.stages, provenance, text.to_string(), target, spec)
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn to_doc(&self) -> CurriculumDoc {
        CurriculumDoc {
            stages: self.stages.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("curriculum serializes")
    }
}

/// Requested change to the stages from the failing stage onward.
#[derive(Debug, Clone, PartialEq)]
pub enum Adjustment {
    Keep,
    /// Replacement for `stages[s..]`.
    Replace(Vec<Stage>),
}

/// Applies an adjustment at failing stage `s`, keeping `stages[..s]`.
///
/// The result is validated like any other curriculum; on error the caller
/// keeps the original.
pub fn apply_adjustment(
    curriculum: &Curriculum,
    s: usize,
    adjustment: &Adjustment,
    target: &EnvConfig,
    spec: &EncodingSpec,
) -> Result<Curriculum, CurriculumError> {
    let tail = match adjustment {
        Adjustment::Keep => return Ok(curriculum.clone()),
        Adjustment::Replace(tail) => tail,
    };
    if s >= curriculum.len() {
        return Err(CurriculumError::AdjustIndex {
            stage: s,
            len: curriculum.len(),
        });
    }
    let mut stages = curriculum.stages[..s].to_vec();
    stages.extend(tail.iter().cloned());
    validate_stages(&stages, target, spec)?;
    Ok(Curriculum {
        stages,
        provenance: curriculum.provenance,
        raw_text: curriculum.raw_text.clone(),
        revision: curriculum.revision + 1,
    })
}
