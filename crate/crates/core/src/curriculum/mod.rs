//! Curriculum data model and the stage loop.
//!
//! A curriculum is an ordered list of stages, each an environment override,
//! a reward expression and a pass threshold. [`run_curriculum`] trains
//! through it, advancing when the sliding-window mean of episode rewards
//! reaches the threshold. When a stage stagnates the provider may rewrite
//! the remaining stages and training steps back one stage.

mod progress;
mod runner;
mod scripted;
mod stage;
mod trainer;

pub use progress::{check_progress, least_squares_slope, Progress, RewardHistory, StageSegment};
pub use runner::{
    default_global_budget, run_curriculum, train_baseline, ChunkReport, CurriculumEvent,
    CurriculumOptions, CurriculumProvider, CurriculumRun, EpisodeEvent, EpisodeSummary,
    ProviderError, ReviewContext, RunStatus, StageTrainer, TrainError, BASELINE_PHASE,
    BASELINE_REWARD, DEFAULT_SLOPE_TOL,
};
pub use scripted::{
    eased, scripted_adjustment, scripted_curriculum, ScriptedProvider, DEFAULT_WINDOW,
    EASE_FRACTION, S1_EPISODE_LEN, SLOW_VELOCITY,
};
pub use stage::{
    apply_adjustment, validate_stage, validate_stages, Adjustment, Curriculum, CurriculumDoc,
    CurriculumError, Provenance, Stage, StageEnv, MAX_STAGES,
};
pub use trainer::PpoTrainer;

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::mdp::EncodingSpec;
    use crate::reward::RewardExpr;
    use crate::sim::EnvConfig;

    type Script = Box<dyn FnMut(&str, usize, usize) -> f64>;

    /// Emits one episode per chunk whose reward comes from
    /// `script(stage_name, visit_of_that_name, episode_in_visit)`.
    struct ScriptedTrainer {
        script: Script,
        visits: HashMap<String, usize>,
        current: Option<(String, usize, usize)>,
        chunk_steps: u64,
        reward_by_num_ues: HashMap<usize, String>,
    }

    impl ScriptedTrainer {
        fn new(script: impl FnMut(&str, usize, usize) -> f64 + 'static) -> Self {
            Self {
                script: Box::new(script),
                visits: HashMap::new(),
                current: None,
                chunk_steps: 10,
                reward_by_num_ues: HashMap::new(),
            }
        }
    }

    impl StageTrainer for ScriptedTrainer {
        fn begin_stage(
            &mut self,
            env: EnvConfig,
            reward: RewardExpr,
            _seed: u64,
        ) -> Result<(), TrainError> {
            // Stages are told apart by (num_ues, reward, episode_len).
            let name = format!("{}:{}:{}", env.num_ues, reward, env.episode_len);
            self.reward_by_num_ues.insert(env.num_ues, reward.to_string());
            let visit = self.visits.entry(name.clone()).or_insert(0);
            self.current = Some((name, *visit, 0));
            *visit += 1;
            Ok(())
        }

        fn train_chunk(&mut self) -> Result<ChunkReport, TrainError> {
            let (name, visit, ep) = self.current.as_mut().ok_or(TrainError::NoStage)?;
            let reward = (self.script)(name, *visit, *ep);
            *ep += 1;
            Ok(ChunkReport {
                env_steps: self.chunk_steps,
                episodes: vec![EpisodeSummary {
                    reward,
                    mean_qoe: 0.0,
                    connected_fraction: 0.0,
                    dropouts: 0,
                    steps: self.chunk_steps,
                    end_offset: self.chunk_steps,
                }],
            })
        }

        fn param_shapes(&self) -> Vec<(usize, usize)> {
            vec![(45, 64)]
        }
    }

    fn stage(name: &str, m: usize, n: usize, len: usize, threshold: f64) -> Stage {
        Stage {
            name: name.into(),
            env: StageEnv {
                num_ues: m,
                num_bs: n,
                ue_velocity_range: [0.0, 1.0],
                episode_len: len,
                bs_positions: None,
            },
            reward: "mean_qoe()".into(),
            threshold,
            window: 2,
            max_env_steps: 1_000,
        }
    }

    fn three_stages() -> Curriculum {
        let stages = vec![
            stage("a", 2, 1, 11, 1.0),
            stage("b", 2, 2, 12, 1.0),
            stage("c", 5, 3, 13, 1.0),
        ];
        Curriculum::new(
            stages,
            Provenance::Scripted,
            String::new(),
            &EnvConfig::default(),
            &EncodingSpec::default(),
        )
        .unwrap()
    }

    fn run(
        trainer: &mut ScriptedTrainer,
        curriculum: Curriculum,
        provider: &mut dyn CurriculumProvider,
    ) -> CurriculumRun {
        run_curriculum(
            trainer,
            curriculum,
            &EnvConfig::default(),
            &EncodingSpec::default(),
            provider,
            &CurriculumOptions::default(),
            &mut |_| {},
        )
    }

    fn entered(run: &CurriculumRun) -> Vec<String> {
        run.events
            .iter()
            .filter_map(|e| match e {
                CurriculumEvent::Enter { name, .. } => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn passing_every_window_walks_straight_through() {
        let mut t = ScriptedTrainer::new(|_, _, _| 1.0);
        let r = run(&mut t, three_stages(), &mut ScriptedProvider);
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(entered(&r), ["a", "b", "c"]);
        // Two episodes of 10 steps per stage.
        assert_eq!(r.total_env_steps, 60);
        assert_eq!(r.target_reached_at, Some(60));
    }

    #[test]
    fn window_mean_above_threshold_advances() {
        let mut c = three_stages();
        for s in &mut c.stages {
            s.threshold = 0.8;
        }
        let mut t = ScriptedTrainer::new(|_, _, _| 0.85);
        let r = run(&mut t, c, &mut ScriptedProvider);
        assert!(matches!(r.events[1], CurriculumEvent::Advance { from: 0, .. }));
        assert_eq!(r.status, RunStatus::Completed);
    }

    #[test]
    fn stagnation_adjusts_and_regresses() {
        // b is flat at 0.8 on the first visit, the eased b (threshold 0.75)
        // then passes, and the real b passes on its second visit.
        let mut t = ScriptedTrainer::new(|name, visit, _| {
            match (name, visit) {
                ("2:mean_qoe():12", 0) => 0.8,
                _ => 1.0,
            }
        });
        let r = run(&mut t, three_stages(), &mut ScriptedProvider);
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(entered(&r), ["a", "b", "a", "b-eased", "b", "c"]);
        let names: Vec<&str> = r.curriculum.stages.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["a", "b-eased", "b", "c"]);
        assert_eq!(r.curriculum.revision, 1);
        assert!(r.events.contains(&CurriculumEvent::Stagnant { stage: 1, env_step: 60 }));
        assert!(r.events.contains(&CurriculumEvent::Regress { from: 1, to: 0 }));
        assert!(r.events.contains(&CurriculumEvent::Adjusted {
            stage: 1,
            revision: 1,
            num_stages: 4
        }));
        // Passed stage a is untouched.
        assert_eq!(r.curriculum.stages[0], three_stages().stages[0]);
        assert_stage_deltas(&r);
    }

    #[test]
    fn stagnation_at_first_stage_stays_at_first_stage() {
        let mut t = ScriptedTrainer::new(|name, visit, _| match (name, visit) {
            ("2:mean_qoe():11", 0) => 0.1,
            _ => 1.0,
        });
        let r = run(&mut t, three_stages(), &mut ScriptedProvider);
        assert!(r.events.contains(&CurriculumEvent::Regress { from: 0, to: 0 }));
        assert_eq!(entered(&r)[..2], ["a", "a-eased"]);
        assert_eq!(r.status, RunStatus::Completed);
    }

    #[test]
    fn single_stage_with_negative_infinite_threshold_completes_after_one_window() {
        let mut s = stage("only", 5, 3, 10, f64::NEG_INFINITY);
        s.window = 3;
        let c = Curriculum::new(
            vec![s],
            Provenance::Scripted,
            String::new(),
            &EnvConfig::default(),
            &EncodingSpec::default(),
        )
        .unwrap();
        let mut t = ScriptedTrainer::new(|_, _, _| -5.0);
        let r = run(&mut t, c, &mut ScriptedProvider);
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(r.history.total_updates(), 3);
    }

    struct Failing;
    impl CurriculumProvider for Failing {
        fn generate(&mut self, _: &EnvConfig, _: &EncodingSpec) -> Result<Curriculum, ProviderError> {
            Err(ProviderError("down".into()))
        }
        fn review(&mut self, _: &ReviewContext<'_>) -> Result<Adjustment, ProviderError> {
            Err(ProviderError("down".into()))
        }
    }

    #[test]
    fn provider_failure_aborts_with_history() {
        let mut t = ScriptedTrainer::new(|name, _, _| if name.starts_with("5:") { 0.0 } else { 1.0 });
        let r = run(&mut t, three_stages(), &mut Failing);
        assert!(matches!(r.status, RunStatus::Aborted(_)));
        assert_eq!(r.history.segments.len(), 3);
        assert_eq!(r.history.stage_rewards(2), vec![0.0; 4]);
    }

    /// Returns one fixed adjustment on every review.
    struct Fixed(Adjustment);
    impl CurriculumProvider for Fixed {
        fn generate(&mut self, _: &EnvConfig, _: &EncodingSpec) -> Result<Curriculum, ProviderError> {
            unimplemented!()
        }
        fn review(&mut self, _: &ReviewContext<'_>) -> Result<Adjustment, ProviderError> {
            Ok(self.0.clone())
        }
    }

    fn budgeted(budget: u64) -> CurriculumOptions {
        CurriculumOptions {
            global_step_budget: Some(budget),
            ..CurriculumOptions::default()
        }
    }

    #[test]
    fn invalid_adjustment_keeps_original() {
        let mut bad = three_stages().stages[1..].to_vec();
        bad[0].reward = "qoe_bonus()".into();
        let mut t = ScriptedTrainer::new(|name, _, _| if name.starts_with("2:mean_qoe():12") { 0.5 } else { 1.0 });
        let r = run_curriculum(
            &mut t,
            three_stages(),
            &EnvConfig::default(),
            &EncodingSpec::default(),
            &mut Fixed(Adjustment::Replace(bad)),
            &budgeted(200),
            &mut |_| {},
        );
        assert_eq!(r.curriculum, three_stages());
        assert!(r
            .events
            .iter()
            .any(|e| matches!(e, CurriculumEvent::AdjustmentRejected { stage: 1, .. })));
        assert_eq!(r.status, RunStatus::BudgetExhausted);
        assert_eq!(r.total_env_steps, 200);
        assert_stage_deltas(&r);
    }

    #[test]
    fn keep_leaves_curriculum_unchanged() {
        let mut t = ScriptedTrainer::new(|name, _, _| if name.starts_with("5:") { 0.5 } else { 1.0 });
        let r = run_curriculum(
            &mut t,
            three_stages(),
            &EnvConfig::default(),
            &EncodingSpec::default(),
            &mut Fixed(Adjustment::Keep),
            &budgeted(300),
            &mut |_| {},
        );
        assert_eq!(r.curriculum, three_stages());
        assert!(r.events.contains(&CurriculumEvent::Kept { stage: 2 }));
        assert!(r.events.contains(&CurriculumEvent::Regress { from: 2, to: 1 }));
    }

    #[test]
    fn default_budget_bounds_total_steps() {
        let mut t = ScriptedTrainer::new(|_, _, _| 0.0);
        let c = three_stages();
        let bound = default_global_budget(&c);
        assert_eq!(bound, 4_000);
        let r = run(&mut t, c, &mut ScriptedProvider);
        assert_eq!(r.status, RunStatus::BudgetExhausted);
        assert!(r.total_env_steps <= bound);
    }

    #[test]
    fn finishing_on_target_spends_the_budget() {
        let mut t = ScriptedTrainer::new(|_, _, _| 1.0);
        let options = CurriculumOptions {
            global_step_budget: Some(150),
            finish_budget_on_target: true,
            ..CurriculumOptions::default()
        };
        let mut seen = Vec::new();
        let r = run_curriculum(
            &mut t,
            three_stages(),
            &EnvConfig::default(),
            &EncodingSpec::default(),
            &mut ScriptedProvider,
            &options,
            &mut |e| seen.push((e.phase.to_string(), e.env_step, e.episode)),
        );
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(r.target_reached_at, Some(60));
        assert_eq!(r.total_env_steps, 150);
        assert_eq!(seen.len(), 15);
        assert_eq!(seen[0], ("a".to_string(), 10, 0));
        assert_eq!(seen[14], ("c".to_string(), 150, 14));
        assert!(seen.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn baseline_runs_whole_chunks_until_budget() {
        let mut t = ScriptedTrainer::new(|_, _, ep| ep as f64);
        let h = train_baseline(&mut t, &EnvConfig::default(), 50, 0, &mut |e| {
            assert_eq!(e.phase, BASELINE_PHASE)
        })
        .unwrap();
        assert_eq!(h.total_updates(), 5);
        assert_eq!(h.stage_rewards(0), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.reward_by_num_ues[&5], "mean_qoe()");
        let h0 = train_baseline(&mut t, &EnvConfig::default(), 0, 0, &mut |_| {}).unwrap();
        assert_eq!(h0.total_updates(), 0);
    }

    fn assert_stage_deltas(r: &CurriculumRun) {
        let mut last: Option<usize> = None;
        for e in &r.events {
            if let CurriculumEvent::Enter { stage, .. } = e {
                if let Some(prev) = last {
                    let d = *stage as i64 - prev as i64;
                    assert!((-1..=1).contains(&d), "stage jump {prev} -> {stage}");
                }
                last = Some(*stage);
            }
        }
    }

    #[test]
    fn apply_adjustment_replaces_from_failing_stage() {
        let c = three_stages();
        let spec = EncodingSpec::default();
        let target = EnvConfig::default();
        let adj = scripted_adjustment(&c, 2);
        let out = apply_adjustment(&c, 2, &adj, &target, &spec).unwrap();
        let names: Vec<&str> = out.stages.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c-eased", "c"]);
        assert_eq!(out.stages[2].threshold, 0.75);
        assert_eq!(apply_adjustment(&c, 1, &Adjustment::Keep, &target, &spec).unwrap(), c);
        let truncated = Adjustment::Replace(vec![stage("x", 2, 2, 10, 1.0)]);
        assert!(matches!(
            apply_adjustment(&c, 1, &truncated, &target, &spec),
            Err(CurriculumError::FinalStageMismatch { .. })
        ));
    }

    #[test]
    fn validation_rejects_bad_stages() {
        let target = EnvConfig::default();
        let spec = EncodingSpec::default();
        let check = |f: &dyn Fn(&mut Stage)| {
            let mut c = three_stages().stages;
            f(&mut c[0]);
            validate_stages(&c, &target, &spec)
        };
        assert!(check(&|_| {}).is_ok());
        assert!(check(&|s| s.threshold = f64::NAN).is_err());
        assert!(check(&|s| s.threshold = f64::INFINITY).is_err());
        assert!(check(&|s| s.window = 0).is_err());
        assert!(check(&|s| s.env.num_ues = 6).is_err());
        assert!(check(&|s| s.env.num_bs = 4).is_err());
        assert!(check(&|s| s.env.ue_velocity_range = [3.0, 1.0]).is_err());
        assert!(check(&|s| s.reward = "sum_connected(".into()).is_err());
        assert!(check(&|s| s.name = " ".into()).is_err());
        assert!(matches!(
            validate_stages(&[], &target, &spec),
            Err(CurriculumError::Empty)
        ));
    }

    #[test]
    fn json_schema_is_strict() {
        let target = EnvConfig::default();
        let spec = EncodingSpec::default();
        let good = three_stages().to_json();
        let c = Curriculum::from_json(&good, Provenance::Llm, &target, &spec).unwrap();
        assert_eq!(c.stages, three_stages().stages);
        let extra = good.replacen("\"window\"", "\"colour\": 1, \"window\"", 1);
        assert!(matches!(
            Curriculum::from_json(&extra, Provenance::Llm, &target, &spec),
            Err(CurriculumError::Schema(_))
        ));
        let missing = good.replacen("\"window\": 2,", "", 1);
        assert!(Curriculum::from_json(&missing, Provenance::Llm, &target, &spec).is_err());
    }

    #[test]
    fn stage_inherits_target_layout_only_with_matching_bs_count() {
        let target = EnvConfig {
            bs_positions: Some(vec![
                crate::sim::Point::new(10.0, 10.0),
                crate::sim::Point::new(20.0, 20.0),
                crate::sim::Point::new(30.0, 30.0),
            ]),
            ..EnvConfig::default()
        };
        let c = three_stages();
        assert_eq!(c.stages[2].env_config(&target).bs_positions, target.bs_positions);
        assert_eq!(c.stages[1].env_config(&target).bs_positions, None);
    }
}
