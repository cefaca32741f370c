use super::runner::{ChunkReport, EpisodeSummary, StageTrainer, TrainError};
use crate::mdp::{base_reward, decode_action, encode, ActionMask};
use crate::ppo::{Agent, RolloutBuffer, Sample, UpdateStats};
use crate::reward::RewardExpr;
use crate::sim::{EnvConfig, Environment, NetworkState};

#[derive(Debug, Clone, Default)]
struct EpisodeAcc {
    reward: f64,
    qoe: f64,
    connected: f64,
    dropouts: u64,
    steps: u64,
}

impl EpisodeAcc {
    fn add(&mut self, reward: f64, state: &NetworkState, sinr_min: f64) {
        let m = state.num_ues();
        let connected = (0..m).filter(|&i| state.connections(i) > 0).count();
        self.reward += reward;
        self.qoe += base_reward(state);
        self.connected += connected as f64 / m as f64;
        self.dropouts += state.dropouts(sinr_min) as u64;
        self.steps += 1;
    }

    fn finish(&mut self, end_offset: u64) -> EpisodeSummary {
        let n = self.steps.max(1) as f64;
        let summary = EpisodeSummary {
            reward: self.reward / n,
            mean_qoe: self.qoe / n,
            connected_fraction: self.connected / n,
            dropouts: self.dropouts,
            steps: self.steps,
            end_offset,
        };
        *self = Self::default();
        summary
    }
}

#[derive(Debug, Clone)]
struct Session {
    env: Environment,
    reward: RewardExpr,
    mask: ActionMask,
    obs: Vec<f64>,
    episode: EpisodeAcc,
}

/// PPO learner driving one environment per stage.
///
/// Episodes are cut at `episode_len`. The cut is a time limit, not a
/// terminal state, so the last stored reward carries `gamma * V(s_T)`.
#[derive(Debug, Clone)]
pub struct PpoTrainer {
    pub agent: Agent,
    session: Option<Session>,
    buffer: RolloutBuffer,
    pub last_update: Option<UpdateStats>,
}

impl PpoTrainer {
    pub fn new(agent: Agent) -> Self {
        Self {
            agent,
            session: None,
            buffer: RolloutBuffer::new(),
            last_update: None,
        }
    }

    pub fn into_agent(self) -> Agent {
        self.agent
    }
}

impl StageTrainer for PpoTrainer {
    fn begin_stage(
        &mut self,
        env: EnvConfig,
        reward: RewardExpr,
        seed: u64,
    ) -> Result<(), TrainError> {
        let spec = self.agent.spec;
        let mask = spec.mask(env.num_ues, env.num_bs);
        let env = Environment::new(env, seed)?;
        let obs = encode(env.state(), &spec)?;
        self.session = Some(Session {
            env,
            reward,
            mask,
            obs,
            episode: EpisodeAcc::default(),
        });
        self.buffer.clear();
        Ok(())
    }

    fn train_chunk(&mut self) -> Result<ChunkReport, TrainError> {
        let session = self.session.as_mut().ok_or(TrainError::NoStage)?;
        let spec = self.agent.spec;
        let steps = self.agent.config.rollout_len;
        let mut report = ChunkReport::default();
        self.buffer.clear();

        for t in 0..steps {
            let (bits, old_log_prob, value) = self.agent.act(&session.obs, &session.mask);
            let proposal = decode_action(&bits, &session.mask)?;
            let sinr_min = session.env.config().sinr_min;
            let state = session.env.apply_action(&proposal)?;
            let reward = session.reward.eval(state);
            session.episode.add(reward, state, sinr_min);
            session.env.advance();
            session
                .env
                .state()
                .check_invariants(session.env.config())
                .map_err(TrainError::Invariant)?;
            let done = session.env.episode_done();
            let learn_reward = if done {
                let tail = encode(session.env.state(), &spec)?;
                reward + self.agent.config.gamma * self.agent.value(&tail)
            } else {
                reward
            };
            let obs = std::mem::take(&mut session.obs);
            self.buffer.push(Sample {
                obs,
                bits,
                mask: session.mask,
                old_log_prob,
                value,
                reward: learn_reward,
                done,
                advantage: 0.0,
                ret: 0.0,
            });
            if done {
                report.episodes.push(session.episode.finish(t as u64 + 1));
                session.env.reset();
            }
            session.obs = encode(session.env.state(), &spec)?;
        }
        report.env_steps = steps as u64;

        let last_done = self.buffer.samples().last().is_some_and(|s| s.done);
        let last_value = if last_done {
            0.0
        } else {
            self.agent.value(&session.obs)
        };
        let cfg = &self.agent.config;
        self.buffer.finalize(last_value, cfg.gamma, cfg.gae_lambda);
        self.last_update = Some(self.agent.update(&self.buffer)?);
        Ok(report)
    }

    fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.agent.params.shapes().to_vec()
    }

    fn reset_optimizer(&mut self) {
        self.agent.reset_optimizer();
    }
}
