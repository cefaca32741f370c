use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dist::{greedy_action, sample_action};
use super::gae::gae;
use super::loss::{ppo_loss, LossCoefficients, LossError, LossTerms, Sample};
use super::network::{PolicyParams, DEFAULT_HIDDEN};
use crate::mdp::{ActionMask, EncodingSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub lr: f64,
    pub minibatch: usize,
    pub clip_eps: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Environment steps collected per update.
    pub rollout_len: usize,
    pub epochs_per_update: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    pub hidden: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            lr: 0.0005,
            minibatch: 64,
            clip_eps: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            rollout_len: 2048,
            epochs_per_update: 10,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PpoError {
    #[error("invalid PPO config: {0}")]
    Config(String),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("rollout buffer has not been finalized")]
    NotFinalized,
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip_eps must be positive");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and non-negative");
        }
        if self.minibatch == 0 || self.rollout_len == 0 || self.hidden == 0 {
            return bad("minibatch, rollout_len and hidden must be at least 1");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        Ok(())
    }

    pub fn coefficients(&self) -> LossCoefficients {
        LossCoefficients {
            clip_eps: self.clip_eps,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
        }
    }
}

/// Transitions collected since the last update.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    samples: Vec<Sample>,
    finalized: bool,
}

impl RolloutBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: Sample) {
        self.finalized = false;
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// Computes advantages and returns, bootstrapping from `last_value`.
    pub fn finalize(&mut self, last_value: f64, gamma: f64, lambda: f64) {
        let rewards: Vec<f64> = self.samples.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = self.samples.iter().map(|s| s.value).collect();
        let dones: Vec<bool> = self.samples.iter().map(|s| s.done).collect();
        let (adv, ret) = gae(&rewards, &values, &dones, last_value, gamma, lambda);
        for ((s, a), r) in self.samples.iter_mut().zip(adv).zip(ret) {
            s.advantage = a;
            s.ret = r;
        }
        self.finalized = true;
    }

    pub fn clear(&mut self) {
        self.samples.clear();
        self.finalized = false;
    }
}

/// Rescales to zero mean and unit standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = (*a - mean) / (std + 1e-12);
    }
}

/// Adam optimizer state over the flattened parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.t = 0;
    }

    pub fn step(&mut self, params: &mut PolicyParams, grad: &PolicyParams, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut k = 0;
        for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
            for (w, &gi) in p.iter_mut().zip(g) {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * gi;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * gi * gi;
                let m_hat = self.m[k] / c1;
                let v_hat = self.v[k] / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
    }
}

/// Scales `grad` in place so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut PolicyParams, max_norm: f64) -> f64 {
    let norm = grad
        .tensors()
        .iter()
        .flat_map(|t| t.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for t in grad.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= s);
        }
    }
    norm
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    pub minibatches: usize,
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Runs `epochs_per_update` passes of shuffled minibatches over a finalized
/// buffer. Advantages are normalized per minibatch.
pub fn update(
    params: &mut PolicyParams,
    optimizer: &mut Adam,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut impl Rng,
) -> Result<UpdateStats, PpoError> {
    if !buffer.is_finalized() {
        return Err(PpoError::NotFinalized);
    }
    let coefs = config.coefficients();
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    for _ in 0..config.epochs_per_update {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &buffer.samples()[i]).collect();
            let mut adv: Vec<f64> = batch.iter().map(|s| s.advantage).collect();
            normalize_advantages(&mut adv);
            let (terms, mut grad) = ppo_loss(params, &batch, &adv, &coefs)?;
            stats.grad_norm += clip_grad_norm(&mut grad, config.max_grad_norm);
            optimizer.step(params, &grad, config.lr);
            accumulate(&mut stats, &terms);
        }
    }
    if stats.minibatches > 0 {
        let n = stats.minibatches as f64;
        stats.loss /= n;
        stats.policy_loss /= n;
        stats.value_loss /= n;
        stats.entropy /= n;
        stats.approx_kl /= n;
        stats.clip_fraction /= n;
        stats.grad_norm /= n;
    }
    Ok(stats)
}

fn accumulate(stats: &mut UpdateStats, terms: &LossTerms) {
    stats.minibatches += 1;
    stats.loss += terms.total;
    stats.policy_loss += terms.policy;
    stats.value_loss += terms.value;
    stats.entropy += terms.entropy;
    stats.approx_kl += terms.approx_kl;
    stats.clip_fraction += terms.clip_fraction;
}

/// Policy parameters together with optimizer state and sampling RNG.
#[derive(Debug, Clone)]
pub struct Agent {
    pub params: PolicyParams,
    pub optimizer: Adam,
    pub config: PpoConfig,
    pub spec: EncodingSpec,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(config: PpoConfig, spec: EncodingSpec, seed: u64) -> Result<Self, PpoError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = PolicyParams::init(spec.observation_len(), config.hidden, spec.pairs(), &mut rng);
        Ok(Self::from_params(params, config, spec, rng))
    }

    pub fn from_params(
        params: PolicyParams,
        config: PpoConfig,
        spec: EncodingSpec,
        rng: ChaCha8Rng,
    ) -> Self {
        let optimizer = Adam::new(params.num_params());
        Self {
            params,
            optimizer,
            config,
            spec,
            rng,
        }
    }

    /// Samples an action; returns `(bits, log_prob, value)`.
    pub fn act(&mut self, obs: &[f64], mask: &ActionMask) -> (Vec<u8>, f64, f64) {
        let out = self.params.forward_cached(obs);
        let (bits, lp) = sample_action(&out.logits, mask, &mut self.rng);
        (bits, lp, out.value)
    }

    pub fn act_greedy(&self, obs: &[f64], mask: &ActionMask) -> Vec<u8> {
        greedy_action(&self.params.forward_cached(obs).logits, mask)
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.params.forward_cached(obs).value
    }

    pub fn update(&mut self, buffer: &RolloutBuffer) -> Result<UpdateStats, PpoError> {
        update(
            &mut self.params,
            &mut self.optimizer,
            buffer,
            &self.config,
            &mut self.rng,
        )
    }

    pub fn reset_optimizer(&mut self) {
        self.optimizer.reset();
    }
}
