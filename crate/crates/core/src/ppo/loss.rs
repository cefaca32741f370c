use thiserror::Error;

use super::dist::{bit_entropy, bit_log_prob, sigmoid};
use super::network::PolicyParams;
use crate::mdp::ActionMask;

/// One stored transition.
#[derive(Debug, Clone)]
pub struct Sample {
    pub obs: Vec<f64>,
    pub bits: Vec<u8>,
    pub mask: ActionMask,
    pub old_log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
    /// GAE advantage, set when the rollout is finalized.
    pub advantage: f64,
    /// Value target (advantage + value), set when the rollout is finalized.
    pub ret: f64,
}

/// Weights of the three loss terms and the clipping range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefficients {
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    /// `-mean(min(r A, clip(r) A))`
    pub policy: f64,
    /// Mean squared value error (unweighted).
    pub value: f64,
    /// Mean joint entropy (unweighted).
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("empty minibatch")]
    Empty,
    #[error("non-finite {term} in sample {index}")]
    NonFinite { term: &'static str, index: usize },
    #[error("sample {index} has observation length {got}, network expects {expected}")]
    Shape {
        index: usize,
        expected: usize,
        got: usize,
    },
}

/// Clipped-surrogate loss plus value and entropy terms, with its exact
/// gradient.
///
/// `advantages[k]` belongs to `batch[k]` and is used as given (normalize
/// before calling). Where the clipped branch is selected the policy term
/// contributes no gradient.
pub fn ppo_loss(
    params: &PolicyParams,
    batch: &[&Sample],
    advantages: &[f64],
    coefs: &LossCoefficients,
) -> Result<(LossTerms, PolicyParams), LossError> {
    if batch.is_empty() {
        return Err(LossError::Empty);
    }
    assert_eq!(batch.len(), advantages.len());
    let scale = 1.0 / batch.len() as f64;
    let mut grad = params.zeros_like();
    let mut terms = LossTerms::default();
    let mut d_logits = vec![0.0; params.action_len()];

    for (index, (sample, &adv)) in batch.iter().zip(advantages).enumerate() {
        if sample.obs.len() != params.input_len() {
            return Err(LossError::Shape {
                index,
                expected: params.input_len(),
                got: sample.obs.len(),
            });
        }
        let cache = params.forward_cached(&sample.obs);
        let mut log_prob = 0.0;
        let mut entropy = 0.0;
        for (k, &z) in cache.logits.iter().enumerate() {
            if sample.mask.is_valid(k) {
                log_prob += bit_log_prob(z, sample.bits[k]);
                entropy += bit_entropy(z);
            }
        }
        let log_ratio = log_prob - sample.old_log_prob;
        let ratio = log_ratio.exp();
        if !ratio.is_finite() {
            return Err(LossError::NonFinite {
                term: "probability ratio",
                index,
            });
        }
        let clipped = ratio.clamp(1.0 - coefs.clip_eps, 1.0 + coefs.clip_eps);
        let unclipped_obj = ratio * adv;
        let clipped_obj = clipped * adv;
        let surrogate = unclipped_obj.min(clipped_obj);
        // d(-surrogate)/d(log_prob)
        let d_log_prob = if unclipped_obj <= clipped_obj {
            -adv * ratio
        } else {
            0.0
        };
        if ratio != clipped {
            terms.clip_fraction += scale;
        }
        let value_err = cache.value - sample.ret;
        terms.policy -= surrogate * scale;
        terms.value += value_err * value_err * scale;
        terms.entropy += entropy * scale;
        terms.approx_kl += ((ratio - 1.0) - log_ratio) * scale;

        for (k, (d, &z)) in d_logits.iter_mut().zip(&cache.logits).enumerate() {
            *d = if sample.mask.is_valid(k) {
                let p = sigmoid(z);
                let d_lp = f64::from(sample.bits[k]) - p;
                let d_entropy = -z * p * (1.0 - p);
                scale * (d_log_prob * d_lp - coefs.entropy_coef * d_entropy)
            } else {
                0.0
            };
        }
        let d_value = scale * coefs.value_coef * 2.0 * value_err;
        params.backward(&sample.obs, &cache, &d_logits, d_value, &mut grad);
    }
    terms.total = terms.policy + coefs.value_coef * terms.value - coefs.entropy_coef * terms.entropy;

    for (term, v) in [
        ("policy loss", terms.policy),
        ("value loss", terms.value),
        ("entropy", terms.entropy),
        ("total loss", terms.total),
    ] {
        if !v.is_finite() {
            return Err(LossError::NonFinite { term, index: 0 });
        }
    }
    if !grad.is_finite() {
        return Err(LossError::NonFinite {
            term: "gradient",
            index: 0,
        });
    }
    Ok((terms, grad))
}
