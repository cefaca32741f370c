//! Proximal policy optimization with a factored Bernoulli action head.
//!
//! The network is fixed: `input -> tanh(64) -> tanh(64)`, then a logit per
//! action bit and a scalar value. Gradients are derived by hand for this
//! topology and checked against finite differences in the tests.

mod agent;
mod dist;
mod gae;
mod io;
mod loss;
mod network;

pub use agent::{
    clip_grad_norm, normalize_advantages, update, Adam, Agent, PpoConfig, PpoError,
    RolloutBuffer, UpdateStats,
};
pub use dist::{
    bit_entropy, bit_log_prob, entropy, greedy_action, log_prob, sample_action, sigmoid, softplus,
};
pub use gae::gae;
pub use io::{load_model, model_from_json, model_to_json, save_model, ModelError, SavedModel};
pub use loss::{ppo_loss, LossCoefficients, LossError, LossTerms, Sample};
pub use network::{Dense, ForwardCache, PolicyParams, DEFAULT_HIDDEN};
