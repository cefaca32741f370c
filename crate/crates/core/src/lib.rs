//! Curriculum-driven reinforcement learning for user association in a
//! simulated mobile network.
//!
//! - [`sim`]: discrete-time network simulator (mobility, Hata path loss,
//!   SINR gating, shared Shannon rates, QoE).
//! - [`mdp`]: padded observation/action encoding and the base reward.
//! - [`reward`]: the reward expression language used by curriculum stages.
//! - [`ppo`]: a small actor-critic with hand-derived gradients and PPO updates.
//! - [`curriculum`]: stage model, progression/stagnation logic and the
//!   training loop that drives a curriculum.
//! - [`llm`]: prompt rendering, chat-completions client and cassettes.
//! - [`experiment`]: run configuration, metrics files, evaluation, comparison.

pub mod curriculum;
pub mod experiment;
pub mod llm;
pub mod matrix;
pub mod mdp;
pub mod ppo;
pub mod reward;
pub mod sim;

pub use matrix::Matrix;
