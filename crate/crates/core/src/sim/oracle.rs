use thiserror::Error;

use super::{compute_rates, qoe, EnvConfig, NetworkState};
use crate::matrix::Matrix;

/// Largest `M * N` the exhaustive search accepts.
pub const ORACLE_MAX_PAIRS: usize = 16;

#[derive(Debug, Error, PartialEq)]
#[error("exhaustive association search refused: {pairs} pairs exceeds {ORACLE_MAX_PAIRS}")]
pub struct OracleError {
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub assoc: Matrix<u8>,
    /// Average per-UE summed QoE achieved by `assoc`.
    pub reward: f64,
}

/// Best single-step association by exhaustive search.
///
/// Candidates are encoded with bit `i * N + j` standing for link `(i, j)`;
/// only encodings whose links all clear the SINR gate are scored. Ties go to
/// the lowest encoding.
pub fn oracle_step_assoc(
    state: &NetworkState,
    config: &EnvConfig,
) -> Result<OracleResult, OracleError> {
    let (m, n) = state.assoc.shape();
    let pairs = m * n;
    if pairs > ORACLE_MAX_PAIRS {
        return Err(OracleError { pairs });
    }
    let feasible_mask: u32 = state
        .sinr
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= config.sinr_min)
        .fold(0, |acc, (k, _)| acc | (1 << k));

    let mut best_code = 0u32;
    let mut best_reward = f64::NEG_INFINITY;
    for code in 0u32..(1 << pairs) {
        if code & !feasible_mask != 0 {
            continue;
        }
        let assoc = Matrix::from_fn(m, n, |i, j| ((code >> (i * n + j)) & 1) as u8);
        let rates = compute_rates(&assoc, &state.sinr, config);
        let reward = rates.iter().map(|&r| qoe(r, config)).sum::<f64>() / m as f64;
        if reward > best_reward {
            best_reward = reward;
            best_code = code;
        }
    }
    Ok(OracleResult {
        assoc: Matrix::from_fn(m, n, |i, j| ((best_code >> (i * n + j)) & 1) as u8),
        reward: best_reward,
    })
}
