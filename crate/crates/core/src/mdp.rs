//! Fixed-size observation and action encoding shared by every stage.
//!
//! Observations are three contiguous row-major blocks over a padded
//! `m_max x n_max` grid: association, normalized SINR, QoE. Slots outside
//! the live `M x N` region are zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::sim::{linear_to_db, NetworkState};

#[derive(Debug, Error, PartialEq)]
pub enum EncodingError {
    #[error("state is {m}x{n} but the encoding holds at most {m_max}x{n_max}")]
    TooLarge {
        m: usize,
        n: usize,
        m_max: usize,
        n_max: usize,
    },
    #[error("expected {expected} action bits, got {got}")]
    ActionLength { expected: usize, got: usize },
    #[error("UE row {0} is out of range")]
    BadRow(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingSpec {
    pub m_max: usize,
    pub n_max: usize,
    /// SINR is clipped to this dB range and mapped affinely onto `[0, 1]`.
    pub sinr_norm_range_db: [f64; 2],
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            m_max: 5,
            n_max: 3,
            sinr_norm_range_db: [-10.0, 40.0],
        }
    }
}

impl EncodingSpec {
    pub fn pairs(&self) -> usize {
        self.m_max * self.n_max
    }

    pub fn observation_len(&self) -> usize {
        3 * self.pairs()
    }

    pub fn fits(&self, m: usize, n: usize) -> bool {
        m <= self.m_max && n <= self.n_max
    }

    pub fn normalize_sinr(&self, sinr_linear: f64) -> f64 {
        let [lo, hi] = self.sinr_norm_range_db;
        let db = linear_to_db(sinr_linear);
        if db.is_nan() {
            return 0.0;
        }
        (db.clamp(lo, hi) - lo) / (hi - lo)
    }

    pub fn mask(&self, m: usize, n: usize) -> ActionMask {
        ActionMask {
            m: m.min(self.m_max),
            n: n.min(self.n_max),
            m_max: self.m_max,
            n_max: self.n_max,
        }
    }
}

/// Valid (UE, BS) slots inside the padded action grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionMask {
    pub m: usize,
    pub n: usize,
    pub m_max: usize,
    pub n_max: usize,
}

impl ActionMask {
    pub fn len(&self) -> usize {
        self.m_max * self.n_max
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_valid(&self, k: usize) -> bool {
        k / self.n_max < self.m && k % self.n_max < self.n
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len()).map(|k| u8::from(self.is_valid(k))).collect()
    }
}

/// Encodes the whole state.
pub fn encode(state: &NetworkState, spec: &EncodingSpec) -> Result<Vec<f64>, EncodingError> {
    let rows: Vec<usize> = (0..state.num_ues()).collect();
    encode_rows(state, &rows, spec)
}

/// Encodes a subset of UE rows, placed in order into the padded grid.
pub fn encode_rows(
    state: &NetworkState,
    rows: &[usize],
    spec: &EncodingSpec,
) -> Result<Vec<f64>, EncodingError> {
    let n = state.num_bs();
    if !spec.fits(rows.len(), n) {
        return Err(EncodingError::TooLarge {
            m: rows.len(),
            n,
            m_max: spec.m_max,
            n_max: spec.n_max,
        });
    }
    let block = spec.pairs();
    let mut obs = vec![0.0; 3 * block];
    for (slot, &i) in rows.iter().enumerate() {
        if i >= state.num_ues() {
            return Err(EncodingError::BadRow(i));
        }
        for j in 0..n {
            let k = slot * spec.n_max + j;
            obs[k] = f64::from(state.assoc[(i, j)]);
            obs[block + k] = spec.normalize_sinr(state.sinr[(i, j)]);
            obs[2 * block + k] = state.qoe[(i, j)];
        }
    }
    Ok(obs)
}

/// Turns raw policy bits into an `M x N` proposal, ignoring masked slots.
pub fn decode_action(raw_bits: &[u8], mask: &ActionMask) -> Result<Matrix<u8>, EncodingError> {
    if raw_bits.len() != mask.len() {
        return Err(EncodingError::ActionLength {
            expected: mask.len(),
            got: raw_bits.len(),
        });
    }
    Ok(Matrix::from_fn(mask.m, mask.n, |i, j| {
        u8::from(raw_bits[i * mask.n_max + j] != 0)
    }))
}

/// Average over UEs of the QoE summed across base stations.
pub fn base_reward(state: &NetworkState) -> f64 {
    state.qoe.iter().sum::<f64>() / state.num_ues() as f64
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::sim::{apply_action, reset, EnvConfig};

    fn state(m: usize, n: usize) -> NetworkState {
        let config = EnvConfig {
            num_ues: m,
            num_bs: n,
            ..EnvConfig::default()
        };
        let s = reset(&config, &mut ChaCha8Rng::seed_from_u64(3));
        let ones = Matrix::from_fn(m, n, |_, _| 1);
        apply_action(&s, &ones, &config).unwrap()
    }

    #[test]
    fn padding_layout() {
        let spec = EncodingSpec::default();
        let s = state(2, 1);
        let obs = encode(&s, &spec).unwrap();
        assert_eq!(obs.len(), 45);
        for (k, &v) in obs.iter().enumerate() {
            if v != 0.0 {
                assert!([0, 3].contains(&(k % 15)), "nonzero at padded index {k}");
            }
        }
        assert!(obs.iter().filter(|&&v| v != 0.0).count() <= 6);
    }

    #[test]
    fn sinr_midpoint_maps_to_half() {
        let spec = EncodingSpec::default();
        assert!((spec.normalize_sinr(10f64.powf(1.5)) - 0.5).abs() < 1e-12);
        assert_eq!(spec.normalize_sinr(0.0), 0.0);
        assert_eq!(spec.normalize_sinr(1e9), 1.0);
    }

    #[test]
    fn all_zero_state_encodes_to_zero() {
        let mut s = state(3, 2);
        s.assoc = Matrix::zeros(3, 2);
        s.sinr = Matrix::zeros(3, 2);
        s.qoe = Matrix::zeros(3, 2);
        assert!(encode(&s, &EncodingSpec::default())
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn oversized_state_is_rejected() {
        let s = state(6, 3);
        assert!(matches!(
            encode(&s, &EncodingSpec::default()),
            Err(EncodingError::TooLarge { m: 6, .. })
        ));
    }

    #[test]
    fn decode_respects_mask() {
        let spec = EncodingSpec::default();
        let mask = spec.mask(2, 1);
        let m = decode_action(&[1; 15], &mask).unwrap();
        assert_eq!(m, Matrix::from_vec(2, 1, vec![1, 1]));
        let mut bits = [0u8; 15];
        bits[1] = 1;
        bits[14] = 1;
        assert_eq!(decode_action(&bits, &mask).unwrap(), Matrix::zeros(2, 1));
        assert_eq!(
            decode_action(&[0; 14], &mask),
            Err(EncodingError::ActionLength {
                expected: 15,
                got: 14
            })
        );
    }

    #[test]
    fn mask_bits() {
        let mask = EncodingSpec::default().mask(2, 2);
        let bits = mask.to_bits();
        assert_eq!(bits.iter().filter(|&&b| b == 1).count(), 4);
        assert_eq!(&bits[..6], &[1, 1, 0, 1, 1, 0]);
    }

    #[test]
    fn base_reward_arithmetic() {
        let mut s = state(2, 2);
        s.qoe = Matrix::from_vec(2, 2, vec![0.4, 0.0, 0.0, 0.6]);
        assert!((base_reward(&s) - 0.5).abs() < 1e-15);
        s.qoe = Matrix::zeros(2, 2);
        assert_eq!(base_reward(&s), 0.0);
        let mut full = state(5, 3);
        full.qoe = Matrix::from_fn(5, 3, |_, j| if j == 0 { 1.0 } else { 0.0 });
        assert_eq!(base_reward(&full), 1.0);
    }
}
