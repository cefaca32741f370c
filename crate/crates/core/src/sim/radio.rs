//! Propagation, link budget and data-rate model.

use super::config::{EnvConfig, Point};
use crate::matrix::Matrix;

/// Distances below this are clamped before entering the Hata formula.
pub const MIN_DISTANCE_M: f64 = 10.0;

/// Okumura-Hata urban path loss (small/medium city mobile-antenna
/// correction) in dB.
pub fn path_loss_db(distance_m: f64, config: &EnvConfig) -> f64 {
    let d_km = distance_m.max(MIN_DISTANCE_M) / 1000.0;
    let log_f = config.carrier_freq_mhz.log10();
    let log_hb = config.bs_height_m.log10();
    let mobile_correction =
        (1.1 * log_f - 0.7) * config.ue_height_m - (1.56 * log_f - 0.8);
    69.55 + 26.16 * log_f - 13.82 * log_hb - mobile_correction
        + (44.9 - 6.55 * log_hb) * d_km.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Received power in dBm from every BS at every UE position.
fn received_dbm(ue: &[Point], bs: &[Point], config: &EnvConfig) -> Matrix<f64> {
    Matrix::from_fn(ue.len(), bs.len(), |i, j| {
        config.tx_power_dbm - path_loss_db(ue[i].distance(&bs[j]), config)
    })
}

/// Linear SINR for every (UE, BS) pair.
///
/// Noise-only unless `config.interference` is set, in which case every
/// other BS contributes its received power as co-channel interference.
pub fn compute_sinr(ue: &[Point], config: &EnvConfig) -> Matrix<f64> {
    let bs = config.resolved_bs_positions();
    let rx = received_dbm(ue, &bs, config);
    let noise_dbm = config.noise_dbm();
    if !config.interference {
        return Matrix::from_fn(ue.len(), bs.len(), |i, j| {
            db_to_linear(rx[(i, j)] - noise_dbm)
        });
    }
    let noise_mw = db_to_linear(noise_dbm);
    Matrix::from_fn(ue.len(), bs.len(), |i, j| {
        let interference_mw: f64 = (0..bs.len())
            .filter(|&k| k != j)
            .map(|k| db_to_linear(rx[(i, k)]))
            .sum();
        db_to_linear(rx[(i, j)]) / (noise_mw + interference_mw)
    })
}

/// Shannon rate with the BS bandwidth split equally among its connected UEs.
pub fn compute_rates(assoc: &Matrix<u8>, sinr: &Matrix<f64>, config: &EnvConfig) -> Matrix<f64> {
    let (m, n) = assoc.shape();
    let load: Vec<usize> = (0..n)
        .map(|j| (0..m).filter(|&i| assoc[(i, j)] == 1).count())
        .collect();
    Matrix::from_fn(m, n, |i, j| {
        if assoc[(i, j)] == 1 {
            config.bandwidth_hz / load[j] as f64 * (1.0 + sinr[(i, j)]).log2()
        } else {
            0.0
        }
    })
}

/// Log-normalized rate utility in `[0, 1]`.
pub fn qoe(rate_bps: f64, config: &EnvConfig) -> f64 {
    if rate_bps <= 0.0 {
        return 0.0;
    }
    let lo = config.d_min_bps.ln();
    let hi = config.d_max_bps.ln();
    ((rate_bps.ln() - lo) / (hi - lo)).clamp(0.0, 1.0)
}
