//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's math; each function is written
//! from the definitions with plain loops so that agreement means something.
#![allow(dead_code)]

pub mod fake_llm;

use std::path::{Path, PathBuf};

use netcurriculum::experiment::{Mode, ProviderKind, RunConfig};
use netcurriculum::mdp::{ActionMask, EncodingSpec};
use netcurriculum::ppo::{PolicyParams, Sample};
use netcurriculum::sim::{EnvConfig, NetworkState};
use netcurriculum::Matrix;
use rand::Rng;

// ---- shared run settings -------------------------------------------------

/// Env steps per arm for the convergence comparison and the replay run.
pub const ACCEPT_BUDGET: u64 = 250_000;
pub const ACCEPT_SEEDS: [u64; 3] = [0, 1, 2];
pub const REPLAY_CASSETTE: &str = "curriculum_run.jsonl";
pub const REPLAY_FINAL_THRESHOLD: f64 = 2.0;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Curriculum run driven by a model-designed curriculum, seed 0.
pub fn replay_config(provider: ProviderKind, out: &Path, endpoint: Option<String>) -> RunConfig {
    RunConfig {
        mode: Mode::Curriculum,
        provider,
        seeds: vec![0],
        output_dir: out.to_path_buf(),
        total_step_budget: Some(ACCEPT_BUDGET),
        llm_endpoint: endpoint,
        cassette: Some(fixture(REPLAY_CASSETTE)),
        ..RunConfig::default()
    }
}

// ---- radio and rewards ----------------------------------------------------

pub fn hata_db(d_m: f64, f_mhz: f64, hb: f64, hm: f64) -> f64 {
    let d_km = if d_m < 10.0 { 0.01 } else { d_m / 1000.0 };
    let a_hm = (1.1 * f_mhz.log10() - 0.7) * hm - (1.56 * f_mhz.log10() - 0.8);
    69.55 + 26.16 * f_mhz.log10() - 13.82 * hb.log10() - a_hm
        + (44.9 - 6.55 * hb.log10()) * d_km.log10()
}

/// `log(D/Dmin) / log(Dmax/Dmin)` clamped to `[0, 1]`, zero for no rate.
pub fn qoe_ref(rate: f64, d_min: f64, d_max: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    let v = (rate / d_min).log10() / (d_max / d_min).log10();
    v.max(0.0).min(1.0)
}

/// Rates and QoE for an association, recomputed from the SINR matrix.
pub fn qoe_matrix_ref(assoc: &Matrix<u8>, sinr: &Matrix<f64>, cfg: &EnvConfig) -> Vec<Vec<f64>> {
    let (m, n) = assoc.shape();
    let mut out = vec![vec![0.0; n]; m];
    for j in 0..n {
        let mut load = 0usize;
        for i in 0..m {
            if assoc[(i, j)] == 1 {
                load += 1;
            }
        }
        for i in 0..m {
            if assoc[(i, j)] == 1 {
                let rate = cfg.bandwidth_hz / load as f64 * (1.0 + sinr[(i, j)]).ln() / 2f64.ln();
                out[i][j] = qoe_ref(rate, cfg.d_min_bps, cfg.d_max_bps);
            }
        }
    }
    out
}

/// Average over UEs of the QoE summed over base stations.
pub fn base_reward_ref(state: &NetworkState) -> f64 {
    let (m, n) = state.assoc.shape();
    let mut total = 0.0;
    for i in 0..m {
        let mut per_ue = 0.0;
        for j in 0..n {
            per_ue += state.qoe[(i, j)];
        }
        total += per_ue;
    }
    total / m as f64
}

/// Number of active links.
pub fn r_s1_ref(state: &NetworkState) -> f64 {
    let (m, n) = state.assoc.shape();
    let mut c = 0.0;
    for i in 0..m {
        for j in 0..n {
            if state.assoc[(i, j)] == 1 {
                c += 1.0;
            }
        }
    }
    c
}

/// Links held at both this step and the previous one.
pub fn r_s2_ref(state: &NetworkState) -> f64 {
    let (m, n) = state.assoc.shape();
    let mut c = 0.0;
    for i in 0..m {
        for j in 0..n {
            c += f64::from(state.assoc[(i, j)]) * f64::from(state.prev_assoc[(i, j)]);
        }
    }
    c
}

/// Same form as the base reward, on the scaled-down task.
pub fn r_s3_ref(state: &NetworkState) -> f64 {
    base_reward_ref(state)
}

/// Exhaustive search written independently of the library: enumerates all
/// `2^(M*N)` matrices in row-major counting order, skips any link under the
/// SINR gate, and keeps the first strict maximum.
pub fn enumerate_best(state: &NetworkState, cfg: &EnvConfig) -> (Matrix<u8>, f64) {
    let (m, n) = state.assoc.shape();
    let pairs = m * n;
    let mut best = (Matrix::zeros(m, n), f64::NEG_INFINITY);
    for code in 0u64..(1u64 << pairs) {
        let mut a = Matrix::zeros(m, n);
        let mut ok = true;
        for k in 0..pairs {
            if code >> k & 1 == 1 {
                let (i, j) = (k / n, k % n);
                if state.sinr[(i, j)] < cfg.sinr_min {
                    ok = false;
                    break;
                }
                a[(i, j)] = 1u8;
            }
        }
        if !ok {
            continue;
        }
        let q = qoe_matrix_ref(&a, &state.sinr, cfg);
        let r: f64 = q.iter().flatten().sum::<f64>() / m as f64;
        if r > best.1 {
            best = (a, r);
        }
    }
    best
}

// ---- PPO ------------------------------------------------------------------

fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let inputs = x.len();
    (0..b.len())
        .map(|o| {
            let mut s = b[o];
            for i in 0..inputs {
                s += w[o * inputs + i] * x[i];
            }
            s
        })
        .collect()
}

pub fn random_mask(spec: &EncodingSpec, rng: &mut impl Rng) -> ActionMask {
    spec.mask(rng.random_range(1..=spec.m_max), rng.random_range(1..=spec.n_max))
}

/// Samples whose probability ratios stay at least `margin` away from the
/// clip edges, so finite differences never straddle a kink.
pub fn random_batch(
    p: &PolicyParams,
    spec: &EncodingSpec,
    size: usize,
    log_ratio_span: f64,
    eps: f64,
    rng: &mut impl Rng,
) -> Vec<Sample> {
    let margin = 1e-3;
    (0..size)
        .map(|_| {
            let obs: Vec<f64> = (0..spec.observation_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mask = random_mask(spec, rng);
            let bits: Vec<u8> = (0..spec.pairs())
                .map(|k| u8::from(mask.is_valid(k) && rng.random_bool(0.5)))
                .collect();
            let (logits, _) = forward_ref(p, &obs);
            let lp = log_prob_ref(&logits, &bits, &mask);
            let log_ratio = loop {
                let x: f64 = rng.random_range(-log_ratio_span..=log_ratio_span);
                let r = x.exp();
                if (r - (1.0 - eps)).abs() > margin && (r - (1.0 + eps)).abs() > margin {
                    break x;
                }
            };
            Sample {
                obs,
                bits,
                mask,
                old_log_prob: lp - log_ratio,
                value: 0.0,
                reward: 0.0,
                done: false,
                advantage: 0.0,
                ret: rng.random_range(-2.0..2.0),
            }
        })
        .collect()
}

pub fn sampled_coords(p: &PolicyParams, per_tensor: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut coords = Vec::new();
    let mut offset = 0;
    for t in p.tensors() {
        for _ in 0..per_tensor.min(t.len()) {
            coords.push(offset + rng.random_range(0..t.len()));
        }
        offset += t.len();
    }
    coords
}

/// `(logits, value)` from the raw parameter tensors.
pub fn forward_ref(p: &PolicyParams, obs: &[f64]) -> (Vec<f64>, f64) {
    let t = p.tensors();
    let h1: Vec<f64> = dense(t[0], t[1], obs).into_iter().map(f64::tanh).collect();
    let h2: Vec<f64> = dense(t[2], t[3], &h1).into_iter().map(f64::tanh).collect();
    let logits = dense(t[4], t[5], &h2);
    let value = dense(t[6], t[7], &h2)[0];
    (logits, value)
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn log_prob_ref(logits: &[f64], bits: &[u8], mask: &ActionMask) -> f64 {
    let mut lp = 0.0;
    for (k, (&z, &b)) in logits.iter().zip(bits).enumerate() {
        if mask.is_valid(k) {
            let p = sig(z);
            lp += if b == 1 { p.ln() } else { (1.0 - p).ln() };
        }
    }
    lp
}

pub fn entropy_ref(logits: &[f64], mask: &ActionMask) -> f64 {
    let mut h = 0.0;
    for (k, &z) in logits.iter().enumerate() {
        if mask.is_valid(k) {
            let p = sig(z);
            h -= p * p.ln() + (1.0 - p) * (1.0 - p).ln();
        }
    }
    h
}

/// Clipped surrogate plus weighted value error minus weighted entropy,
/// averaged over the batch.
pub fn ppo_loss_ref(
    p: &PolicyParams,
    batch: &[Sample],
    adv: &[f64],
    eps: f64,
    c_v: f64,
    c_e: f64,
) -> f64 {
    let mut total = 0.0;
    for (s, &a) in batch.iter().zip(adv) {
        let (logits, v) = forward_ref(p, &s.obs);
        let r = (log_prob_ref(&logits, &s.bits, &s.mask) - s.old_log_prob).exp();
        let surrogate = (r * a).min(r.max(1.0 - eps).min(1.0 + eps) * a);
        total += -surrogate + c_v * (v - s.ret).powi(2) - c_e * entropy_ref(&logits, &s.mask);
    }
    total / batch.len() as f64
}

/// Central finite differences of `f` at the flat coordinates `coords`.
pub fn fd_gradient(
    p: &PolicyParams,
    coords: &[usize],
    h: f64,
    f: &dyn Fn(&PolicyParams) -> f64,
) -> Vec<f64> {
    coords
        .iter()
        .map(|&c| {
            let mut plus = p.clone();
            let mut minus = p.clone();
            *flat_mut(&mut plus, c) += h;
            *flat_mut(&mut minus, c) -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

pub fn flat_mut(p: &mut PolicyParams, mut c: usize) -> &mut f64 {
    for t in p.tensors_mut() {
        if c < t.len() {
            return &mut t[c];
        }
        c -= t.len();
    }
    panic!("coordinate out of range")
}

/// `A_t = sum_l (gamma lambda)^l delta_{t+l}`, summed explicitly up to the
/// end of the episode containing `t`.
pub fn gae_ref(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let value_at = |k: usize| if k < n { values[k] } else { last_value };
    let delta = |k: usize| {
        let next = if dones[k] { 0.0 } else { gamma * value_at(k + 1) };
        rewards[k] + next - values[k]
    };
    (0..n)
        .map(|t| {
            let mut a = 0.0;
            for l in 0..(n - t) {
                a += (gamma * lambda).powi(l as i32) * delta(t + l);
                if dones[t + l] {
                    break;
                }
            }
            a
        })
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// `||a - b|| / max(||a||, ||b||)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-300)
}

/// Random network with policy-head weights large enough that logits are
/// far from zero.
pub fn random_params(inputs: usize, hidden: usize, actions: usize, rng: &mut impl Rng) -> PolicyParams {
    let mut p = PolicyParams::zeros(inputs, hidden, actions);
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
    }
    p
}
