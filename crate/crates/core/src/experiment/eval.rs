use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::mdp::{base_reward, encode_rows, EncodingSpec};
use crate::ppo::{greedy_action, load_model, PolicyParams};
use crate::sim::{EnvConfig, Environment, NetworkState, Point};
use crate::Matrix;

/// Largest UE count relative to the encoding's `m_max`.
pub const EVAL_UE_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub min_ues: usize,
    pub max_ues: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Draw a fresh BS layout from `seed` instead of the configured one.
    pub shuffle_bs: bool,
    /// Free-form label copied into each row.
    pub label: String,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            min_ues: 6,
            max_ues: 10,
            episodes: 10,
            seed: 0,
            shuffle_bs: true,
            label: "model".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub num_ues: usize,
    pub num_bs: usize,
    pub episodes: usize,
    pub steps: u64,
    /// Per-step base reward averaged over all steps.
    pub mean_qoe: f64,
    pub connected_fraction: f64,
    /// UE-steps without a link while a feasible BS existed.
    pub dropouts: u64,
    pub dropouts_per_step: f64,
}

/// `n` positions drawn uniformly over the area.
pub fn shuffled_bs_positions(env: &EnvConfig, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(0.0..=env.area_width),
                rng.random_range(0.0..=env.area_height),
            )
        })
        .collect()
}

/// Orders UEs by (nearest BS, distance to it) and cuts the order into
/// consecutive groups of at most `group` UEs.
pub fn group_by_nearest_bs(state: &NetworkState, bs: &[Point], group: usize) -> Vec<Vec<usize>> {
    let mut keyed: Vec<(usize, f64, usize)> = state
        .ue
        .iter()
        .enumerate()
        .map(|(i, ue)| {
            let (j, d) = bs
                .iter()
                .map(|b| ue.position.distance(b))
                .enumerate()
                .fold((0, f64::INFINITY), |best, (j, d)| if d < best.1 { (j, d) } else { best });
            (j, d, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed
        .chunks(group.max(1))
        .map(|c| c.iter().map(|k| k.2).collect())
        .collect()
}

/// Greedy association for any number of UEs, one forward pass per group.
pub fn greedy_proposal(
    params: &PolicyParams,
    spec: &EncodingSpec,
    state: &NetworkState,
    bs: &[Point],
) -> Result<Matrix<u8>, ExperimentError> {
    let (m, n) = (state.num_ues(), state.num_bs());
    let mut proposal = Matrix::zeros(m, n);
    for rows in group_by_nearest_bs(state, bs, spec.m_max) {
        let obs = encode_rows(state, &rows, spec).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let mask = spec.mask(rows.len(), n);
        let bits = greedy_action(&params.forward_cached(&obs).logits, &mask);
        for (slot, &i) in rows.iter().enumerate() {
            for j in 0..n {
                proposal[(i, j)] = bits[slot * spec.n_max + j];
            }
        }
    }
    Ok(proposal)
}

/// Runs the greedy policy on targets with more UEs than it was trained
/// for, one row per UE count.
pub fn evaluate(
    params: &PolicyParams,
    spec: &EncodingSpec,
    base: &EnvConfig,
    options: &EvalOptions,
) -> Result<Vec<EvalRow>, ExperimentError> {
    let cap = EVAL_UE_FACTOR * spec.m_max;
    if options.min_ues == 0 || options.min_ues > options.max_ues || options.max_ues > cap {
        return Err(ExperimentError::Config(format!(
            "UE range {}..{} must be non-empty, start at 1 or more and stay within {cap}",
            options.min_ues, options.max_ues
        )));
    }
    if options.episodes == 0 {
        return Err(ExperimentError::Config("episodes must be at least 1".into()));
    }
    if base.num_bs > spec.n_max {
        return Err(ExperimentError::Config(format!(
            "{} base stations exceed the encoding's {}",
            base.num_bs, spec.n_max
        )));
    }
    let bs_positions = if options.shuffle_bs {
        Some(shuffled_bs_positions(base, base.num_bs, options.seed))
    } else {
        base.bs_positions.clone()
    };
    let mut rows = Vec::new();
    for m in options.min_ues..=options.max_ues {
        let cfg = EnvConfig {
            num_ues: m,
            bs_positions: bs_positions.clone(),
            ..base.clone()
        };
        let bs = cfg.resolved_bs_positions();
        let sinr_min = cfg.sinr_min;
        let mut env = Environment::new(cfg, options.seed ^ (m as u64).wrapping_mul(0x2545_F491_4F6C_DD1D))
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        let (mut qoe, mut connected, mut dropouts, mut steps) = (0.0, 0.0, 0u64, 0u64);
        for _ in 0..options.episodes {
            env.reset();
            loop {
                let proposal = greedy_proposal(params, spec, env.state(), &bs)?;
                let state = env
                    .apply_action(&proposal)
                    .map_err(|e| ExperimentError::Invariant(e.to_string()))?;
                qoe += base_reward(state);
                connected += (0..m).filter(|&i| state.connections(i) > 0).count() as f64 / m as f64;
                dropouts += state.dropouts(sinr_min) as u64;
                steps += 1;
                env.advance();
                if env.episode_done() {
                    break;
                }
            }
        }
        let n = steps as f64;
        rows.push(EvalRow {
            model: options.label.clone(),
            num_ues: m,
            num_bs: base.num_bs,
            episodes: options.episodes,
            steps,
            mean_qoe: qoe / n,
            connected_fraction: connected / n,
            dropouts,
            dropouts_per_step: dropouts as f64 / n,
        });
    }
    Ok(rows)
}

/// Loads `model.json` and evaluates it.
pub fn evaluate_model(
    model: &Path,
    base: &EnvConfig,
    options: &EvalOptions,
) -> Result<Vec<EvalRow>, ExperimentError> {
    let saved = load_model(model).map_err(|e| ExperimentError::Data(format!("{}: {e}", model.display())))?;
    evaluate(&saved.params, &saved.encoding, base, options)
}

pub fn write_eval(path: &Path, rows: &[EvalRow]) -> Result<(), ExperimentError> {
    let data = |e: csv::Error| ExperimentError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(data)?;
    for row in rows {
        w.serialize(row).map_err(data)?;
    }
    w.flush().map_err(ExperimentError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::{Agent, PpoConfig};
    use crate::sim::reset;

    #[test]
    fn groups_cover_every_ue_once() {
        let cfg = EnvConfig {
            num_ues: 13,
            ..EnvConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let state = reset(&cfg, &mut rng);
        let bs = cfg.resolved_bs_positions();
        let groups = group_by_nearest_bs(&state, &bs, 5);
        assert_eq!(groups.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5, 3]);
        let mut all: Vec<usize> = groups.concat();
        let nearest = |i: usize| {
            (0..bs.len())
                .min_by(|&a, &b| {
                    state.ue[i].position.distance(&bs[a]).total_cmp(&state.ue[i].position.distance(&bs[b]))
                })
                .unwrap()
        };
        assert!(all.windows(2).all(|w| nearest(w[0]) <= nearest(w[1])));
        all.sort_unstable();
        assert_eq!(all, (0..13).collect::<Vec<_>>());
    }

    #[test]
    fn shuffled_layout_is_seeded_and_inside() {
        let env = EnvConfig::default();
        let a = shuffled_bs_positions(&env, 3, 9);
        assert_eq!(a, shuffled_bs_positions(&env, 3, 9));
        assert_ne!(a, shuffled_bs_positions(&env, 3, 10));
        assert!(a.iter().all(|p| env.contains(p)));
    }

    #[test]
    fn evaluation_rows_and_limits() {
        let spec = EncodingSpec::default();
        let agent = Agent::new(PpoConfig::default(), spec, 0).unwrap();
        let base = EnvConfig {
            episode_len: 5,
            ..EnvConfig::default()
        };
        let opts = EvalOptions {
            min_ues: 6,
            max_ues: 8,
            episodes: 2,
            ..EvalOptions::default()
        };
        let rows = evaluate(&agent.params, &spec, &base, &opts).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.steps == 10 && (0.0..=3.0).contains(&r.mean_qoe)));
        assert_eq!(rows, evaluate(&agent.params, &spec, &base, &opts).unwrap());
        let too_many = EvalOptions {
            max_ues: 21,
            ..opts
        };
        assert!(evaluate(&agent.params, &spec, &base, &too_many).is_err());
    }
}
