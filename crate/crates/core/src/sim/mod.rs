//! Discrete-time mobile network simulator.
//!
//! UEs move under a random waypoint model, links are gated by SINR, and
//! each (UE, BS) pair carries a data rate and a QoE utility.

mod config;
mod oracle;
mod radio;

pub use config::{ConfigError, EnvConfig, Point};
pub use oracle::{oracle_step_assoc, OracleError, OracleResult, ORACLE_MAX_PAIRS};
pub use radio::{
    compute_rates, compute_sinr, db_to_linear, linear_to_db, path_loss_db, qoe, MIN_DISTANCE_M,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("association matrix is {got:?}, expected {expected:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("association entry ({0}, {1}) is not binary")]
    NotBinary(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UeState {
    pub position: Point,
    pub waypoint: Point,
    /// Current speed in m/s.
    pub velocity: f64,
}

/// Snapshot of the network at one time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkState {
    pub t: usize,
    pub ue: Vec<UeState>,
    pub assoc: Matrix<u8>,
    pub prev_assoc: Matrix<u8>,
    pub sinr: Matrix<f64>,
    pub rate: Matrix<f64>,
    pub qoe: Matrix<f64>,
}

impl NetworkState {
    pub fn num_ues(&self) -> usize {
        self.assoc.rows()
    }

    pub fn num_bs(&self) -> usize {
        self.assoc.cols()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.ue.iter().map(|u| u.position).collect()
    }

    pub fn connections(&self, ue: usize) -> usize {
        self.assoc.row(ue).iter().filter(|&&x| x == 1).count()
    }

    /// Whether any BS clears the SINR gate for this UE.
    pub fn has_feasible_link(&self, ue: usize, sinr_min: f64) -> bool {
        self.sinr.row(ue).iter().any(|&s| s >= sinr_min)
    }

    /// UEs with no active connection although at least one BS is feasible.
    pub fn dropouts(&self, sinr_min: f64) -> usize {
        (0..self.num_ues())
            .filter(|&i| self.connections(i) == 0 && self.has_feasible_link(i, sinr_min))
            .count()
    }

    /// Checks the association constraints and range invariants.
    pub fn check_invariants(&self, config: &EnvConfig) -> Result<(), String> {
        let (m, n) = self.assoc.shape();
        for ((i, j), &x) in self.assoc.indexed() {
            if x > 1 {
                return Err(format!("assoc[{i}][{j}] = {x} is not binary"));
            }
            if x == 1 && self.sinr[(i, j)] < config.sinr_min {
                return Err(format!("assoc[{i}][{j}] set below the SINR gate"));
            }
            if x == 0 && self.rate[(i, j)] != 0.0 {
                return Err(format!("rate[{i}][{j}] nonzero on an inactive link"));
            }
            let q = self.qoe[(i, j)];
            if !(0.0..=1.0).contains(&q) {
                return Err(format!("qoe[{i}][{j}] = {q} outside [0, 1]"));
            }
        }
        for i in 0..m {
            if self.connections(i) > n {
                return Err(format!("ue {i} exceeds {n} connections"));
            }
            if !config.contains(&self.ue[i].position) {
                return Err(format!("ue {i} left the area"));
            }
        }
        Ok(())
    }
}

fn uniform_point(config: &EnvConfig, rng: &mut impl Rng) -> Point {
    Point::new(
        rng.random::<f64>() * config.area_width,
        rng.random::<f64>() * config.area_height,
    )
}

fn draw_velocity(config: &EnvConfig, rng: &mut impl Rng) -> f64 {
    let [lo, hi] = config.ue_velocity_range;
    lo + (hi - lo) * rng.random::<f64>()
}

fn refresh_links(state: &mut NetworkState, config: &EnvConfig) {
    state.rate = compute_rates(&state.assoc, &state.sinr, config);
    state.qoe = Matrix::from_fn(state.num_ues(), state.num_bs(), |i, j| {
        qoe(state.rate[(i, j)], config)
    });
}

/// Fresh episode: uniform UE placement, no associations, `t = 0`.
pub fn reset(config: &EnvConfig, rng: &mut impl Rng) -> NetworkState {
    let ue: Vec<UeState> = (0..config.num_ues)
        .map(|_| {
            let position = uniform_point(config, rng);
            let waypoint = uniform_point(config, rng);
            let velocity = draw_velocity(config, rng);
            UeState {
                position,
                waypoint,
                velocity,
            }
        })
        .collect();
    let positions: Vec<Point> = ue.iter().map(|u| u.position).collect();
    let (m, n) = (config.num_ues, config.num_bs);
    let mut state = NetworkState {
        t: 0,
        ue,
        assoc: Matrix::zeros(m, n),
        prev_assoc: Matrix::zeros(m, n),
        sinr: compute_sinr(&positions, config),
        rate: Matrix::zeros(m, n),
        qoe: Matrix::zeros(m, n),
    };
    refresh_links(&mut state, config);
    state
}

/// Applies a proposed association, dropping links below the SINR gate.
pub fn apply_action(
    state: &NetworkState,
    proposed: &Matrix<u8>,
    config: &EnvConfig,
) -> Result<NetworkState, SimError> {
    let expected = state.assoc.shape();
    if proposed.shape() != expected {
        return Err(SimError::Shape {
            expected,
            got: proposed.shape(),
        });
    }
    if let Some(((i, j), _)) = proposed.indexed().find(|(_, &x)| x > 1) {
        return Err(SimError::NotBinary(i, j));
    }
    let mut next = state.clone();
    next.prev_assoc = state.assoc.clone();
    next.assoc = Matrix::from_fn(expected.0, expected.1, |i, j| {
        u8::from(proposed[(i, j)] == 1 && state.sinr[(i, j)] >= config.sinr_min)
    });
    refresh_links(&mut next, config);
    Ok(next)
}

/// Moves every UE one step along its random-waypoint path and advances `t`.
///
/// Links that fall below the SINR gate at the new positions are dropped;
/// surviving links keep their association.
pub fn advance_mobility(
    state: &NetworkState,
    config: &EnvConfig,
    rng: &mut impl Rng,
) -> NetworkState {
    let mut next = state.clone();
    for ue in &mut next.ue {
        let reach = ue.velocity * config.step_duration;
        let remaining = ue.position.distance(&ue.waypoint);
        if remaining <= reach {
            ue.position = ue.waypoint;
            ue.waypoint = uniform_point(config, rng);
            ue.velocity = draw_velocity(config, rng);
        } else {
            let f = reach / remaining;
            ue.position = Point::new(
                (ue.position.x + f * (ue.waypoint.x - ue.position.x)).clamp(0.0, config.area_width),
                (ue.position.y + f * (ue.waypoint.y - ue.position.y))
                    .clamp(0.0, config.area_height),
            );
        }
    }
    next.t += 1;
    next.sinr = compute_sinr(&next.positions(), config);
    let (m, n) = next.assoc.shape();
    next.assoc = Matrix::from_fn(m, n, |i, j| {
        u8::from(next.assoc[(i, j)] == 1 && next.sinr[(i, j)] >= config.sinr_min)
    });
    refresh_links(&mut next, config);
    next
}

/// One environment instance: config, current state and its own RNG.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    state: NetworkState,
    rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = reset(&config, &mut rng);
        Ok(Self { config, state, rng })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn reset(&mut self) -> &NetworkState {
        self.state = reset(&self.config, &mut self.rng);
        &self.state
    }

    pub fn apply_action(&mut self, proposed: &Matrix<u8>) -> Result<&NetworkState, SimError> {
        self.state = apply_action(&self.state, proposed, &self.config)?;
        Ok(&self.state)
    }

    pub fn advance(&mut self) -> &NetworkState {
        self.state = advance_mobility(&self.state, &self.config, &mut self.rng);
        &self.state
    }

    /// True once `episode_len` steps have elapsed.
    pub fn episode_done(&self) -> bool {
        self.state.t >= self.config.episode_len
    }
}
