//! WebAssembly bindings for the static demo page in `www/`.

use netcurriculum::experiment::greedy_proposal;
use netcurriculum::ppo::{model_from_json, SavedModel};
use netcurriculum::reward::{parse, RewardExpr};
use netcurriculum::sim::{
    compute_rates, compute_sinr, linear_to_db, oracle_step_assoc, path_loss_db, qoe, EnvConfig,
    Environment, Point,
};
use netcurriculum::Matrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn config(json: &str) -> Result<EnvConfig, String> {
    let c = if json.trim().is_empty() {
        EnvConfig::default()
    } else {
        EnvConfig::from_json(json).map_err(|e| e.to_string())?
    };
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

/// Best SINR in dB over all base stations at each cell center of a
/// `cols x rows` grid, row-major from the top-left corner.
pub fn coverage(config: &EnvConfig, cols: usize, rows: usize) -> Vec<f64> {
    let points: Vec<Point> = (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| {
                Point::new(
                    (c as f64 + 0.5) * config.area_width / cols as f64,
                    (r as f64 + 0.5) * config.area_height / rows as f64,
                )
            })
        })
        .collect();
    let sinr = compute_sinr(&points, config);
    (0..points.len())
        .map(|i| {
            let best = sinr.row(i).iter().copied().fold(0.0, f64::max);
            linear_to_db(best)
        })
        .collect()
}

/// One UE alone on one BS at increasing ground distance. Five values per
/// sample: distance, path loss (dB), SINR (dB), rate (bit/s), QoE.
pub fn link_budget(config: &EnvConfig, max_distance: f64, samples: usize) -> Vec<f64> {
    let single = EnvConfig {
        num_bs: 1,
        bs_positions: Some(vec![Point::new(0.0, 0.0)]),
        ..config.clone()
    };
    let mut out = Vec::with_capacity(samples * 5);
    for k in 0..samples {
        let d = max_distance * (k + 1) as f64 / samples as f64;
        let sinr = compute_sinr(&[Point::new(d, 0.0)], &single);
        let rate = compute_rates(&Matrix::from_vec(1, 1, vec![1]), &sinr, &single)[(0, 0)];
        let gated = if sinr[(0, 0)] >= single.sinr_min { rate } else { 0.0 };
        out.extend([
            d,
            path_loss_db(d, &single),
            linear_to_db(sinr[(0, 0)]),
            gated,
            qoe(gated, &single),
        ]);
    }
    out
}

#[derive(Serialize)]
struct Link {
    ue: usize,
    bs: usize,
    qoe: f64,
}

#[derive(Serialize)]
pub struct Snapshot {
    t: usize,
    ues: Vec<Point>,
    bs: Vec<Point>,
    links: Vec<Link>,
    reward: f64,
    mean_qoe: f64,
    dropouts: usize,
    done: bool,
}

pub struct Sim {
    env: Environment,
    reward: RewardExpr,
    model: Option<SavedModel>,
    last_reward: f64,
}

impl Sim {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self, String> {
        Ok(Self {
            env: Environment::new(config, seed).map_err(|e| e.to_string())?,
            reward: parse("mean_qoe()").expect("built-in expression parses"),
            model: None,
            last_reward: 0.0,
        })
    }

    pub fn set_reward(&mut self, text: &str) -> Result<(), String> {
        self.reward = parse(text).map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn load_model(&mut self, json: &str) -> Result<(), String> {
        self.model = Some(model_from_json(json).map_err(|e| e.to_string())?);
        Ok(())
    }

    fn propose(&self, policy: &str) -> Result<Matrix<u8>, String> {
        let state = self.env.state();
        let cfg = self.env.config();
        let (m, n) = state.assoc.shape();
        match policy {
            "none" => Ok(Matrix::zeros(m, n)),
            "all" => Ok(Matrix::from_fn(m, n, |_, _| 1)),
            "strongest" => Ok(Matrix::from_fn(m, n, |i, j| {
                let best = (0..n).fold(0, |b, k| if state.sinr[(i, k)] > state.sinr[(i, b)] { k } else { b });
                u8::from(j == best)
            })),
            "oracle" => oracle_step_assoc(state, cfg)
                .map(|r| r.assoc)
                .map_err(|e| e.to_string()),
            "model" => {
                let model = self.model.as_ref().ok_or("no model loaded")?;
                if n > model.encoding.n_max {
                    return Err(format!(
                        "model handles at most {} base stations, scenario has {n}",
                        model.encoding.n_max
                    ));
                }
                greedy_proposal(&model.params, &model.encoding, state, &cfg.resolved_bs_positions())
                    .map_err(|e| e.to_string())
            }
            other => Err(format!("unknown policy `{other}`")),
        }
    }

    /// Applies the policy's association, scores it, then moves the UEs.
    /// A finished episode is reset first.
    pub fn step(&mut self, policy: &str) -> Result<Snapshot, String> {
        if self.env.episode_done() {
            self.env.reset();
        }
        let proposal = self.propose(policy)?;
        let state = self.env.apply_action(&proposal).map_err(|e| e.to_string())?;
        self.last_reward = self.reward.eval(state);
        let snap = self.snapshot();
        self.env.advance();
        Ok(Snapshot {
            done: self.env.episode_done(),
            ..snap
        })
    }

    pub fn reset(&mut self) -> Snapshot {
        self.env.reset();
        self.last_reward = 0.0;
        self.snapshot()
    }

    pub fn snapshot(&self) -> Snapshot {
        let state = self.env.state();
        let cfg = self.env.config();
        let links = state
            .assoc
            .indexed()
            .filter(|(_, &a)| a == 1)
            .map(|((i, j), _)| Link {
                ue: i,
                bs: j,
                qoe: state.qoe[(i, j)],
            })
            .collect();
        Snapshot {
            t: state.t,
            ues: state.positions(),
            bs: cfg.resolved_bs_positions(),
            links,
            reward: self.last_reward,
            mean_qoe: state.qoe.iter().sum::<f64>() / state.num_ues() as f64,
            dropouts: state.dropouts(cfg.sinr_min),
            done: self.env.episode_done(),
        }
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

fn to_json(s: &Snapshot) -> String {
    serde_json::to_string(s).expect("snapshot serializes")
}

#[wasm_bindgen(js_name = coverageMap)]
pub fn coverage_map(config_json: &str, cols: usize, rows: usize) -> Result<Vec<f64>, JsError> {
    if cols == 0 || rows == 0 || cols * rows > 1 << 20 {
        return Err(js(format!("grid {cols}x{rows} out of range")));
    }
    Ok(coverage(&config(config_json).map_err(js)?, cols, rows))
}

#[wasm_bindgen(js_name = linkBudget)]
pub fn link_budget_js(config_json: &str, max_distance: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    if !(max_distance.is_finite() && max_distance > 0.0) || samples == 0 || samples > 10_000 {
        return Err(js("need max_distance > 0 and 1..=10000 samples".into()));
    }
    Ok(link_budget(&config(config_json).map_err(js)?, max_distance, samples))
}

#[wasm_bindgen]
pub struct Simulation(Sim);

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str, seed: u64) -> Result<Simulation, JsError> {
        Ok(Self(Sim::new(config(config_json).map_err(js)?, seed).map_err(js)?))
    }

    #[wasm_bindgen(js_name = setReward)]
    pub fn set_reward(&mut self, expr: &str) -> Result<(), JsError> {
        self.0.set_reward(expr).map_err(js)
    }

    #[wasm_bindgen(js_name = loadModel)]
    pub fn load_model(&mut self, json: &str) -> Result<(), JsError> {
        self.0.load_model(json).map_err(js)
    }

    /// JSON snapshot after one step under `policy`: none, all, strongest,
    /// oracle or model.
    pub fn step(&mut self, policy: &str) -> Result<String, JsError> {
        self.0.step(policy).map(|s| to_json(&s)).map_err(js)
    }

    pub fn reset(&mut self) -> String {
        to_json(&self.0.reset())
    }

    pub fn snapshot(&self) -> String {
        to_json(&self.0.snapshot())
    }
}
