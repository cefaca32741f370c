use serde::Serialize;

use super::stage::Stage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Progress {
    Advance,
    Continue,
    Stagnant,
}

/// Ordinary least-squares slope of `ys` against `0, 1, 2, ...`.
pub fn least_squares_slope(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let (num, den) = ys.iter().enumerate().fold((0.0, 0.0), |(num, den), (x, y)| {
        let dx = x as f64 - x_mean;
        (num + dx * (y - y_mean), den + dx * dx)
    });
    num / den
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Decides whether a stage is passed, still learning, or stuck.
///
/// * `Advance`: at least `window` episodes and the mean of the last
///   `window` reaches the threshold.
/// * `Stagnant`: the stage step budget is spent, or at least `2 * window`
///   episodes whose fitted slope is below `slope_tol` while the window mean
///   is under the threshold.
pub fn check_progress(
    episode_rewards: &[f64],
    stage_env_steps: u64,
    stage: &Stage,
    slope_tol: f64,
) -> Progress {
    let w = stage.window.max(1);
    let n = episode_rewards.len();
    let window_mean = (n >= w).then(|| mean(&episode_rewards[n - w..]));
    if let Some(m) = window_mean {
        if m >= stage.threshold {
            return Progress::Advance;
        }
    }
    if stage_env_steps >= stage.max_env_steps {
        return Progress::Stagnant;
    }
    if n >= 2 * w && least_squares_slope(&episode_rewards[n - 2 * w..]) < slope_tol {
        return Progress::Stagnant;
    }
    Progress::Continue
}

/// One continuous visit to a stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSegment {
    pub stage_index: usize,
    pub stage_name: String,
    pub episode_rewards: Vec<f64>,
    pub env_steps: u64,
    pub updates: usize,
}

/// Append-only record of every stage visit.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RewardHistory {
    pub segments: Vec<StageSegment>,
}

impl RewardHistory {
    pub fn begin(&mut self, stage_index: usize, stage_name: &str) {
        self.segments.push(StageSegment {
            stage_index,
            stage_name: stage_name.to_string(),
            episode_rewards: Vec::new(),
            env_steps: 0,
            updates: 0,
        });
    }

    pub fn record(&mut self, episode_rewards: &[f64], env_steps: u64) {
        let seg = self
            .segments
            .last_mut()
            .expect("record called before begin");
        seg.episode_rewards.extend_from_slice(episode_rewards);
        seg.env_steps += env_steps;
        seg.updates += 1;
    }

    pub fn current(&self) -> Option<&StageSegment> {
        self.segments.last()
    }

    pub fn total_env_steps(&self) -> u64 {
        self.segments.iter().map(|s| s.env_steps).sum()
    }

    pub fn total_updates(&self) -> usize {
        self.segments.iter().map(|s| s.updates).sum()
    }

    /// Episode rewards of every visit to `stage_index`, in order.
    pub fn stage_rewards(&self, stage_index: usize) -> Vec<f64> {
        self.segments
            .iter()
            .filter(|s| s.stage_index == stage_index)
            .flat_map(|s| s.episode_rewards.iter().copied())
            .collect()
    }
}
