use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// One row per finished training episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub seed: u64,
    /// Stage name, or `baseline`.
    pub phase: String,
    /// Total env steps of the run when the episode ended.
    pub env_step: u64,
    pub episode: u64,
    /// Per-step average of the phase's reward.
    pub mean_episode_reward: f64,
    /// Per-step average of the base reward.
    pub mean_qoe: f64,
    pub connected_fraction: f64,
    pub dropouts: u64,
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(ExperimentError::io(path))
}

/// Reads and checks a metrics file: values finite, `env_step` never
/// decreasing.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<MetricsRow> = Vec::new();
    for (line, row) in r.deserialize().enumerate() {
        let row: MetricsRow =
            row.map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
        let finite = [row.mean_episode_reward, row.mean_qoe, row.connected_fraction]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ExperimentError::Data(format!(
                "{}: row {} has a non-finite value",
                path.display(),
                line + 1
            )));
        }
        if rows.last().is_some_and(|prev| prev.env_step > row.env_step) {
            return Err(ExperimentError::Data(format!(
                "{}: env_step decreases at row {}",
                path.display(),
                line + 1
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, r: f64) -> MetricsRow {
        MetricsRow {
            run_id: "baseline-seed1".into(),
            seed: 1,
            phase: "baseline".into(),
            env_step: step,
            episode: step / 100,
            mean_episode_reward: r,
            mean_qoe: r,
            connected_fraction: 0.5,
            dropouts: 3,
        }
    }

    #[test]
    fn round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let rows = vec![row(100, 0.1), row(200, 1.0 / 3.0)];
        write_metrics(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "run_id,seed,phase,env_step,episode,mean_episode_reward,mean_qoe,connected_fraction,dropouts\n"
        ));
        assert_eq!(read_metrics(&path).unwrap(), rows);
    }

    #[test]
    fn decreasing_steps_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics(&path, &[row(200, 0.1), row(100, 0.1)]).unwrap();
        assert!(read_metrics(&path).is_err());
    }
}
