use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::metrics::{read_metrics, MetricsRow};
use super::train::Manifest;
use super::{ExperimentError, Mode};
use crate::curriculum::{Curriculum, Provenance, BASELINE_PHASE};

/// Width of the env-step bins used to align learning curves.
pub const DEFAULT_BIN_STEPS: u64 = 5_000;

#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub metrics: Vec<MetricsRow>,
    /// Phases that train on the target task with the base reward.
    pub target_phases: Vec<String>,
}

impl LoadedRun {
    pub fn target_rows(&self) -> impl Iterator<Item = &MetricsRow> {
        self.metrics
            .iter()
            .filter(|r| self.target_phases.iter().any(|p| *p == r.phase))
    }
}

/// Stages equal to the final one in environment and reward count as
/// target-task training.
fn target_phases(curriculum: &Curriculum) -> Vec<String> {
    let Some(last) = curriculum.stages.last() else {
        return Vec::new();
    };
    curriculum
        .stages
        .iter()
        .filter(|s| s.env == last.env && s.reward.trim() == last.reward.trim())
        .map(|s| s.name.clone())
        .collect()
}

pub fn load_run(dir: &Path) -> Result<LoadedRun, ExperimentError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(ExperimentError::io(&path))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
    let metrics_path = dir.join("metrics.csv");
    if !metrics_path.exists() {
        return Err(ExperimentError::Data(format!(
            "{}: missing metrics.csv",
            dir.display()
        )));
    }
    let metrics = read_metrics(&metrics_path)?;
    let target_phases = match manifest.mode {
        Mode::Baseline => vec![BASELINE_PHASE.to_string()],
        Mode::Curriculum => {
            let path = dir.join("curriculum.json");
            let text = fs::read_to_string(&path).map_err(ExperimentError::io(&path))?;
            let c = Curriculum::from_json(
                &text,
                Provenance::Replay,
                &manifest.config.env,
                &manifest.config.encoding,
            )
            .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
            target_phases(&c)
        }
    };
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        manifest,
        metrics,
        target_phases,
    })
}

/// First env step at which the mean base reward of the last `window`
/// target-task episodes reaches `threshold`.
pub fn steps_to_threshold<'a>(
    rows: impl IntoIterator<Item = &'a MetricsRow>,
    threshold: f64,
    window: usize,
) -> Option<u64> {
    let window = window.max(1);
    let mut recent: Vec<f64> = Vec::new();
    for row in rows {
        recent.push(row.mean_qoe);
        if recent.len() >= window {
            let tail = &recent[recent.len() - window..];
            if tail.iter().sum::<f64>() / window as f64 >= threshold {
                return Some(row.env_step);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    /// Upper edge of the bin.
    pub env_step: u64,
    /// Per run, mean base reward of target-task episodes ending in the bin.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    /// A seed, or `mean`.
    pub seed: String,
    pub curriculum_steps: Option<f64>,
    pub baseline_steps: Option<f64>,
    /// Baseline steps minus curriculum steps; positive favours the curriculum.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutput {
    pub run_ids: Vec<String>,
    pub curves: Vec<CurvePoint>,
    pub summary: Vec<SummaryRow>,
    pub threshold: f64,
    pub window: usize,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn compare_runs(
    runs: &[LoadedRun],
    threshold: f64,
    window: usize,
    bin_steps: u64,
) -> Result<CompareOutput, ExperimentError> {
    if runs.is_empty() {
        return Err(ExperimentError::Data("no runs to compare".into()));
    }
    let bin = bin_steps.max(1);
    let last_step = runs
        .iter()
        .flat_map(|r| r.metrics.last().map(|m| m.env_step))
        .max()
        .unwrap_or(0);
    let bins = last_step.div_ceil(bin) as usize;
    let mut sums = vec![vec![(0.0, 0usize); runs.len()]; bins];
    for (k, run) in runs.iter().enumerate() {
        for row in run.target_rows() {
            let b = (row.env_step.saturating_sub(1) / bin) as usize;
            sums[b][k].0 += row.mean_qoe;
            sums[b][k].1 += 1;
        }
    }
    let curves = sums
        .iter()
        .enumerate()
        .map(|(b, cells)| CurvePoint {
            env_step: (b as u64 + 1) * bin,
            values: cells
                .iter()
                .map(|&(s, n)| (n > 0).then(|| s / n as f64))
                .collect(),
        })
        .collect();

    let mut by_seed: BTreeMap<u64, [Option<Option<u64>>; 2]> = BTreeMap::new();
    for run in runs {
        let slot = match run.manifest.mode {
            Mode::Curriculum => 0,
            Mode::Baseline => 1,
        };
        let entry = by_seed.entry(run.manifest.seed).or_default();
        if entry[slot].is_some() {
            return Err(ExperimentError::Data(format!(
                "two {} runs for seed {}",
                run.manifest.mode.as_str(),
                run.manifest.seed
            )));
        }
        entry[slot] = Some(steps_to_threshold(run.target_rows(), threshold, window));
    }
    let mut summary = Vec::new();
    let (mut cs, mut bs, mut ds) = (Vec::new(), Vec::new(), Vec::new());
    for (seed, [c, b]) in &by_seed {
        let c = c.flatten().map(|v| v as f64);
        let b = b.flatten().map(|v| v as f64);
        let delta = c.zip(b).map(|(c, b)| b - c);
        cs.extend(c);
        bs.extend(b);
        ds.extend(delta);
        summary.push(SummaryRow {
            seed: seed.to_string(),
            curriculum_steps: c,
            baseline_steps: b,
            delta,
        });
    }
    summary.push(SummaryRow {
        seed: "mean".into(),
        curriculum_steps: mean(&cs),
        baseline_steps: mean(&bs),
        delta: mean(&ds),
    });
    Ok(CompareOutput {
        run_ids: runs.iter().map(|r| r.manifest.run_id.clone()).collect(),
        curves,
        summary,
        threshold,
        window,
    })
}

/// Writes `compare.csv` (aligned curves) and `summary.csv`.
pub fn write_compare(dir: &Path, out: &CompareOutput) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(ExperimentError::io(dir))?;
    let path = dir.join("compare.csv");
    let data = |p: &Path| {
        let p = p.to_path_buf();
        move |e: csv::Error| ExperimentError::Data(format!("{}: {e}", p.display()))
    };
    let mut w = csv::Writer::from_path(&path).map_err(data(&path))?;
    let mut header = vec!["env_step".to_string()];
    header.extend(out.run_ids.iter().cloned());
    w.write_record(&header).map_err(data(&path))?;
    for point in &out.curves {
        let mut record = vec![point.env_step.to_string()];
        record.extend(point.values.iter().map(|v| v.map_or(String::new(), |x| x.to_string())));
        w.write_record(&record).map_err(data(&path))?;
    }
    w.flush().map_err(ExperimentError::io(&path))?;

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(data(&path))?;
    for row in &out.summary {
        w.serialize(row).map_err(data(&path))?;
    }
    w.flush().map_err(ExperimentError::io(&path))
}
