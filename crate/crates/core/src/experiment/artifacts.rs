//! CSV and JSON artifacts and the metrics embedded in them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::{Algorithm, ResolvedConfig};
use super::run::RunRecord;
use super::CliError;
use crate::decomposition::PreferenceVectors;
use crate::metrics::{hypervolume_2d, pareto_filter, sector_occupancy, spacing};
use crate::solvers::Phase;

/// Seventeen significant digits, so parsing the text gives back the same
/// `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn loss_headers(prefix: &str, m: usize) -> impl Iterator<Item = String> + '_ {
    (1..=m).map(move |i| format!("{prefix}_{i}"))
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(&header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

fn losses_or_blank(losses: &[f64], m: usize) -> impl Iterator<Item = String> + '_ {
    (0..m).map(move |i| losses.get(i).map(|&x| format_float(x)).unwrap_or_default())
}

/// `front.csv`: one row per run with its final losses. Failed runs whose
/// losses could not be evaluated have blank loss fields.
pub(crate) fn write_front(path: &Path, records: &[RunRecord], m: usize) -> Result<(), CliError> {
    let header = ["algorithm", "run_id", "k_or_seed"]
        .map(String::from)
        .into_iter()
        .chain(loss_headers("loss", m))
        .chain(["terminal_status".to_string()])
        .collect();
    let rows = records.iter().map(|r| {
        let mut row = vec![
            r.algorithm.name().to_string(),
            r.run_id.to_string(),
            r.k_or_seed.to_string(),
        ];
        row.extend(losses_or_blank(&r.trajectory.final_losses, m));
        row.push(r.trajectory.status.label().to_string());
        row
    });
    write_rows(path, header, rows)
}

/// `trajectory.csv`: one row per iteration, initialization phase included.
/// `max_constraint` is `max_{j≠k} G_j` and blank for unconstrained drivers.
pub(crate) fn write_trajectories(path: &Path, records: &[RunRecord], m: usize) -> Result<(), CliError> {
    let header = ["algorithm", "run_id", "k_or_seed", "phase", "iteration"]
        .map(String::from)
        .into_iter()
        .chain(loss_headers("loss", m))
        .chain(["max_constraint", "activated", "direction_norm", "feasible"].map(String::from))
        .collect();
    let rows = records.iter().flat_map(|r| {
        let owner = r.owner();
        r.trajectory.records.iter().map(move |it| {
            let mut row = vec![
                r.algorithm.name().to_string(),
                r.run_id.to_string(),
                r.k_or_seed.to_string(),
                phase_name(it.phase).to_string(),
                it.iteration.to_string(),
            ];
            row.extend(losses_or_blank(&it.losses, m));
            let max_other = it
                .constraints
                .iter()
                .enumerate()
                .filter(|&(j, _)| Some(j) != owner)
                .map(|(_, &g)| g)
                .reduce(f64::max);
            row.push(max_other.map(format_float).unwrap_or_default());
            row.push(it.activated.to_string());
            row.push(format_float(it.direction_norm));
            row.push(it.feasible.to_string());
            row
        })
    });
    write_rows(path, header, rows)
}

/// `weights.csv`: the effective loss weights `w` (with `d = −Jᵀw`) of every
/// iteration.
pub(crate) fn write_weights(path: &Path, records: &[RunRecord], m: usize) -> Result<(), CliError> {
    let header = ["algorithm", "run_id", "k_or_seed", "phase", "iteration"]
        .map(String::from)
        .into_iter()
        .chain(loss_headers("weight", m))
        .collect();
    let rows = records.iter().flat_map(|r| {
        r.trajectory.records.iter().map(move |it| {
            let mut row = vec![
                r.algorithm.name().to_string(),
                r.run_id.to_string(),
                r.k_or_seed.to_string(),
                phase_name(it.phase).to_string(),
                it.iteration.to_string(),
            ];
            row.extend(losses_or_blank(&it.weights, m));
            row
        })
    });
    write_rows(path, header, rows)
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Init => "init",
        Phase::Main => "main",
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// What the metrics need besides the points.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricsInputs<'a> {
    /// Sectors for coverage and occupancy.
    pub prefs: Option<&'a PreferenceVectors>,
    /// Hypervolume reference point (two objectives only).
    pub reference: Option<&'a [f64]>,
}

/// Quality measures of one set of final loss vectors. Measures that do not
/// apply are `None` (`null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontMetrics {
    pub points: usize,
    pub nondominated: usize,
    pub hypervolume: Option<f64>,
    /// Points outside the reference box; they add no volume.
    pub outside_reference: usize,
    /// Spacing of the nondominated subset.
    pub spacing: Option<f64>,
    pub sector_coverage: Option<f64>,
    pub sector_occupancy: Option<Vec<usize>>,
}

impl FrontMetrics {
    /// Computes every applicable measure and explains the ones left out.
    pub fn compute(points: &[Vec<f64>], inputs: &MetricsInputs) -> (Self, Vec<String>) {
        let mut warnings = Vec::new();
        let mut out = FrontMetrics {
            points: points.len(),
            nondominated: 0,
            hypervolume: None,
            outside_reference: 0,
            spacing: None,
            sector_coverage: None,
            sector_occupancy: None,
        };
        if points.is_empty() {
            warnings.push("empty front: metrics are null".into());
            return (out, warnings);
        }
        let front = match pareto_filter(points) {
            Ok(f) => f,
            Err(e) => {
                warnings.push(format!("cannot filter front: {e}"));
                return (out, warnings);
            }
        };
        out.nondominated = front.len();
        out.spacing = (front.len() >= 2).then(|| spacing(&front).ok()).flatten();
        if let Some(reference) = inputs.reference {
            if reference.len() == 2 && points[0].len() == 2 {
                let inside: Vec<&Vec<f64>> = points
                    .iter()
                    .filter(|p| p[0] <= reference[0] && p[1] <= reference[1])
                    .collect();
                out.outside_reference = points.len() - inside.len();
                match hypervolume_2d(&inside, reference) {
                    Ok(hv) => out.hypervolume = Some(hv),
                    Err(e) => warnings.push(format!("hypervolume: {e}")),
                }
                if out.outside_reference > 0 {
                    warnings.push(format!(
                        "{} point(s) lie outside the reference box {reference:?}",
                        out.outside_reference
                    ));
                }
            }
        }
        if let Some(prefs) = inputs.prefs {
            if prefs.objectives() == points[0].len() {
                match sector_occupancy(points, prefs) {
                    Ok(occ) => {
                        let occupied = occ.iter().filter(|&&c| c > 0).count();
                        out.sector_coverage = Some(occupied as f64 / prefs.len() as f64);
                        out.sector_occupancy = Some(occ);
                    }
                    Err(e) => warnings.push(format!("sector coverage: {e}")),
                }
            }
        }
        (out, warnings)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureEntry {
    pub run_id: usize,
    pub k_or_seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerRunMetrics {
    pub run_id: usize,
    pub seed: u64,
    pub metrics: FrontMetrics,
}

/// Lowest value reached on one objective, and by which run.
#[derive(Debug, Clone, Serialize)]
pub struct TaskBest {
    pub objective: usize,
    pub loss: f64,
    pub run_id: usize,
    pub k_or_seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub status_counts: BTreeMap<&'static str, usize>,
    pub failures: Vec<FailureEntry>,
    /// Metrics of all non-failed final points across every seed.
    pub pooled: FrontMetrics,
    pub per_run: Vec<PerRunMetrics>,
    /// Objectives are numbered from 1, matching the `loss_i` columns.
    pub per_task_best: Vec<TaskBest>,
}

#[derive(Serialize)]
pub(crate) struct Summary<'a> {
    pub config: &'a ResolvedConfig,
    pub algorithms: &'a [AlgorithmSummary],
    pub warnings: &'a [String],
}

fn final_points<'a>(records: impl Iterator<Item = &'a RunRecord>) -> Vec<Vec<f64>> {
    records
        .filter(|r| !r.trajectory.status.is_failure())
        .map(|r| r.trajectory.final_losses.clone())
        .collect()
}

pub(crate) fn summarize(
    cfg: &ResolvedConfig,
    records: &[RunRecord],
) -> Result<(Vec<AlgorithmSummary>, Vec<String>), CliError> {
    let prefs = cfg.prefs();
    let inputs = MetricsInputs {
        prefs: Some(&prefs),
        reference: cfg.hypervolume_reference.as_deref(),
    };
    let mut warnings = Vec::new();
    let mut out = Vec::new();
    for &algorithm in &cfg.algorithms {
        let mine: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == algorithm).collect();
        let mut status_counts = BTreeMap::new();
        let mut failures = Vec::new();
        for r in &mine {
            *status_counts.entry(r.trajectory.status.label()).or_insert(0) += 1;
            if let crate::solvers::TerminalStatus::Failed(message) = &r.trajectory.status {
                failures.push(FailureEntry {
                    run_id: r.run_id,
                    k_or_seed: r.k_or_seed,
                    message: message.clone(),
                });
            }
        }
        let (pooled, w) = FrontMetrics::compute(&final_points(mine.iter().copied()), &inputs);
        warnings.extend(w.into_iter().map(|w| format!("{} (pooled): {w}", algorithm.name())));
        let per_run = cfg
            .seeds
            .iter()
            .enumerate()
            .map(|(run_id, &seed)| {
                let pts = final_points(mine.iter().copied().filter(|r| r.run_id == run_id));
                PerRunMetrics {
                    run_id,
                    seed,
                    metrics: FrontMetrics::compute(&pts, &inputs).0,
                }
            })
            .collect();
        let per_task_best = (0..cfg.objectives())
            .filter_map(|i| {
                mine.iter()
                    .filter(|r| !r.trajectory.status.is_failure())
                    .filter_map(|r| r.trajectory.final_losses.get(i).map(|&l| (l, r)))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(loss, r)| TaskBest {
                        objective: i + 1,
                        loss,
                        run_id: r.run_id,
                        k_or_seed: r.k_or_seed,
                    })
            })
            .collect();
        out.push(AlgorithmSummary {
            algorithm,
            runs: mine.len(),
            status_counts,
            failures,
            pooled,
            per_run,
            per_task_best,
        });
    }
    Ok((out, warnings))
}
