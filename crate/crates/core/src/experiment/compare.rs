//! `compare`: metrics of several `front.csv` files side by side.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::artifacts::{write_json, FrontMetrics, MetricsInputs};
use super::CliError;
use crate::decomposition::{even_preference_vectors, PreferenceVectors};
use crate::metrics::pareto_filter_indices;

/// One row of a `front.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontRow {
    pub algorithm: String,
    pub run_id: String,
    pub k_or_seed: String,
    /// Empty when the run recorded no final losses.
    pub losses: Vec<f64>,
    pub terminal_status: String,
}

impl FrontRow {
    fn usable(&self) -> bool {
        self.terminal_status != "failed" && !self.losses.is_empty()
    }
}

/// Reads a `front.csv`. Returns the objective count from the header, or
/// `None` for a file with no header at all.
pub fn read_front(path: &Path) -> Result<(Option<usize>, Vec<FrontRow>), CliError> {
    let bad = |msg: String| CliError::Invalid(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    if text.trim().is_empty() {
        return Ok((None, Vec::new()));
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let n = header.len();
    let m = n.saturating_sub(4);
    let expected: Vec<String> = ["algorithm", "run_id", "k_or_seed"]
        .map(String::from)
        .into_iter()
        .chain((1..=m).map(|i| format!("loss_{i}")))
        .chain(["terminal_status".to_string()])
        .collect();
    if m == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = i + 2;
        let losses: Vec<&str> = (3..3 + m).map(|j| &record[j]).collect();
        let losses = if losses.iter().all(|s| s.is_empty()) {
            Vec::new()
        } else {
            losses
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("line {line}: {e}")))?
        };
        rows.push(FrontRow {
            algorithm: record[0].to_string(),
            run_id: record[1].to_string(),
            k_or_seed: record[2].to_string(),
            losses,
            terminal_status: record[n - 1].to_string(),
        });
    }
    Ok((Some(m), rows))
}

#[derive(Debug, Clone, Default)]
pub struct CompareOptions {
    /// Hypervolume reference point. Defaults to 1.1 times the largest value
    /// of each objective over every input.
    pub reference: Option<Vec<f64>>,
    /// Sectors for coverage. Defaults to ten generated preference vectors.
    pub prefs: Option<PreferenceVectors>,
    /// Where to write the JSON comparison, if anywhere.
    pub output: Option<PathBuf>,
}

/// Metrics of one algorithm within one input file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceMetrics {
    pub source: String,
    /// `None` for an input with no rows.
    pub algorithm: Option<String>,
    pub rows: usize,
    pub failed: usize,
    pub metrics: FrontMetrics,
    /// Points of this source that survive filtering of all inputs pooled.
    pub pooled_nondominated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub objectives: Option<usize>,
    pub reference: Option<Vec<f64>>,
    pub pooled_points: usize,
    pub pooled_nondominated: usize,
    pub sources: Vec<SourceMetrics>,
    pub warnings: Vec<String>,
}

fn default_reference(points: &[&[f64]]) -> Option<Vec<f64>> {
    if points.is_empty() || points[0].len() != 2 {
        return None;
    }
    Some(
        (0..2)
            .map(|i| {
                let max = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
                if max > 0.0 {
                    1.1 * max
                } else {
                    max + 0.1
                }
            })
            .collect(),
    )
}

/// `paretomtl compare <front.csv>...`.
pub fn cmd_compare(paths: &[PathBuf], opts: &CompareOptions) -> Result<Comparison, CliError> {
    if paths.is_empty() {
        return Err(CliError::Invalid("compare needs at least one front.csv".into()));
    }
    let mut inputs = Vec::new();
    let mut m: Option<usize> = None;
    for path in paths {
        let (file_m, rows) = read_front(path)?;
        if let Some(fm) = file_m {
            match m {
                Some(prev) if prev != fm => {
                    return Err(CliError::Invalid(format!(
                        "{} has {fm} objectives, earlier inputs have {prev}",
                        path.display()
                    )))
                }
                _ => m = Some(fm),
            }
        }
        inputs.push((path.display().to_string(), rows));
    }

    let mut warnings = Vec::new();
    let prefs = match (&opts.prefs, m) {
        (Some(p), Some(m)) if p.objectives() != m => {
            return Err(CliError::Invalid(format!(
                "preference vectors have {} components, fronts have {m} objectives",
                p.objectives()
            )))
        }
        (Some(p), _) => Some(p.clone()),
        (None, Some(m)) => Some(even_preference_vectors(10, m, 0)?),
        (None, None) => None,
    };

    // Groups in input order, algorithms in order of first appearance.
    let mut groups: Vec<(String, Option<String>, Vec<&FrontRow>)> = Vec::new();
    for (source, rows) in &inputs {
        if rows.is_empty() {
            warnings.push(format!("{source}: empty front, metrics are null"));
            groups.push((source.clone(), None, Vec::new()));
            continue;
        }
        let mut names: Vec<&str> = Vec::new();
        for r in rows {
            if !names.contains(&r.algorithm.as_str()) {
                names.push(&r.algorithm);
            }
        }
        for name in names {
            let mine = rows.iter().filter(|r| r.algorithm == name).collect();
            groups.push((source.clone(), Some(name.to_string()), mine));
        }
    }

    let pooled: Vec<(usize, &[f64])> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, (_, _, rows))| {
            rows.iter()
                .filter(|r| r.usable())
                .map(move |r| (g, r.losses.as_slice()))
        })
        .collect();
    let pooled_points: Vec<&[f64]> = pooled.iter().map(|p| p.1).collect();
    let survivors = pareto_filter_indices(&pooled_points)?;
    let mut survivor_counts = vec![0; groups.len()];
    for i in &survivors {
        survivor_counts[pooled[*i].0] += 1;
    }

    let reference = match &opts.reference {
        Some(r) if m.is_some_and(|m| m != 2) || r.len() != 2 => {
            return Err(CliError::Invalid(
                "a hypervolume reference needs two-objective fronts".into(),
            ))
        }
        Some(r) => Some(r.clone()),
        None => default_reference(&pooled_points),
    };
    let metric_inputs = MetricsInputs {
        prefs: prefs.as_ref(),
        reference: reference.as_deref(),
    };

    let mut sources = Vec::new();
    for (g, (source, algorithm, rows)) in groups.iter().enumerate() {
        let points: Vec<Vec<f64>> = rows.iter().filter(|r| r.usable()).map(|r| r.losses.clone()).collect();
        let (metrics, w) = FrontMetrics::compute(&points, &metric_inputs);
        if algorithm.is_some() {
            let label = algorithm.as_deref().unwrap_or("-");
            warnings.extend(w.into_iter().map(|w| format!("{source} [{label}]: {w}")));
        }
        sources.push(SourceMetrics {
            source: source.clone(),
            algorithm: algorithm.clone(),
            rows: rows.len(),
            failed: rows.iter().filter(|r| !r.usable()).count(),
            metrics,
            pooled_nondominated: survivor_counts[g],
        });
    }

    let comparison = Comparison {
        objectives: m,
        reference,
        pooled_points: pooled.len(),
        pooled_nondominated: survivors.len(),
        sources,
        warnings,
    };
    if let Some(out) = &opts.output {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        write_json(out, &comparison)?;
    }
    Ok(comparison)
}
