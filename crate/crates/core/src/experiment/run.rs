//! `run` and `ablate-init`.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::artifacts::{self, AlgorithmSummary, FrontMetrics, MetricsInputs};
use super::config::{load_config, Algorithm, LinearWeightSpec, ResolvedConfig};
use super::CliError;
use crate::execution::Execution;
use crate::problems::MultiObjectiveProblem;
use crate::solvers::{linear_run, mgda_run, run_subproblem, SolverConfig, TerminalStatus, Trajectory};

/// Overrides the configured output directory when set.
pub const OUTPUT_DIR_ENV: &str = "PARETOMTL_OUTPUT_DIR";

/// Present in the output directory while a run is in progress; removed once
/// every artifact has been written.
pub const INCOMPLETE_MARKER: &str = "RUN_INCOMPLETE";

/// One finished run: a Pareto MTL subproblem, an MGDA seed or a linear
/// weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    /// Position of the base seed in the configured seed list.
    pub run_id: usize,
    /// Subproblem index for Pareto MTL, starting-point seed otherwise.
    pub k_or_seed: u64,
    /// Fixed weights of a linear run.
    pub linear_weights: Option<Vec<f64>>,
    pub trajectory: Trajectory,
}

impl RunRecord {
    /// Index of the sector owning the run, for Pareto MTL.
    pub fn owner(&self) -> Option<usize> {
        (self.algorithm == Algorithm::ParetoMtl).then_some(self.k_or_seed as usize)
    }
}

/// Weight vectors for the linear baseline under base seed `seed`.
pub fn linear_weights(spec: &LinearWeightSpec, m: usize, seed: u64) -> Vec<Vec<f64>> {
    match spec {
        LinearWeightSpec::Random { count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_11ea_0000_0000);
            (0..*count)
                .map(|_| {
                    if m == 2 {
                        let w1: f64 = rng.random();
                        vec![w1, 1.0 - w1]
                    } else {
                        let raw: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                        let total: f64 = raw.iter().sum();
                        raw.into_iter().map(|x| x / total).collect()
                    }
                })
                .collect()
        }
        LinearWeightSpec::Grid { divisions } => {
            let mut out = Vec::new();
            let mut current = vec![0usize; m];
            compositions(*divisions, 0, &mut current, &mut out);
            out.into_iter()
                .map(|c| c.into_iter().map(|x| x as f64 / *divisions as f64).collect())
                .collect()
        }
        LinearWeightSpec::Explicit { weights } => weights.clone(),
    }
}

/// All `m`-part compositions of `remaining`, first component descending.
fn compositions(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for x in (0..=remaining).rev() {
        current[pos] = x;
        compositions(remaining - x, pos + 1, current, out);
    }
}

enum Job {
    Pareto { k: usize },
    Mgda { seed: u64 },
    Linear { seed: u64, weights: Vec<f64> },
}

fn failed(seed: u64, e: crate::Error) -> Trajectory {
    Trajectory {
        seed,
        records: Vec::new(),
        status: TerminalStatus::Failed(e.to_string()),
        init_feasible: None,
        final_theta: Vec::new(),
        final_losses: Vec::new(),
    }
}

/// Executes every configured run. Records come back ordered by run id,
/// then algorithm, then index, whatever `exec` is.
pub fn run_experiment(cfg: &ResolvedConfig, exec: Execution) -> Result<Vec<RunRecord>, CliError> {
    let problem = cfg.build_problem()?;
    let prefs = cfg.prefs();
    let m = cfg.objectives();

    let mut jobs: Vec<(Algorithm, usize, u64, Job)> = Vec::new();
    for (run_id, &base) in cfg.seeds.iter().enumerate() {
        for &algorithm in &cfg.algorithms {
            match algorithm {
                Algorithm::ParetoMtl => {
                    for k in 0..prefs.len() {
                        jobs.push((algorithm, run_id, base, Job::Pareto { k }));
                    }
                }
                Algorithm::Mgda => {
                    for i in 0..cfg.mgda_runs {
                        let seed = base.wrapping_add(i as u64);
                        jobs.push((algorithm, run_id, base, Job::Mgda { seed }));
                    }
                }
                Algorithm::Linear => {
                    for (i, weights) in linear_weights(&cfg.linear_weights, m, base).into_iter().enumerate() {
                        let seed = base.wrapping_add(i as u64);
                        jobs.push((algorithm, run_id, base, Job::Linear { seed, weights }));
                    }
                }
            }
        }
    }

    let problem: &dyn MultiObjectiveProblem = problem.as_ref();
    let records = exec.with_workers(cfg.workers, || {
        exec.map(jobs.len(), |i| {
            let (algorithm, run_id, base, job) = &jobs[i];
            let solver = SolverConfig {
                base_seed: *base,
                ..cfg.solver.clone()
            };
            let (k_or_seed, linear, trajectory) = match job {
                Job::Pareto { k } => {
                    let seed = base.wrapping_add(*k as u64);
                    let t = run_subproblem(problem, &prefs, *k, &solver).unwrap_or_else(|e| failed(seed, e));
                    (*k as u64, None, t)
                }
                Job::Mgda { seed } => {
                    let solver = SolverConfig {
                        base_seed: *seed,
                        ..solver
                    };
                    (
                        *seed,
                        None,
                        mgda_run(problem, &solver).unwrap_or_else(|e| failed(*seed, e)),
                    )
                }
                Job::Linear { seed, weights } => {
                    let solver = SolverConfig {
                        base_seed: *seed,
                        ..solver
                    };
                    let t = linear_run(problem, weights, &solver).unwrap_or_else(|e| failed(*seed, e));
                    (*seed, Some(weights.clone()), t)
                }
            };
            RunRecord {
                algorithm: *algorithm,
                run_id: *run_id,
                k_or_seed,
                linear_weights: linear,
                trajectory,
            }
        })
    });
    Ok(records)
}

/// What `run` produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub runs: usize,
    pub failures: usize,
    pub algorithms: Vec<AlgorithmSummary>,
    pub warnings: Vec<String>,
}

fn output_dir(cfg: &ResolvedConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => cfg.output_dir.clone(),
    }
}

/// Writes every artifact for `records` into `dir`, bracketed by the
/// incomplete-run marker.
pub fn write_artifacts(cfg: &ResolvedConfig, records: &[RunRecord], dir: &Path) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    std::fs::write(&marker, "artifacts are being written\n").map_err(CliError::io(&marker))?;

    let m = cfg.objectives();
    artifacts::write_front(&dir.join("front.csv"), records, m)?;
    artifacts::write_trajectories(&dir.join("trajectory.csv"), records, m)?;
    artifacts::write_weights(&dir.join("weights.csv"), records, m)?;
    let (algorithms, warnings) = artifacts::summarize(cfg, records)?;
    let summary = artifacts::Summary {
        config: cfg,
        algorithms: &algorithms,
        warnings: &warnings,
    };
    artifacts::write_json(&dir.join("summary.json"), &summary)?;
    if m == 2 {
        let path = dir.join("front.svg");
        std::fs::write(&path, super::svg::front_svg(records)).map_err(CliError::io(&path))?;
    }

    std::fs::remove_file(&marker).map_err(CliError::io(&marker))?;
    Ok(RunReport {
        output_dir: dir.to_path_buf(),
        runs: records.len(),
        failures: records.iter().filter(|r| r.trajectory.status.is_failure()).count(),
        algorithms,
        warnings,
    })
}

/// `paretomtl run <config>`.
pub fn cmd_run(config_path: &Path, exec: Execution) -> Result<RunReport, CliError> {
    let mut cfg = load_config(config_path)?;
    cfg.output_dir = output_dir(&cfg);
    let records = run_experiment(&cfg, exec)?;
    write_artifacts(&cfg, &records, &cfg.output_dir.clone())
}

/// Per-seed coverage of the paired ablation runs.
#[derive(Debug, Clone, Serialize)]
pub struct AblationPair {
    pub run_id: usize,
    pub seed: u64,
    pub with_init: FrontMetrics,
    pub without_init: FrontMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub output_dir: PathBuf,
    pub pairs: Vec<AblationPair>,
    pub mean_coverage_with_init: Option<f64>,
    pub mean_coverage_without_init: Option<f64>,
    pub init_failed_with_init: usize,
}

fn mean_coverage(metrics: &[&FrontMetrics]) -> Option<f64> {
    let values: Option<Vec<f64>> = metrics.iter().map(|m| m.sector_coverage).collect();
    values
        .filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// `paretomtl ablate-init <config>`: Pareto MTL with and without the
/// initialization phase under identical seeds. Artifacts go to
/// `with-init/` and `without-init/`, the comparison to `ablation.json`.
pub fn cmd_ablate_init(config_path: &Path, exec: Execution) -> Result<AblationReport, CliError> {
    let mut cfg = load_config(config_path)?;
    cfg.output_dir = output_dir(&cfg);
    cfg.algorithms = vec![Algorithm::ParetoMtl];
    let root = cfg.output_dir.clone();
    std::fs::create_dir_all(&root).map_err(CliError::io(&root))?;
    let marker = root.join(INCOMPLETE_MARKER);
    std::fs::write(&marker, "ablation in progress\n").map_err(CliError::io(&marker))?;

    let mut halves = Vec::new();
    for (enabled, name) in [(true, "with-init"), (false, "without-init")] {
        let mut variant = cfg.clone();
        variant.solver.init_enabled = enabled;
        variant.output_dir = root.join(name);
        let records = run_experiment(&variant, exec)?;
        write_artifacts(&variant, &records, &variant.output_dir.clone())?;
        halves.push(records);
    }

    let prefs = cfg.prefs();
    let inputs = MetricsInputs {
        prefs: Some(&prefs),
        reference: cfg.hypervolume_reference.as_deref(),
    };
    let mut pairs = Vec::new();
    for (run_id, &seed) in cfg.seeds.iter().enumerate() {
        let front = |records: &[RunRecord]| -> Vec<Vec<f64>> {
            records
                .iter()
                .filter(|r| r.run_id == run_id && !r.trajectory.status.is_failure())
                .map(|r| r.trajectory.final_losses.clone())
                .collect()
        };
        pairs.push(AblationPair {
            run_id,
            seed,
            with_init: FrontMetrics::compute(&front(&halves[0]), &inputs).0,
            without_init: FrontMetrics::compute(&front(&halves[1]), &inputs).0,
        });
    }
    let report = AblationReport {
        output_dir: root.clone(),
        mean_coverage_with_init: mean_coverage(&pairs.iter().map(|p| &p.with_init).collect::<Vec<_>>()),
        mean_coverage_without_init: mean_coverage(&pairs.iter().map(|p| &p.without_init).collect::<Vec<_>>()),
        init_failed_with_init: halves[0]
            .iter()
            .filter(|r| r.trajectory.status == TerminalStatus::InitFailed)
            .count(),
        pairs,
    };
    artifacts::write_json(&root.join("ablation.json"), &report)?;
    std::fs::remove_file(&marker).map_err(CliError::io(&marker))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_weights_enumerate_the_simplex() {
        let w = linear_weights(&LinearWeightSpec::Grid { divisions: 4 }, 2, 0);
        assert_eq!(w.len(), 5);
        assert_eq!(w[0], vec![1.0, 0.0]);
        assert_eq!(w[4], vec![0.0, 1.0]);
        let w3 = linear_weights(&LinearWeightSpec::Grid { divisions: 3 }, 3, 0);
        assert_eq!(w3.len(), 10);
        assert!(w3.iter().all(|w| (w.iter().sum::<f64>() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_weights_are_seeded_and_on_the_simplex() {
        let spec = LinearWeightSpec::Random { count: 50 };
        let a = linear_weights(&spec, 2, 7);
        assert_eq!(a, linear_weights(&spec, 2, 7));
        assert_ne!(a, linear_weights(&spec, 2, 8));
        assert!(a
            .iter()
            .all(|w| w[0] >= 0.0 && w[1] >= 0.0 && (w[0] + w[1] - 1.0).abs() < 1e-15));
        let b = linear_weights(&spec, 3, 7);
        assert!(b
            .iter()
            .all(|w| w.len() == 3 && (w.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }
}
