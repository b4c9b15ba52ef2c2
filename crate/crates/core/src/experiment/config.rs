//! Experiment configuration: a JSON document with no unknown keys.
//!
//! ```json
//! {
//!   "problem": { "kind": "synthetic", "dim": 20 },
//!   "algorithms": ["all"],
//!   "preferences": { "count": 10 },
//!   "linear_weights": { "mode": "random", "count": 100 },
//!   "solver": { "eta": 0.5 },
//!   "seeds": [0],
//!   "output_dir": "results"
//! }
//! ```
//!
//! Solver keys left out take the defaults for the problem kind. The resolved
//! form, with every default filled in, is what gets embedded in
//! `summary.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::decomposition::{even_preference_vectors, PreferenceVectors};
use crate::problems::{Logistic3Problem, MultiObjectiveProblem, ShiftedProblem, SyntheticProblem};
use crate::solvers::SolverConfig;

/// A configuration problem, with the 1-based line it was found on when known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(text: Option<&str>, key: &str, message: impl Into<String>) -> Self {
        Self {
            line: text.and_then(|t| locate_key(t, key)),
            message: message.into(),
        }
    }
}

/// First line containing `"key"` followed by a colon.
fn locate_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|line| {
            line.find(&needle)
                .is_some_and(|i| line[i + needle.len()..].trim_start().starts_with(':'))
        })
        .map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Synthetic {
        dim: usize,
    },
    SyntheticWeighted {
        dim: usize,
        a1: f64,
        a2: f64,
    },
    Logistic3 {
        #[serde(default)]
        dataset_seed: u64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_features")]
        features: usize,
    },
}

fn default_samples() -> usize {
    Logistic3Problem::DEFAULT_SAMPLES
}

fn default_features() -> usize {
    Logistic3Problem::DEFAULT_FEATURES
}

impl ProblemSpec {
    pub fn objectives(&self) -> usize {
        match self {
            ProblemSpec::Logistic3 { .. } => 3,
            _ => 2,
        }
    }

    fn solver_defaults(&self) -> SolverConfig {
        match self {
            ProblemSpec::Logistic3 { .. } => SolverConfig::logistic(),
            _ => SolverConfig::synthetic(),
        }
    }

    /// Instantiates the problem, applying `shift` when given.
    pub fn build(&self, shift: Option<&[f64]>) -> crate::Result<Box<dyn MultiObjectiveProblem>> {
        let base: Box<dyn MultiObjectiveProblem> = match *self {
            ProblemSpec::Synthetic { dim } => Box::new(SyntheticProblem::new(dim)?),
            ProblemSpec::SyntheticWeighted { dim, a1, a2 } => Box::new(SyntheticProblem::weighted(dim, a1, a2)?),
            ProblemSpec::Logistic3 {
                dataset_seed,
                samples,
                features,
            } => Box::new(Logistic3Problem::with_size(dataset_seed, samples, features)?),
        };
        match shift {
            Some(s) => Ok(Box::new(ShiftedProblem::new(base, s.to_vec())?)),
            None => Ok(base),
        }
    }

    /// Reference point slightly beyond the largest attainable loss, when one
    /// is known.
    fn default_reference(&self, shift: Option<&[f64]>) -> Option<Vec<f64>> {
        let scale = match *self {
            ProblemSpec::Synthetic { .. } => [1.0, 1.0],
            ProblemSpec::SyntheticWeighted { a1, a2, .. } => [a1, a2],
            ProblemSpec::Logistic3 { .. } => return None,
        };
        let shift = shift.unwrap_or(&[0.0, 0.0]);
        Some(vec![1.1 * (scale[0] + shift[0]), 1.1 * (scale[1] + shift[1])])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    ParetoMtl,
    Mgda,
    Linear,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::ParetoMtl, Algorithm::Mgda, Algorithm::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ParetoMtl => "pareto-mtl",
            Algorithm::Mgda => "mgda",
            Algorithm::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum AlgorithmChoice {
    ParetoMtl,
    Mgda,
    Linear,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferenceSpec {
    /// Number of generated vectors (`K + 1` in the closed-form set).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// CSV file with one vector per line; relative paths resolve against the
    /// config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Seed for randomly generated vectors (three or more objectives).
    #[serde(default)]
    pub seed: u64,
}

impl Default for PreferenceSpec {
    fn default() -> Self {
        Self {
            count: Some(10),
            file: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinearWeightSpec {
    /// `w_1 ~ uniform(0, 1)`, `w_2 = 1 − w_1` for two objectives; uniform on
    /// the simplex otherwise.
    Random {
        count: usize,
    },
    /// Every `w` with entries in `{0, 1/h, …, 1}` summing to one.
    Grid {
        divisions: usize,
    },
    Explicit {
        weights: Vec<Vec<f64>>,
    },
}

impl Default for LinearWeightSpec {
    fn default() -> Self {
        LinearWeightSpec::Random { count: 100 }
    }
}

fn default_algorithms() -> Vec<AlgorithmChoice> {
    vec![AlgorithmChoice::All]
}

/// The configuration as written by the user.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    problem: ProblemSpec,
    #[serde(default = "default_algorithms")]
    algorithms: Vec<AlgorithmChoice>,
    #[serde(default)]
    preferences: PreferenceSpec,
    #[serde(default)]
    linear_weights: LinearWeightSpec,
    #[serde(default)]
    solver: Map<String, Value>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    repeats: Option<usize>,
    #[serde(default)]
    mgda_runs: Option<usize>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    loss_shift: Option<Vec<f64>>,
    #[serde(default)]
    hypervolume_reference: Option<Vec<f64>>,
}

/// Fully resolved configuration; every default is explicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub problem: ProblemSpec,
    pub algorithms: Vec<Algorithm>,
    pub preferences: PreferenceSpec,
    pub preference_vectors: Vec<Vec<f64>>,
    pub linear_weights: LinearWeightSpec,
    pub solver: SolverConfig,
    pub seeds: Vec<u64>,
    pub mgda_runs: usize,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub loss_shift: Option<Vec<f64>>,
    pub hypervolume_reference: Option<Vec<f64>>,
}

impl ResolvedConfig {
    pub fn prefs(&self) -> PreferenceVectors {
        PreferenceVectors::new(self.preference_vectors.clone()).expect("validated during resolution")
    }

    pub fn objectives(&self) -> usize {
        self.problem.objectives()
    }

    pub fn build_problem(&self) -> crate::Result<Box<dyn MultiObjectiveProblem>> {
        self.problem.build(self.loss_shift.as_deref())
    }
}

/// Default output directory when the config names none.
pub const DEFAULT_OUTPUT_DIR: &str = "results";

/// Parses and resolves a config file. Relative preference-file paths are
/// resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text, path.parent())
}

pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ResolvedConfig, ConfigError> {
    let raw: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    resolve(raw, Some(text), base_dir)
}

fn resolve(raw: ExperimentConfig, text: Option<&str>, base_dir: Option<&Path>) -> Result<ResolvedConfig, ConfigError> {
    let err = |key: &str, msg: String| ConfigError::at(text, key, msg);
    let m = raw.problem.objectives();

    match raw.problem {
        ProblemSpec::Synthetic { dim } | ProblemSpec::SyntheticWeighted { dim, .. } if dim == 0 => {
            return Err(err("dim", "dim must be at least 1".into()));
        }
        ProblemSpec::SyntheticWeighted { a1, a2, .. } if !(a1 > 0.0 && a2 > 0.0) => {
            return Err(err("a1", format!("a1 and a2 must be positive, got ({a1}, {a2})")));
        }
        ProblemSpec::Logistic3 { samples, features, .. } if samples == 0 || features == 0 => {
            return Err(err("samples", "samples and features must be at least 1".into()));
        }
        _ => {}
    }

    let mut algorithms: Vec<Algorithm> = Vec::new();
    for choice in &raw.algorithms {
        let add: &[Algorithm] = match choice {
            AlgorithmChoice::All => &Algorithm::ALL,
            AlgorithmChoice::ParetoMtl => &[Algorithm::ParetoMtl],
            AlgorithmChoice::Mgda => &[Algorithm::Mgda],
            AlgorithmChoice::Linear => &[Algorithm::Linear],
        };
        algorithms.extend(add);
    }
    algorithms.sort();
    algorithms.dedup();
    if algorithms.is_empty() {
        return Err(err("algorithms", "at least one algorithm is required".into()));
    }

    let mut solver_value = serde_json::to_value(raw.problem.solver_defaults()).expect("serializable");
    if let Value::Object(defaults) = &mut solver_value {
        for (k, v) in raw.solver {
            defaults.insert(k, v);
        }
    }
    let solver: SolverConfig =
        serde_json::from_value(solver_value).map_err(|e| err("solver", format!("solver: {e}")))?;
    if let Err(e) = solver.validate() {
        let key = e.to_string();
        let field = [
            "eta_decay",
            "eta_r",
            "eta",
            "epsilon",
            "max_iters",
            "decay_every",
            "criticality_tol",
            "init_range",
            "min_norm_tol",
            "min_norm_max_iter",
        ]
        .into_iter()
        .find(|f| key.contains(&format!("{f} ")))
        .unwrap_or("solver");
        return Err(err(field, format!("solver: {e}")));
    }

    let prefs = match (&raw.preferences.count, &raw.preferences.file) {
        (Some(_), Some(_)) => {
            return Err(err(
                "preferences",
                "give either preferences.count or preferences.file, not both".into(),
            ))
        }
        (None, None) => even_preference_vectors(10, m, raw.preferences.seed),
        (Some(count), None) => even_preference_vectors(*count, m, raw.preferences.seed),
        (None, Some(file)) => {
            let path = match base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            PreferenceVectors::from_csv_path(path)
        }
    }
    .map_err(|e| err("preferences", format!("preferences: {e}")))?;
    if prefs.objectives() != m {
        return Err(err(
            "preferences",
            format!(
                "preference vectors have {} components, problem has {m} objectives",
                prefs.objectives()
            ),
        ));
    }

    match &raw.linear_weights {
        LinearWeightSpec::Random { count } if *count == 0 => {
            return Err(err("linear_weights", "linear_weights.count must be at least 1".into()))
        }
        LinearWeightSpec::Grid { divisions } if *divisions == 0 => {
            return Err(err(
                "linear_weights",
                "linear_weights.divisions must be at least 1".into(),
            ))
        }
        LinearWeightSpec::Explicit { weights } => {
            for w in weights {
                let ok = w.len() == m && w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
                if !ok {
                    return Err(err(
                        "linear_weights",
                        format!("linear weight {w:?} must have {m} non-negative entries summing to 1"),
                    ));
                }
            }
            if weights.is_empty() {
                return Err(err("linear_weights", "explicit linear weights list is empty".into()));
            }
        }
        _ => {}
    }

    let seeds = match (raw.seeds, raw.repeats) {
        (Some(_), Some(_)) => return Err(err("seeds", "give either seeds or repeats, not both".into())),
        (Some(s), None) => s,
        (None, Some(r)) => (0..r as u64).collect(),
        (None, None) => vec![0],
    };
    if seeds.is_empty() {
        return Err(err("seeds", "at least one seed is required".into()));
    }

    let mgda_runs = raw.mgda_runs.unwrap_or(prefs.len());
    if mgda_runs == 0 {
        return Err(err("mgda_runs", "mgda_runs must be at least 1".into()));
    }
    if raw.workers == Some(0) {
        return Err(err("workers", "workers must be at least 1".into()));
    }
    if let Some(shift) = &raw.loss_shift {
        if shift.len() != m || shift.iter().any(|x| !x.is_finite()) {
            return Err(err("loss_shift", format!("loss_shift needs {m} finite entries")));
        }
    }
    let hypervolume_reference = match raw.hypervolume_reference {
        Some(r) if r.len() != 2 || m != 2 => {
            return Err(err(
                "hypervolume_reference",
                "hypervolume_reference needs two entries and a two-objective problem".into(),
            ))
        }
        Some(r) => Some(r),
        None => raw.problem.default_reference(raw.loss_shift.as_deref()),
    };

    let preferences = PreferenceSpec {
        count: raw.preferences.file.is_none().then_some(prefs.len()),
        ..raw.preferences
    };
    Ok(ResolvedConfig {
        problem: raw.problem,
        algorithms,
        preferences,
        preference_vectors: prefs.iter().map(<[f64]>::to_vec).collect(),
        linear_weights: raw.linear_weights,
        solver,
        seeds,
        mgda_runs,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        workers: raw.workers,
        loss_shift: raw.loss_shift,
        hypervolume_reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = parse_config(r#"{ "problem": { "kind": "synthetic", "dim": 20 } }"#, None).unwrap();
        assert_eq!(cfg.algorithms, Algorithm::ALL.to_vec());
        assert_eq!(cfg.preference_vectors.len(), 10);
        assert_eq!(cfg.solver, SolverConfig::synthetic());
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.mgda_runs, 10);
        assert_eq!(cfg.hypervolume_reference, Some(vec![1.1, 1.1]));
        assert_eq!(cfg.linear_weights, LinearWeightSpec::Random { count: 100 });
    }

    #[test]
    fn solver_overrides_merge_with_kind_defaults() {
        let cfg = parse_config(
            r#"{ "problem": { "kind": "logistic3" }, "solver": { "eta": 0.1 }, "algorithms": ["mgda"] }"#,
            None,
        )
        .unwrap();
        assert_eq!(cfg.solver.eta, 0.1);
        assert_eq!(cfg.solver.max_iters, 500);
        assert_eq!(cfg.preference_vectors[0].len(), 3);
        assert_eq!(cfg.hypervolume_reference, None);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let text = "{\n  \"problem\": { \"kind\": \"synthetic\", \"dim\": 2 },\n  \"colour\": 3\n}";
        let e = parse_config(text, None).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("colour"));

        let text = "{\n  \"problem\": { \"kind\": \"synthetic\", \"dim\": 2, \"size\": 1 }\n}";
        assert!(parse_config(text, None).is_err());

        let text =
            "{\n  \"problem\": { \"kind\": \"synthetic\", \"dim\": 2 },\n  \"solver\": {\n    \"etta\": 1\n  }\n}";
        let e = parse_config(text, None).unwrap_err();
        assert!(e.message.contains("etta"), "{e}");
    }

    #[test]
    fn negative_step_size_names_its_line() {
        let text =
            "{\n  \"problem\": { \"kind\": \"synthetic\", \"dim\": 2 },\n  \"solver\": {\n    \"eta\": -0.5\n  }\n}";
        let e = parse_config(text, None).unwrap_err();
        assert_eq!(e.line, Some(4), "{e}");
        assert!(e.to_string().starts_with("line 4: "));
    }

    #[test]
    fn conflicting_options() {
        let both = r#"{ "problem": { "kind": "synthetic", "dim": 2 }, "seeds": [1], "repeats": 2 }"#;
        assert!(parse_config(both, None).is_err());
        let repeats = r#"{ "problem": { "kind": "synthetic", "dim": 2 }, "repeats": 3 }"#;
        assert_eq!(parse_config(repeats, None).unwrap().seeds, vec![0, 1, 2]);
        let bad_w = r#"{ "problem": { "kind": "synthetic", "dim": 2 },
            "linear_weights": { "mode": "explicit", "weights": [[0.5, 0.4]] } }"#;
        assert!(parse_config(bad_w, None).is_err());
        let shift = r#"{ "problem": { "kind": "synthetic", "dim": 2 }, "loss_shift": [1.0] }"#;
        assert!(parse_config(shift, None).is_err());
    }

    #[test]
    fn preference_file_is_resolved_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("prefs.csv"), "1,0\n0.6,0.8\n0,1\n").unwrap();
        let text = r#"{ "problem": { "kind": "synthetic", "dim": 2 }, "preferences": { "file": "prefs.csv" } }"#;
        let cfg = parse_config(text, Some(dir.path())).unwrap();
        assert_eq!(cfg.preference_vectors[1], vec![0.6, 0.8]);
        assert_eq!(cfg.mgda_runs, 3);
    }
}
