//! Optimization drivers: Pareto MTL, MGDA and fixed-weight linear
//! scalarization.
//!
//! Pareto MTL runs one subproblem per preference vector. Each subproblem
//! starts from a seeded random point, optionally walks into its sector by
//! descending the violated sector constraints, and then repeatedly steps along
//! the min-norm direction of the loss gradients together with the gradients
//! of the near-active constraints. MGDA is the same update with no
//! constraints at all.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{activated_set, ActivatedSet, ConstraintValues, PreferenceVectors, DEFAULT_EPSILON};
use crate::error::{invalid, Error, Result};
use crate::execution::Execution;
use crate::linalg::all_finite;
use crate::minnorm::{self, common_descent, common_descent_over, DescentStep, DualWeights, MinNormSettings};
use crate::problems::{Jacobian, MultiObjectiveProblem};

/// Step sizes, budgets and tolerances shared by all drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Main-loop step size η.
    pub eta: f64,
    /// Initialization-phase step size η_r.
    pub eta_r: f64,
    /// Main-loop step size is multiplied by this every `decay_every` steps.
    pub eta_decay: f64,
    pub decay_every: usize,
    /// Activation threshold ε.
    pub epsilon: f64,
    pub max_iters: usize,
    pub max_init_iters: usize,
    pub criticality_tol: f64,
    pub normalize_direction: bool,
    pub init_enabled: bool,
    pub base_seed: u64,
    /// Initial points are drawn from `uniform(−init_range, init_range)ⁿ`.
    pub init_range: f64,
    pub min_norm_tol: f64,
    pub min_norm_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            eta_r: 0.5,
            eta_decay: 0.95,
            decay_every: 10,
            epsilon: DEFAULT_EPSILON,
            max_iters: 200,
            max_init_iters: 50,
            criticality_tol: minnorm::DEFAULT_CRITICALITY_TOL,
            normalize_direction: false,
            init_enabled: true,
            base_seed: 0,
            init_range: 0.5,
            min_norm_tol: minnorm::DEFAULT_TOL,
            min_norm_max_iter: minnorm::DEFAULT_MAX_ITER,
        }
    }
}

impl SolverConfig {
    /// Defaults for the two-objective synthetic problem.
    pub fn synthetic() -> Self {
        Self::default()
    }

    /// Defaults for the three-task logistic problem: constant step, longer run.
    pub fn logistic() -> Self {
        Self {
            eta_decay: 1.0,
            max_iters: 500,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive and finite, got {v}"))
            }
        };
        positive("eta", self.eta)?;
        positive("eta_r", self.eta_r)?;
        positive("criticality_tol", self.criticality_tol)?;
        positive("init_range", self.init_range)?;
        positive("min_norm_tol", self.min_norm_tol)?;
        if !(self.eta_decay > 0.0 && self.eta_decay <= 1.0) {
            return invalid(format!("eta_decay must lie in (0, 1], got {}", self.eta_decay));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if self.decay_every == 0 {
            return invalid("decay_every must be at least 1");
        }
        if self.min_norm_max_iter == 0 {
            return invalid("min_norm_max_iter must be at least 1");
        }
        Ok(())
    }

    /// Main-loop step size at iteration `t` (zero-based).
    pub fn step_size(&self, t: usize) -> f64 {
        self.eta * self.eta_decay.powi((t / self.decay_every) as i32)
    }

    fn min_norm(&self) -> MinNormSettings {
        MinNormSettings {
            tol: self.min_norm_tol,
            max_iter: self.min_norm_max_iter,
            criticality_tol: self.criticality_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Init,
    Main,
}

/// State at the start of one iteration and the direction taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub phase: Phase,
    pub iteration: usize,
    pub losses: Vec<f64>,
    /// `G_j` for every preference vector; empty for unconstrained drivers.
    pub constraints: Vec<f64>,
    pub activated: usize,
    pub direction_norm: f64,
    /// Effective loss weights `w` with `d = −Jᵀw`.
    pub weights: Vec<f64>,
    /// Losses lie in the subproblem's sector (always true when unconstrained).
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TerminalStatus {
    /// `‖d‖` fell below the criticality tolerance.
    Critical,
    MaxIters,
    /// The initialization phase ended outside the sector. The main loop still
    /// ran.
    InitFailed,
    /// A step produced a non-finite or otherwise invalid value.
    Failed(String),
}

impl TerminalStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TerminalStatus::Critical => "converged-critical",
            TerminalStatus::MaxIters => "max-iters",
            TerminalStatus::InitFailed => "init-failed",
            TerminalStatus::Failed(_) => "failed",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, TerminalStatus::Failed(_))
    }
}

/// Full history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
    /// Outcome of the initialization phase; `None` when it did not run.
    pub init_feasible: Option<bool>,
    pub final_theta: Vec<f64>,
    /// Losses at `final_theta`; empty if they could not be evaluated.
    pub final_losses: Vec<f64>,
}

impl Trajectory {
    pub fn init_records(&self) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter().filter(|r| r.phase == Phase::Init)
    }

    pub fn main_records(&self) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter().filter(|r| r.phase == Phase::Main)
    }
}

/// Final result of one subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionEntry {
    pub k: usize,
    pub theta: Vec<f64>,
    pub losses: Vec<f64>,
    pub status: TerminalStatus,
    pub seed: u64,
}

/// One entry per subproblem, ordered by `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet {
    pub entries: Vec<SolutionEntry>,
}

impl SolutionSet {
    pub fn from_trajectories(trajectories: &[Trajectory]) -> Self {
        Self {
            entries: trajectories
                .iter()
                .enumerate()
                .map(|(k, t)| SolutionEntry {
                    k,
                    theta: t.final_theta.clone(),
                    losses: t.final_losses.clone(),
                    status: t.status.clone(),
                    seed: t.seed,
                })
                .collect(),
        }
    }
}

/// Outcome of one Pareto MTL or MGDA step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub theta: Vec<f64>,
    pub step: DescentStep,
    pub losses: Vec<f64>,
    /// `None` for unconstrained steps.
    pub constraints: Option<ConstraintValues>,
    pub activated: Option<ActivatedSet>,
}

/// Result of the initialization phase.
#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome {
    pub theta: Vec<f64>,
    pub feasible: bool,
    pub records: Vec<IterationRecord>,
}

fn evaluate_checked<P>(problem: &P, theta: &[f64]) -> Result<(Vec<f64>, Jacobian)>
where
    P: MultiObjectiveProblem + ?Sized,
{
    let (losses, jac) = problem.evaluate_with_jacobian(theta)?;
    if !all_finite(&losses) {
        return Err(Error::NumericDomain(format!("non-finite loss {losses:?}")));
    }
    if !jac.is_finite() {
        return Err(Error::NumericDomain("non-finite gradient".into()));
    }
    Ok((losses, jac))
}

fn advance(theta: &[f64], step: &DescentStep, step_size: f64, normalize: bool) -> Vec<f64> {
    if step.critical {
        return theta.to_vec();
    }
    let scale = if normalize {
        step_size / step.direction_norm
    } else {
        step_size
    };
    theta.iter().zip(&step.direction).map(|(t, d)| t + scale * d).collect()
}

fn check_prefs<P>(problem: &P, prefs: &PreferenceVectors, k: usize) -> Result<()>
where
    P: MultiObjectiveProblem + ?Sized,
{
    if prefs.objectives() != problem.objectives() {
        return invalid(format!(
            "preference vectors have {} components, problem has {} objectives",
            prefs.objectives(),
            problem.objectives()
        ));
    }
    if k >= prefs.len() {
        return invalid(format!(
            "subproblem {k} out of range for {} preference vectors",
            prefs.len()
        ));
    }
    Ok(())
}

/// Draws the seeded random starting point.
pub fn initial_point(dim: usize, seed: u64, range: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-range..range)).collect()
}

/// Walks `theta_r` toward sector `k` by descending the violated constraints
/// `{j ≠ k : G_j ≥ 0}` with step `η_r`, until none remain or the budget of
/// `max_init_iters` steps is spent.
pub fn find_initial<P>(
    problem: &P,
    prefs: &PreferenceVectors,
    k: usize,
    theta_r: &[f64],
    cfg: &SolverConfig,
) -> Result<InitOutcome>
where
    P: MultiObjectiveProblem + ?Sized,
{
    check_prefs(problem, prefs, k)?;
    cfg.validate()?;
    let settings = cfg.min_norm();
    let mut theta = theta_r.to_vec();
    let mut records = Vec::new();
    for iteration in 0..=cfg.max_init_iters {
        let (losses, jac) = evaluate_checked(problem, &theta)?;
        let g = prefs.constraint_values(k, &losses)?;
        let violated = activated_set(&g, 0.0)?;
        if violated.is_empty() {
            return Ok(InitOutcome {
                theta,
                feasible: true,
                records,
            });
        }
        if iteration == cfg.max_init_iters {
            break;
        }
        let coeffs = prefs.coefficient_rows(&violated)?;
        let step = common_descent_over(&jac, &coeffs, false, &settings)?;
        records.push(IterationRecord {
            phase: Phase::Init,
            iteration,
            losses,
            constraints: g.values,
            activated: violated.len(),
            direction_norm: step.direction_norm,
            weights: step.effective_weights.clone(),
            feasible: false,
        });
        if step.critical {
            break;
        }
        theta = advance(&theta, &step, cfg.eta_r, cfg.normalize_direction);
    }
    Ok(InitOutcome {
        theta,
        feasible: false,
        records,
    })
}

/// One constrained descent step for subproblem `k` with step size `cfg.eta`.
pub fn pareto_mtl_step<P>(
    problem: &P,
    prefs: &PreferenceVectors,
    k: usize,
    theta: &[f64],
    cfg: &SolverConfig,
) -> Result<StepOutcome>
where
    P: MultiObjectiveProblem + ?Sized,
{
    check_prefs(problem, prefs, k)?;
    pareto_mtl_step_sized(problem, prefs, k, theta, cfg, cfg.eta)
}

fn pareto_mtl_step_sized<P>(
    problem: &P,
    prefs: &PreferenceVectors,
    k: usize,
    theta: &[f64],
    cfg: &SolverConfig,
    step_size: f64,
) -> Result<StepOutcome>
where
    P: MultiObjectiveProblem + ?Sized,
{
    let (losses, jac) = evaluate_checked(problem, theta)?;
    let g = prefs.constraint_values(k, &losses)?;
    let active = activated_set(&g, cfg.epsilon)?;
    let coeffs = prefs.coefficient_rows(&active)?;
    let step = common_descent(&jac, &coeffs, &cfg.min_norm())?;
    Ok(StepOutcome {
        theta: advance(theta, &step, step_size, cfg.normalize_direction),
        step,
        losses,
        constraints: Some(g),
        activated: Some(active),
    })
}

/// One unconstrained common-descent step with step size `cfg.eta`.
pub fn mgda_step<P>(problem: &P, theta: &[f64], cfg: &SolverConfig) -> Result<StepOutcome>
where
    P: MultiObjectiveProblem + ?Sized,
{
    mgda_step_sized(problem, theta, cfg, cfg.eta)
}

fn mgda_step_sized<P>(problem: &P, theta: &[f64], cfg: &SolverConfig, step_size: f64) -> Result<StepOutcome>
where
    P: MultiObjectiveProblem + ?Sized,
{
    let (losses, jac) = evaluate_checked(problem, theta)?;
    let step = common_descent(&jac, &[], &cfg.min_norm())?;
    Ok(StepOutcome {
        theta: advance(theta, &step, step_size, cfg.normalize_direction),
        step,
        losses,
        constraints: None,
        activated: None,
    })
}

/// `w_i = λ_i + Σ_{j∈I} β_j (u_{ji} − u_{ki})`.
pub fn effective_weights(
    duals: &DualWeights,
    prefs: &PreferenceVectors,
    k: usize,
    activated: &ActivatedSet,
) -> Result<Vec<f64>> {
    if activated.owner != k {
        return invalid(format!(
            "activated set belongs to subproblem {}, not {k}",
            activated.owner
        ));
    }
    if duals.lambda.len() != prefs.objectives() {
        return invalid("loss multipliers do not match the objective count");
    }
    let coeffs = prefs.coefficient_rows(activated)?;
    minnorm::composite_weights(duals, &coeffs)
}

fn main_record(iteration: usize, out: &StepOutcome) -> IterationRecord {
    IterationRecord {
        phase: Phase::Main,
        iteration,
        losses: out.losses.clone(),
        constraints: out.constraints.as_ref().map(|g| g.values.clone()).unwrap_or_default(),
        activated: out.activated.as_ref().map_or(0, ActivatedSet::len),
        direction_norm: out.step.direction_norm,
        weights: out.step.effective_weights.clone(),
        feasible: out.constraints.as_ref().is_none_or(ConstraintValues::in_sector),
    }
}

/// Shared main loop: `step(theta, t)` returns the outcome of iteration `t`.
fn drive<P, F>(
    problem: &P,
    seed: u64,
    mut theta: Vec<f64>,
    mut records: Vec<IterationRecord>,
    init_feasible: Option<bool>,
    cfg: &SolverConfig,
    step: F,
) -> Trajectory
where
    P: MultiObjectiveProblem + ?Sized,
    F: Fn(&[f64], usize) -> Result<StepOutcome>,
{
    let mut status = TerminalStatus::MaxIters;
    for t in 0..cfg.max_iters {
        match step(&theta, t) {
            Ok(out) => {
                records.push(main_record(t, &out));
                theta = out.theta;
                if out.step.critical {
                    status = TerminalStatus::Critical;
                    break;
                }
            }
            Err(e) => {
                status = TerminalStatus::Failed(e.to_string());
                break;
            }
        }
    }
    if init_feasible == Some(false) && !status.is_failure() {
        status = TerminalStatus::InitFailed;
    }
    let final_losses = match problem.evaluate(&theta) {
        Ok(l) if all_finite(&l) => l,
        Ok(l) => {
            if !status.is_failure() {
                status = TerminalStatus::Failed(format!("non-finite final loss {l:?}"));
            }
            l
        }
        Err(e) => {
            if !status.is_failure() {
                status = TerminalStatus::Failed(e.to_string());
            }
            Vec::new()
        }
    };
    Trajectory {
        seed,
        records,
        status,
        init_feasible,
        final_theta: theta,
        final_losses,
    }
}

fn failed_trajectory(seed: u64, theta: Vec<f64>, records: Vec<IterationRecord>, e: Error) -> Trajectory {
    Trajectory {
        seed,
        records,
        status: TerminalStatus::Failed(e.to_string()),
        init_feasible: None,
        final_theta: theta,
        final_losses: Vec::new(),
    }
}

/// Runs subproblem `k` from the seed `cfg.base_seed + k`.
pub fn run_subproblem<P>(problem: &P, prefs: &PreferenceVectors, k: usize, cfg: &SolverConfig) -> Result<Trajectory>
where
    P: MultiObjectiveProblem + ?Sized,
{
    check_prefs(problem, prefs, k)?;
    cfg.validate()?;
    let seed = cfg.base_seed.wrapping_add(k as u64);
    let theta_r = initial_point(problem.dim(), seed, cfg.init_range);

    let (theta, records, init_feasible) = if cfg.init_enabled {
        match find_initial(problem, prefs, k, &theta_r, cfg) {
            Ok(init) => (init.theta, init.records, Some(init.feasible)),
            Err(e) => return Ok(failed_trajectory(seed, theta_r, Vec::new(), e)),
        }
    } else {
        (theta_r, Vec::new(), None)
    };

    Ok(drive(problem, seed, theta, records, init_feasible, cfg, |th, t| {
        pareto_mtl_step_sized(problem, prefs, k, th, cfg, cfg.step_size(t))
    }))
}

/// All subproblems, ordered by `k` whatever the execution mode.
pub fn run_all<P>(
    problem: &P,
    prefs: &PreferenceVectors,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<Vec<Trajectory>>
where
    P: MultiObjectiveProblem + ?Sized,
{
    check_prefs(problem, prefs, 0)?;
    cfg.validate()?;
    exec.map(prefs.len(), |k| run_subproblem(problem, prefs, k, cfg))
        .into_iter()
        .collect()
}

/// Unconstrained multiple-gradient descent from the seed `cfg.base_seed`.
pub fn mgda_run<P>(problem: &P, cfg: &SolverConfig) -> Result<Trajectory>
where
    P: MultiObjectiveProblem + ?Sized,
{
    cfg.validate()?;
    let seed = cfg.base_seed;
    let theta = initial_point(problem.dim(), seed, cfg.init_range);
    Ok(drive(problem, seed, theta, Vec::new(), None, cfg, |th, t| {
        mgda_step_sized(problem, th, cfg, cfg.step_size(t))
    }))
}

/// Gradient descent on `Σ w_i L_i` from the seed `cfg.base_seed`.
pub fn linear_run<P>(problem: &P, weights: &[f64], cfg: &SolverConfig) -> Result<Trajectory>
where
    P: MultiObjectiveProblem + ?Sized,
{
    cfg.validate()?;
    if weights.len() != problem.objectives() {
        return invalid(format!(
            "{} weights for {} objectives",
            weights.len(),
            problem.objectives()
        ));
    }
    if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return invalid(format!(
            "linear weights must be non-negative and sum to 1, got {weights:?}"
        ));
    }
    let seed = cfg.base_seed;
    let theta = initial_point(problem.dim(), seed, cfg.init_range);
    let lambda = weights.to_vec();
    Ok(drive(problem, seed, theta, Vec::new(), None, cfg, |th, t| {
        let (losses, jac) = evaluate_checked(problem, th)?;
        let duals = DualWeights {
            lambda: lambda.clone(),
            beta: Vec::new(),
            converged: true,
        };
        let step = minnorm::assemble_direction(&jac, &[], duals, cfg.criticality_tol)?;
        Ok(StepOutcome {
            theta: advance(th, &step, cfg.step_size(t), cfg.normalize_direction),
            step,
            losses,
            constraints: None,
            activated: None,
        })
    }))
}
