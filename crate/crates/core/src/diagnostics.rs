//! Self-checks run by `paretomtl check`: finite-difference Jacobian checks
//! and the descent inequalities of the common-descent step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{activated_set, even_preference_vectors, DEFAULT_EPSILON};
use crate::error::Result;
use crate::linalg::dot;
use crate::minnorm::{common_descent, DescentStep, MinNormSettings};
use crate::problems::{finite_diff_check, Jacobian, Logistic3Problem, MultiObjectiveProblem, SyntheticProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Largest excess of `a·d` over `−½‖d‖²` across the loss gradients and the
/// constraint gradients `cᵀJ`, measured against the allowance
/// `1e-9·(1 + ‖d‖)`. Non-positive means every inequality holds.
pub fn descent_inequality_excess(jac: &Jacobian, coeff_rows: &[Vec<f64>], step: &DescentStep) -> Result<f64> {
    let directional = jac.mul(&step.direction)?;
    let bound = -0.5 * step.direction_norm * step.direction_norm;
    let slack = 1e-9 * (1.0 + step.direction_norm);
    let constraint_slopes = coeff_rows.iter().map(|c| dot(c, &directional));
    Ok(directional
        .iter()
        .copied()
        .chain(constraint_slopes)
        .map(|s| s - bound - slack)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, range: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-range..range)).collect()
}

/// Analytic Jacobians against central differences at `points` random points
/// per problem.
pub fn finite_difference_suite(points: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let synthetic = SyntheticProblem::new(20)?;
    let logistic = Logistic3Problem::generate(seed);
    let problems: [(&str, &dyn MultiObjectiveProblem, f64); 2] =
        [("synthetic d=20", &synthetic, 1.5), ("logistic3", &logistic, 1.0)];
    let mut out = Vec::new();
    for (name, problem, range) in problems {
        let mut worst = 0.0_f64;
        for _ in 0..points {
            let theta = random_point(&mut rng, problem.dim(), range);
            worst = worst.max(finite_diff_check(problem, &theta, 1e-6)?);
        }
        out.push(CheckResult {
            name: format!("jacobian vs central differences ({name})"),
            passed: worst < 1e-5,
            detail: format!("max relative error {worst:.3e} over {points} points"),
        });
    }
    Ok(out)
}

/// Unconstrained (`constrained = false`) or sector-constrained descent
/// inequalities at random synthetic points drawn like initial points.
pub fn descent_inequality_suite(points: usize, constrained: bool, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = SyntheticProblem::new(20)?;
    let prefs = even_preference_vectors(10, 2, 0)?;
    let settings = MinNormSettings::default();
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for _ in 0..points {
        let theta = random_point(&mut rng, problem.dim(), 0.5);
        let (losses, jac) = problem.evaluate_with_jacobian(&theta)?;
        let coeffs = if constrained {
            let k = rng.random_range(0..prefs.len());
            let g = prefs.constraint_values(k, &losses)?;
            prefs.coefficient_rows(&activated_set(&g, DEFAULT_EPSILON)?)?
        } else {
            Vec::new()
        };
        let step = common_descent(&jac, &coeffs, &settings)?;
        if step.direction_norm < 1e-6 {
            continue;
        }
        checked += 1;
        worst = worst.max(descent_inequality_excess(&jac, &coeffs, &step)?);
    }
    let label = if constrained {
        "constrained descent inequalities"
    } else {
        "unconstrained descent inequalities"
    };
    Ok(CheckResult {
        name: label.into(),
        passed: worst <= 0.0,
        detail: format!("{checked}/{points} non-critical points, worst excess {worst:.3e}"),
    })
}

/// Everything `paretomtl check` runs.
pub fn run_all_checks() -> Result<Vec<CheckResult>> {
    let mut out = finite_difference_suite(100, 1)?;
    out.push(descent_inequality_suite(100, false, 2)?);
    out.push(descent_inequality_suite(100, true, 3)?);
    Ok(out)
}
