//! The dual-assembled descent direction against a primal KKT solve.

mod common;

use common::{diff_norm, norm, primal_direction};
use paretomtl::decomposition::{even_preference_vectors, PreferenceVectors};
use paretomtl::minnorm::{common_descent, MinNormSettings};
use paretomtl::problems::Jacobian;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Instance {
    jac: Jacobian,
    coeffs: Vec<Vec<f64>>,
}

fn instance(rng: &mut ChaCha8Rng, prefs: &PreferenceVectors, one_sided: bool) -> Instance {
    let n = rng.random_range(1..=5);
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let jac = Jacobian::from_rows(&rows).unwrap();
    let k = rng.random_range(0..prefs.len());
    let mut others: Vec<usize> = (0..prefs.len()).filter(|&j| j != k).collect();
    if one_sided {
        let above = rng.random_bool(0.5);
        others.retain(|&j| (j > k) == above);
    }
    others.shuffle(rng);
    let count = rng.random_range(0..=3.min(others.len()));
    let coeffs = others[..count]
        .iter()
        .map(|&j| prefs.constraint_gradient_coeffs(k, j).unwrap())
        .collect();
    Instance { jac, coeffs }
}

fn gradient_rows(inst: &Instance) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = inst.jac.rows().map(<[f64]>::to_vec).collect();
    for c in &inst.coeffs {
        rows.push(inst.jac.transpose_mul(c).unwrap());
    }
    rows
}

/// Worst relative error over `count` instances with a nonzero optimum, and
/// the largest dual norm where the optimum is zero.
fn sweep(count: usize, one_sided: bool, seed: u64) -> (f64, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefs = even_preference_vectors(10, 2, 0).unwrap();
    let settings = MinNormSettings::default();
    let (mut worst_rel, mut worst_zero, mut zeros) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..count {
        let inst = instance(&mut rng, &prefs, one_sided);
        let primal = primal_direction(&gradient_rows(&inst));
        let dual = common_descent(&inst.jac, &inst.coeffs, &settings).unwrap().direction;
        if norm(&primal) < 1e-10 {
            zeros += 1;
            worst_zero = worst_zero.max(norm(&dual));
        } else {
            worst_rel = worst_rel.max(diff_norm(&primal, &dual) / norm(&primal));
        }
    }
    (worst_rel, worst_zero, zeros)
}

#[test]
fn dual_matches_primal_on_one_sided_activation() {
    let (rel, zero, zeros) = sweep(500, true, 11);
    eprintln!("one-sided: worst relative {rel:.3e}, zero optima {zeros}, worst dual norm there {zero:.3e}");
    assert!(rel <= 1e-4, "{rel}");
    assert!(zero <= 1e-6, "{zero}");
}

#[test]
fn dual_matches_primal_with_constraints_on_both_sides() {
    let (rel, zero, zeros) = sweep(500, false, 12);
    eprintln!("two-sided: worst relative {rel:.3e}, zero optima {zeros}, worst dual norm there {zero:.3e}");
    assert!(rel <= 1e-4, "{rel}");
    assert!(zero <= 1e-6, "{zero}");
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]

    /// Gram rows may be nearly collinear or rank deficient; the objective
    /// trace still never rises beyond rounding and the weights stay on the
    /// simplex.
    #[test]
    fn solver_trace_and_simplex(
        seed in 0u64..1_000_000,
        q in 3usize..9,
        n in 1usize..5,
    ) {
        use paretomtl::minnorm::{build_gram, solve_simplex_min_norm_traced};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..q)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let jac = Jacobian::from_rows(&rows).unwrap();
        let g = build_gram(&jac, &[]).unwrap();
        let (sol, trace) = solve_simplex_min_norm_traced(&g, 1e-10, 250).unwrap();
        let scale = trace[0].max(1e-300);
        for w in trace.windows(2) {
            proptest::prop_assert!(w[1] <= w[0] + 1e-12 * scale, "{:?}", trace);
        }
        proptest::prop_assert!(sol.weights.iter().all(|&x| x >= 0.0));
        proptest::prop_assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        proptest::prop_assert!(sol.converged);

        let primal = primal_direction(&rows);
        let dual = jac.transpose_mul(&sol.weights).unwrap();
        let dual: Vec<f64> = dual.iter().map(|x| -x).collect();
        let err = diff_norm(&primal, &dual);
        proptest::prop_assert!(err <= 1e-6 * norm(&primal).max(1e-3), "{} vs {}", err, norm(&primal));
    }

    /// Every loss gradient and activated constraint gradient meets
    /// `a·d ≤ −‖d‖² + 1e-9·‖d‖`.
    #[test]
    fn descent_inequalities_hold(seed in 0u64..1_000_000, one_sided in proptest::bool::ANY) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prefs = even_preference_vectors(10, 2, 0).unwrap();
        let inst = instance(&mut rng, &prefs, one_sided);
        let step = common_descent(&inst.jac, &inst.coeffs, &MinNormSettings::default()).unwrap();
        let sq = step.direction_norm * step.direction_norm;
        for a in gradient_rows(&inst) {
            let slope: f64 = a.iter().zip(&step.direction).map(|(x, y)| x * y).sum();
            proptest::prop_assert!(slope <= -sq + 1e-9 * step.direction_norm.max(1e-300) + 1e-15);
        }
        let total = step.duals.total();
        proptest::prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
