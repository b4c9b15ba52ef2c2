//! Run-level properties of the drivers on the synthetic problem.

use paretomtl::decomposition::{activated_set, even_preference_vectors, PreferenceVectors};
use paretomtl::diagnostics::descent_inequality_excess;
use paretomtl::execution::Execution;
use paretomtl::problems::{Jacobian, MultiObjectiveProblem, SyntheticProblem};
use paretomtl::solvers::{
    effective_weights, find_initial, initial_point, linear_run, mgda_run, mgda_step, pareto_mtl_step, run_all,
    run_subproblem, Phase, SolutionSet, SolverConfig, TerminalStatus,
};

fn setup() -> (SyntheticProblem, PreferenceVectors, SolverConfig) {
    (
        SyntheticProblem::new(20).unwrap(),
        even_preference_vectors(10, 2, 0).unwrap(),
        SolverConfig::synthetic(),
    )
}

#[test]
fn runs_are_bit_identical() {
    let (p, prefs, cfg) = setup();
    for k in [0, 4, 9] {
        assert_eq!(
            run_subproblem(&p, &prefs, k, &cfg).unwrap(),
            run_subproblem(&p, &prefs, k, &cfg).unwrap()
        );
    }
    assert_eq!(mgda_run(&p, &cfg).unwrap(), mgda_run(&p, &cfg).unwrap());
}

#[test]
fn disabling_init_removes_init_records() {
    let (p, prefs, cfg) = setup();
    let with = run_subproblem(&p, &prefs, 0, &cfg).unwrap();
    assert!(with.init_records().count() > 0);
    let cfg = SolverConfig {
        init_enabled: false,
        ..cfg
    };
    let without = run_subproblem(&p, &prefs, 0, &cfg).unwrap();
    assert_eq!(without.init_records().count(), 0);
    assert_eq!(without.init_feasible, None);
}

#[test]
fn middle_sectors_end_inside_their_sector() {
    let (p, prefs, cfg) = setup();
    for k in [4, 5] {
        let t = run_subproblem(&p, &prefs, k, &cfg).unwrap();
        assert!(!t.status.is_failure());
        let g = prefs.constraint_values(k, &t.final_losses).unwrap();
        let worst = g.max_other().unwrap();
        assert!(worst <= cfg.epsilon, "k={k}: max G_j = {worst}");
    }
}

#[test]
fn init_phase_never_adds_violations_with_small_step() {
    let (p, prefs, cfg) = setup();
    let cfg = SolverConfig {
        eta_r: 1e-3,
        max_init_iters: 200,
        ..cfg
    };
    for k in [0, 9, 2] {
        let theta_r = initial_point(p.dim(), k as u64, cfg.init_range);
        let init = find_initial(&p, &prefs, k, &theta_r, &cfg).unwrap();
        let counts: Vec<usize> = init.records.iter().map(|r| r.activated).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "k={k}: {counts:?}");

        // The summed violation over the initially violated set goes down.
        let before = prefs.constraint_values(k, &p.evaluate(&theta_r).unwrap()).unwrap();
        let after = prefs.constraint_values(k, &p.evaluate(&init.theta).unwrap()).unwrap();
        let set: Vec<usize> = before.violated().collect();
        if !set.is_empty() {
            let sum = |g: &[f64]| set.iter().map(|&j| g[j]).sum::<f64>();
            assert!(sum(&after.values) < sum(&before.values), "k={k}");
            assert!(after.violated_count() <= before.violated_count());
        }
    }
}

#[test]
fn zero_init_budget_reports_init_failed() {
    let (p, prefs, cfg) = setup();
    let cfg = SolverConfig {
        max_init_iters: 0,
        ..cfg
    };
    let theta_r = initial_point(p.dim(), 0, cfg.init_range);
    let init = find_initial(&p, &prefs, 0, &theta_r, &cfg).unwrap();
    assert!(!init.feasible);
    assert_eq!(init.theta, theta_r);
    let t = run_subproblem(&p, &prefs, 0, &cfg).unwrap();
    assert_eq!(t.status, TerminalStatus::InitFailed);
}

#[test]
fn small_step_from_feasible_point_decreases_active_constraints() {
    let (p, prefs, cfg) = setup();
    // A feasible point somewhere inside sector 6, short of convergence.
    let short = SolverConfig {
        max_iters: 5,
        ..cfg.clone()
    };
    let k = 6;
    let theta = run_subproblem(&p, &prefs, k, &short).unwrap().final_theta;
    let losses = p.evaluate(&theta).unwrap();
    assert!(prefs.constraint_values(k, &losses).unwrap().in_sector());

    let small = SolverConfig { eta: 1e-3, ..cfg };
    let out = pareto_mtl_step(&p, &prefs, k, &theta, &small).unwrap();
    let g0 = out.constraints.as_ref().unwrap();
    let next = p.evaluate(&out.theta).unwrap();
    let g1 = prefs.constraint_values(k, &next).unwrap();
    for &j in &out.activated.as_ref().unwrap().indices {
        assert!(g1.values[j] < g0.values[j], "G_{j} rose");
    }
    let lambda = &out.step.duals.lambda;
    let combo = |l: &[f64]| l.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>();
    assert!(combo(&next) < combo(&losses));
}

#[test]
fn empty_activation_step_equals_mgda_bitwise() {
    let (p, prefs, cfg) = setup();
    let c = p.centre_offset();
    let mut checked = 0;
    for t in [0.05, 0.1, 0.2, -0.1, -0.3, 0.4] {
        let theta: Vec<f64> = (0..20).map(|_| t * c).collect();
        let losses = p.evaluate(&theta).unwrap();
        let k = prefs.sector_index(&losses).unwrap();
        let g = prefs.constraint_values(k, &losses).unwrap();
        if !activated_set(&g, cfg.epsilon).unwrap().is_empty() {
            continue;
        }
        let a = pareto_mtl_step(&p, &prefs, k, &theta, &cfg).unwrap();
        let b = mgda_step(&p, &theta, &cfg).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.step.direction, b.step.direction);
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn single_preference_vector_reduces_to_mgda() {
    let p = SyntheticProblem::new(20).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let prefs = PreferenceVectors::new(vec![vec![h, h]]).unwrap();
    let cfg = SolverConfig {
        base_seed: 42,
        ..SolverConfig::synthetic()
    };
    let a = run_subproblem(&p, &prefs, 0, &cfg).unwrap();
    let b = mgda_run(&p, &cfg).unwrap();
    assert_eq!(a.init_records().count(), 0);
    assert_eq!(a.final_theta, b.final_theta);
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.losses, y.losses);
        assert_eq!(x.weights, y.weights);
    }

    let all = run_all(&p, &prefs, &cfg, Execution::default()).unwrap();
    assert_eq!(all, vec![a]);
}

#[test]
fn execution_mode_does_not_change_results() {
    let (p, prefs, cfg) = setup();
    let serial = run_all(&p, &prefs, &cfg, Execution::Sequential).unwrap();
    let default = run_all(&p, &prefs, &cfg, Execution::default()).unwrap();
    assert_eq!(serial, default);
    let set = SolutionSet::from_trajectories(&default);
    assert_eq!(set.entries.len(), 10);
    assert!(set
        .entries
        .iter()
        .enumerate()
        .all(|(i, e)| e.k == i && e.seed == i as u64));
}

#[test]
fn trajectories_are_complete_and_bounded() {
    let (p, prefs, cfg) = setup();
    for t in run_all(&p, &prefs, &cfg, Execution::default()).unwrap() {
        assert!(t.records.len() <= cfg.max_iters + cfg.max_init_iters);
        for r in &t.records {
            assert!(r.losses.iter().all(|l| l.is_finite()));
            assert_eq!(r.weights.len(), 2);
        }
        let main: Vec<usize> = t.main_records().map(|r| r.iteration).collect();
        assert_eq!(main, (0..main.len()).collect::<Vec<_>>());
        assert!(t
            .records
            .iter()
            .skip_while(|r| r.phase == Phase::Init)
            .all(|r| r.phase == Phase::Main));
    }
}

#[test]
fn every_step_is_critical_or_a_descent_step() {
    let (p, prefs, cfg) = setup();
    for k in [0, 3, 7] {
        let theta_r = initial_point(p.dim(), k as u64, cfg.init_range);
        let mut theta = find_initial(&p, &prefs, k, &theta_r, &cfg).unwrap().theta;
        for _ in 0..60 {
            let out = pareto_mtl_step(&p, &prefs, k, &theta, &cfg).unwrap();
            if !out.step.critical {
                let jac = p.jacobian(&theta).unwrap();
                let coeffs = prefs.coefficient_rows(out.activated.as_ref().unwrap()).unwrap();
                assert!(descent_inequality_excess(&jac, &coeffs, &out.step).unwrap() <= 0.0);
            }
            theta = out.theta;
        }
    }
}

#[test]
fn effective_weights_reproduce_the_direction() {
    let (p, prefs, cfg) = setup();
    for k in 0..10 {
        let theta = initial_point(p.dim(), 100 + k as u64, 1.0);
        let out = pareto_mtl_step(&p, &prefs, k, &theta, &cfg).unwrap();
        let active = out.activated.unwrap();
        let w = effective_weights(&out.step.duals, &prefs, k, &active).unwrap();
        assert_eq!(w, out.step.effective_weights);
        let jac = p.jacobian(&theta).unwrap();
        let d: Vec<f64> = jac.transpose_mul(&w).unwrap().iter().map(|x| -x).collect();
        assert_eq!(d, out.step.direction);
    }
}

/// `L(θ) = ½‖θ − 1‖²`, a single objective.
struct Bowl;

impl MultiObjectiveProblem for Bowl {
    fn dim(&self) -> usize {
        3
    }
    fn objectives(&self) -> usize {
        1
    }
    fn evaluate(&self, theta: &[f64]) -> paretomtl::Result<Vec<f64>> {
        Ok(vec![0.5 * theta.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>()])
    }
    fn jacobian(&self, theta: &[f64]) -> paretomtl::Result<Jacobian> {
        Jacobian::from_rows(&[theta.iter().map(|x| x - 1.0).collect()])
    }
}

#[test]
fn single_objective_mgda_is_gradient_descent() {
    let cfg = SolverConfig::synthetic();
    let theta = vec![0.0, 2.0, -1.0];
    let out = mgda_step(&Bowl, &theta, &cfg).unwrap();
    assert_eq!(out.step.duals.lambda, vec![1.0]);
    assert_eq!(out.step.direction, vec![1.0, -1.0, 2.0]);
    assert_eq!(out.theta, vec![0.5, 1.5, 0.0]);
}

#[test]
fn linear_runs_reach_endpoints() {
    let (p, _, cfg) = setup();
    let far = 1.0 - (-4.0f64).exp();
    let near_endpoint = |l: &[f64]| {
        let a = l[0].abs().max((l[1] - far).abs());
        let b = (l[0] - far).abs().max(l[1].abs());
        a.min(b) <= 0.05
    };
    let balanced = linear_run(&p, &[0.5, 0.5], &cfg).unwrap();
    assert!(near_endpoint(&balanced.final_losses), "{:?}", balanced.final_losses);
    let first = linear_run(&p, &[1.0, 0.0], &cfg).unwrap();
    assert!(first.final_losses[0] < 0.01 && (first.final_losses[1] - far).abs() < 0.05);
    assert!(linear_run(&p, &[0.7, 0.7], &cfg).is_err());
}

#[test]
fn mgda_lands_in_the_middle() {
    let (p, prefs, cfg) = setup();
    for seed in 0..10 {
        let t = mgda_run(
            &p,
            &SolverConfig {
                base_seed: seed,
                ..cfg.clone()
            },
        )
        .unwrap();
        let k = prefs.sector_index(&t.final_losses).unwrap();
        assert!(
            (3..=6).contains(&k),
            "seed {seed}: sector {k}, losses {:?}",
            t.final_losses
        );
    }
}
