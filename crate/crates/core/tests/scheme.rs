use kvflow_core::analysis::{error_norms, estimate_lambda1, fit_log_decay, EnergyTrace};
use kvflow_core::assembly::{assemble_convection, Discretization};
use kvflow_core::problems::ManufacturedProblem;
use kvflow_core::stepper::{initial_state, run, FlowState, InitialMode, ModelConfig, TimeGrid};
use proptest::prelude::*;

fn solve(problem: &ManufacturedProblem, n: usize, k: f64, t: f64) -> (Discretization, FlowState, EnergyTrace) {
    let disc = Discretization::structured(n).unwrap();
    let init = initial_state(|p| problem.initial_velocity(p), &disc, InitialMode::Projection).unwrap();
    let grid = TimeGrid::from_final_time(t, k).unwrap();
    let traj = run(&disc, ModelConfig::new(problem.nu, problem.kappa), grid, problem, init, &[]).unwrap();
    let trace = EnergyTrace { kappa: problem.kappa, samples: traj.energies() };
    (disc, traj.final_state, trace)
}

#[test]
fn example_one_errors_shrink_under_refinement() {
    let p = ManufacturedProblem::example1(1.0);
    let mut last = f64::INFINITY;
    for n in [2, 4, 8] {
        let (disc, state, _) = solve(&p, n, 1.0 / (n * n) as f64, 0.5);
        let e = error_norms(&state, &disc, &p, 0.5).unwrap();
        assert!(e.l2_velocity < last, "n = {n}: {} !< {last}", e.l2_velocity);
        assert!(e.h1_velocity >= e.h1_seminorm_velocity);
        last = e.l2_velocity;
    }
}

#[test]
fn discrete_solutions_stay_divergence_free_and_vanish_on_boundary() {
    let p = ManufacturedProblem::example1(1e-3);
    let (disc, state, _) = solve(&p, 4, 1.0 / 16.0, 0.5);
    assert!(state.divergence_residual(&disc) < 1e-10);
    assert_eq!(state.boundary_max(&disc), 0.0);
}

#[test]
fn unforced_examples_decay() {
    for p in [ManufacturedProblem::example2(), ManufacturedProblem::example3()] {
        let (_, _, trace) = solve(&p, 4, 1.0 / 32.0, 1.0);
        assert!(trace.is_nonincreasing(1e-12), "{:?}", p.example);
        let fit = fit_log_decay(&trace.samples, 0.2, 1.0).unwrap();
        assert!(fit.slope < 0.0 && fit.r_squared > 0.95, "{:?}: {fit:?}", p.example);
    }
}

#[test]
fn lambda1_decreases_toward_two_pi_squared() {
    let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    let estimates: Vec<f64> =
        [2, 4, 8].iter().map(|&n| estimate_lambda1(&Discretization::structured(n).unwrap()).unwrap()).collect();
    assert!(estimates.windows(2).all(|w| w[1] < w[0]), "{estimates:?}");
    assert!(estimates.iter().all(|&l| l > exact));
    assert!((estimates[2] - exact) / exact < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convection_annihilates_its_argument(seed in proptest::collection::vec(-1.0f64..1.0, 2 * 25 * 2)) {
        // n = 2 has 25 P2 nodes
        let disc = Discretization::structured(2).unwrap();
        let nv = disc.layout.n_velocity();
        let (w, v) = seed.split_at(nv);
        let n = assemble_convection(w, &disc.mesh, &disc.layout).unwrap();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        prop_assert!(n.quadratic_form(v).abs() <= 1e-13 * vv.max(1.0));
    }

    #[test]
    fn energy_never_grows_without_forcing(scale in 0.1f64..20.0, kappa in prop_oneof![Just(0.0), Just(1e-3), Just(1.0)]) {
        let p = ManufacturedProblem { kappa, ..ManufacturedProblem::example2().with_initial_scale(scale) };
        let (_, _, trace) = solve(&p, 2, 0.125, 0.5);
        prop_assert!(trace.is_nonincreasing(1e-12));
    }
}
