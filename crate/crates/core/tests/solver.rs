use fblab_core::diagnostics::{detect_contact, free_boundary_points};
use fblab_core::*;

fn laplacian() -> OperatorSpec64 {
    OperatorSpec::laplacian()
}

fn pucci() -> OperatorSpec64 {
    OperatorSpec::pucci_plus(1.0, 2.0).unwrap()
}

fn grid(inv_h: f64) -> GridDomain64 {
    build_grid(2, 1.0 / inv_h, 1.0).unwrap()
}

fn contact_cfg(amplitude: f64) -> SolveConfig64 {
    SolveConfig::new(BoundaryPreset::contact(amplitude, std::f64::consts::FRAC_PI_6).unwrap())
}

#[test]
fn zero_data_gives_zero_solution_in_one_sweep() {
    let g = grid(16.0);
    let mut cfg = SolveConfig::new(BoundaryPreset::Zero);
    cfg.inner = InnerSolver::Sweeps;
    let r = solve_positive(&laplacian(), &g, &cfg).unwrap();
    assert!(r.converged);
    assert_eq!(r.sweeps_used, 1);
    assert!(r.field.values().iter().filter(|v| !v.is_nan()).all(|&v| v == 0.0));
    let counts = r.phase.counts();
    assert_eq!(counts.lambda, g.interior_nodes().len());
    assert_eq!(counts.omega_plus + counts.omega_minus, 0);
}

#[test]
fn zero_data_with_active_sets() {
    let g = grid(32.0);
    let r = solve_positive(&pucci(), &g, &SolveConfig::new(BoundaryPreset::Zero)).unwrap();
    assert!(r.converged);
    assert_eq!(r.phase.counts().lambda, g.interior_nodes().len());
}

fn check_halfspace(spec: &OperatorSpec64, inner: InnerSolver, inv_h: f64) {
    let g = grid(inv_h);
    let mut cfg = SolveConfig::new(BoundaryPreset::halfspace(spec, 2).unwrap());
    cfg.inner = inner;
    let r = solve_positive(spec, &g, &cfg).unwrap();
    assert!(r.converged, "residual {}", r.residual);
    assert!(r.residual <= 1e-10);
    let oracle = halfspace_oracle(spec, 2).unwrap();
    let exact = ScalarField::from_fn(&g, |x| oracle.eval(x));
    assert!(r.field.sup_distance(&exact) <= 1e-8, "sup error {}", r.field.sup_distance(&exact));
    assert!(complementarity_residual(spec, &g, &r.field).unwrap() <= 1e-10);
}

#[test]
fn halfspace_is_reproduced_by_active_sets() {
    check_halfspace(&laplacian(), InnerSolver::ActiveSet, 64.0);
    check_halfspace(&pucci(), InnerSolver::ActiveSet, 64.0);
}

#[test]
fn halfspace_is_reproduced_by_sweeps() {
    check_halfspace(&laplacian(), InnerSolver::Sweeps, 16.0);
    check_halfspace(&pucci(), InnerSolver::Sweeps, 16.0);
}

#[test]
fn pucci_halfspace_value_is_a_quarter_square() {
    let g = grid(32.0);
    let spec = pucci();
    let r = solve_positive(&spec, &g, &SolveConfig::new(BoundaryPreset::halfspace(&spec, 2).unwrap())).unwrap();
    let at = g.index_of([16, 0, 0]).unwrap();
    assert!((r.field.get(at) - 0.0625).abs() < 1e-10);
}

#[test]
fn inner_solvers_agree() {
    let g = grid(16.0);
    let spec = pucci();
    let mut cfg = contact_cfg(1.0);
    let exact = solve_positive(&spec, &g, &cfg).unwrap();
    cfg.inner = InnerSolver::Sweeps;
    let relaxed = solve_positive(&spec, &g, &cfg).unwrap();
    assert!(exact.converged && relaxed.converged);
    assert!(exact.field.sup_distance(&relaxed.field) < 1e-9);
}

#[test]
fn coarse_seed_does_not_change_the_solution() {
    let g = grid(64.0);
    let spec = pucci();
    let mut cfg = contact_cfg(0.5);
    let seeded = solve_positive(&spec, &g, &cfg).unwrap();
    cfg.coarse_start = false;
    let cold = solve_positive(&spec, &g, &cfg).unwrap();
    assert!(seeded.field.sup_distance(&cold.field) < 1e-11);
}

#[test]
fn discrete_comparison_principle() {
    let g = grid(32.0);
    for spec in [laplacian(), pucci()] {
        let low = solve_positive(&spec, &g, &contact_cfg(0.4)).unwrap();
        let high = solve_positive(&spec, &g, &contact_cfg(1.2)).unwrap();
        for &idx in g.interior_nodes() {
            assert!(low.field.get(idx) <= high.field.get(idx) + 1e-12);
        }
    }
}

#[test]
fn phase_consistency_on_converged_results() {
    let g = grid(32.0);
    for spec in [laplacian(), pucci()] {
        let cfg = contact_cfg(1.0);
        let r = solve_positive(&spec, &g, &cfg).unwrap();
        assert!(r.converged);
        let op = DiscreteOperator::new(&spec, &g).unwrap();
        let tol = 10.0 * cfg.tol_residual;
        for &idx in g.interior_nodes() {
            match r.phase.get(idx) {
                Phase::OmegaPlus => {
                    let f = op.apply(r.field.values(), idx);
                    assert!((1.0 - tol..=1.0 + tol).contains(&f), "F_h = {f} on the positive phase");
                }
                Phase::Lambda => assert!(r.field.get(idx) <= cfg.eps_u_for(g.h())),
                p => panic!("unexpected label {p:?}"),
            }
        }
    }
}

#[test]
fn solves_are_bit_identical() {
    let g = grid(32.0);
    let spec = pucci();
    let a = solve_positive(&spec, &g, &contact_cfg(0.7)).unwrap();
    let b = solve_positive(&spec, &g, &contact_cfg(0.7)).unwrap();
    let bits = |r: &SolveResult64| r.field.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.phase, b.phase);
    assert_eq!((a.sweeps_used, a.policy_iters), (b.sweeps_used, b.policy_iters));
}

#[test]
fn single_policy_residual_history_is_nonincreasing() {
    let g = grid(32.0);
    let mut cfg = contact_cfg(1.0);
    cfg.inner = InnerSolver::Sweeps;
    let r = solve_positive(&laplacian(), &g, &cfg).unwrap();
    assert!(r.converged);
    assert!(r.residual_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn policy_iteration_reaches_tolerance_for_pucci() {
    let g = grid(64.0);
    let r = solve_positive(&pucci(), &g, &contact_cfg(1.0)).unwrap();
    assert!(r.converged);
    assert!(r.policy_iters >= 2);
    assert!(r.residual_history.last().unwrap() <= &1e-10);
}

#[test]
fn budget_exhaustion_is_reported_as_divergence() {
    let g = grid(32.0);
    let mut cfg = contact_cfg(1.0);
    cfg.inner = InnerSolver::Sweeps;
    cfg.max_sweeps = 3;
    let r = solve_positive(&laplacian(), &g, &cfg).unwrap();
    assert!(!r.converged);
    assert!(r.residual > cfg.tol_residual);
}

#[test]
fn invalid_configurations_are_rejected() {
    let g = grid(16.0);
    let mut cfg = contact_cfg(1.0);
    cfg.damping = 0.0;
    assert!(matches!(solve_positive(&laplacian(), &g, &cfg), Err(Error::InvalidArgument(_))));
    cfg.damping = 0.5;
    cfg.tol_residual = -1.0;
    assert!(solve_positive(&laplacian(), &g, &cfg).is_err());
    assert!(BoundaryPreset::contact(-1.0, 0.5).is_err());
    assert!(BoundaryPreset::contact(1.0, 2.0).is_err());
}

#[test]
fn calibrated_contact_touches_pi_at_the_origin() {
    let g = grid(32.0);
    let spec = laplacian();
    let w = std::f64::consts::FRAC_PI_6;
    let cal = calibrate_contact_amplitude(&spec, &g, &SolveConfig::new(BoundaryPreset::Zero), w).unwrap();
    assert!((cal.probe_value - cal.target).abs() <= 1e-5 * cal.target);
    let r = solve_positive(&spec, &g, &contact_cfg(cal.amplitude)).unwrap();
    // On coarse grids the coincidence set reaches the first layer off Π only some way out.
    let report = detect_contact(&g, &r.field, &r.phase, &spec, 0.8).unwrap();
    assert!(report.is_contact, "{report:?}");
    // Smaller amplitudes bury the origin in the coincidence set.
    let below = solve_positive(&spec, &g, &contact_cfg(0.5 * cal.amplitude)).unwrap();
    let rep = detect_contact(&g, &below.field, &below.phase, &spec, 0.8).unwrap();
    assert!(!rep.is_contact, "{rep:?} {}", cal.amplitude);
}

#[test]
fn two_phase_with_zero_data() {
    let g = grid(32.0);
    let r = solve_two_phase(&laplacian(), &g, &SolveConfig::new(BoundaryPreset::Zero)).unwrap();
    assert!(r.converged);
    assert!(r.field.values().iter().filter(|v| !v.is_nan()).all(|&v| v == 0.0));
    assert_eq!(r.phase.counts().lambda, g.interior_nodes().len());
}

#[test]
fn two_phase_matches_positive_solver_up_to_a_band() {
    let g = grid(32.0);
    for spec in [laplacian(), pucci()] {
        let cfg = contact_cfg(0.9);
        let pos = solve_positive(&spec, &g, &cfg).unwrap();
        let two = solve_two_phase(&spec, &g, &cfg).unwrap();
        assert!(two.converged);
        let fb = free_boundary_points(&g, &pos.phase);
        for idx in pos.phase.diff(&two.phase) {
            let x = g.coords(idx);
            let near = fb.iter().any(|p| (p[0] - x[0]).abs() <= g.h() && (p[1] - x[1]).abs() <= g.h());
            assert!(near, "label differs away from the free boundary at {x:?}");
        }
    }
}

#[test]
fn one_dimensional_section_locates_the_free_boundary() {
    let h = 1.0 / 64.0;
    let g = GridDomain::new(2, h, Shape::HalfBox { depth: 1.0, half_width: 0.25 }, FrameSet::Axis).unwrap();
    let cfg = SolveConfig::new(BoundaryPreset::Section1D { b: 0.125 });
    let r = solve_positive(&laplacian(), &g, &cfg).unwrap();
    assert!(r.converged);
    let oracle = oracle_1d(0.125).unwrap();
    let exact = ScalarField::from_fn(&g, |x| oracle.eval(x[0]));
    assert!(r.field.sup_distance(&exact) < 1e-10);
}

#[test]
fn single_precision_solve() {
    let g: GridDomain32 = build_grid(2, 1.0 / 16.0, 1.0).unwrap();
    let spec = OperatorSpec32::laplacian();
    let mut cfg = SolveConfig::new(BoundaryPreset::halfspace(&spec, 2).unwrap());
    cfg.tol_residual = 1e-3;
    let r = solve_positive(&spec, &g, &cfg).unwrap();
    assert!(r.converged);
    let at = g.index_of([8, 0, 0]).unwrap();
    assert!((r.field.get(at) - 0.125).abs() < 1e-5);
}
