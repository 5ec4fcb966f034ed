//! Newton iteration behavior on the built-in problems: trivial
//! convergence cases, the frozen iteration-count regression, the residual
//! certificate and bitwise reproducibility.

mod common;

use cutfem::assembly::assemble_f1_residual;
use cutfem::config::RunConfig;
use cutfem::driver::{discretize, run_single, solve_discretization};

fn quiet(problem: &str) -> RunConfig {
    RunConfig {
        problem: problem.to_string(),
        p: if problem == "disc-p2" { 2.0 } else { 4.0 },
        output_dir: None,
        ..RunConfig::default()
    }
}

#[test]
fn zero_force_converges_immediately() {
    let run = run_single(&quiet("zero"), 0).unwrap();
    assert!(run.report.converged);
    assert_eq!(run.report.iterations, 0);
    assert_eq!(run.report.residual_norms.len(), 1);
    assert!(run.solution.coefficients.iter().all(|&c| c == 0.0));
}

#[test]
fn linear_problem_takes_exactly_one_step() {
    let run = run_single(&quiet("disc-p2"), 0).unwrap();
    assert!(run.report.converged);
    assert_eq!(run.report.iterations, 1);
}

#[test]
fn disc_problem_newton_regression() {
    let run = run_single(&quiet("disc-p4"), 0).unwrap();
    assert!(run.report.converged);
    assert!(run.report.iterations <= 8);
    // Frozen from the first verified run of this configuration.
    assert_eq!(run.report.iterations, 4);

    // Residual norms do not increase after the first step.
    let norms = &run.report.residual_norms;
    for k in 2..norms.len() {
        assert!(norms[k] <= norms[k - 1] * (1.0 + 1e-12));
    }
    // Quadratic tail: the final reduction is at least a factor 1e3.
    let last = norms[norms.len() - 1];
    let previous = norms[norms.len() - 2];
    assert!(last <= 1e-3 * previous, "tail reduction {last:e} / {previous:e}");
}

#[test]
fn residual_certificate_at_the_solution() {
    let config = quiet("disc-p4");
    let problem = config.problem_with_offset([0.0, 0.0]).unwrap();
    let disc = discretize(&config, 0, &problem).unwrap();
    let (u, report) = solve_discretization(&config, &disc).unwrap();
    assert!(report.converged);

    // Re-assemble the full nonlinear residual from scratch.
    let linear = disc.a.add(&disc.j_gp);
    let mut residual = linear.matvec(&u.coefficients);
    let f1 = assemble_f1_residual(&disc.space, &disc.dom, &disc.quad, &u, disc.params.p);
    for i in 0..residual.len() {
        residual[i] += f1[i] - disc.load[i];
    }
    let norm = common::euclidean_norm(&residual);
    assert!(norm <= 2.0 * config.newton_tol, "certificate {norm:e}");
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let first = run_single(&quiet("disc-p4"), 1).unwrap();
    let second = run_single(&quiet("disc-p4"), 1).unwrap();
    assert_eq!(first.solution.coefficients, second.solution.coefficients);
    assert_eq!(first.report.residual_norms, second.report.residual_norms);
}

#[test]
fn error_record_structure_and_quadrature_stability() {
    use cutfem::postprocess::error_norms;
    let config = quiet("disc-p4");
    let problem = config.problem_with_offset([0.0, 0.0]).unwrap();
    let disc = discretize(&config, 1, &problem).unwrap();
    let (u, _) = solve_discretization(&config, &disc).unwrap();
    let measure = |degree: u32, with_j: bool| {
        error_norms(
            &problem.u_exact,
            &problem.grad_u_exact,
            &u,
            &disc.space,
            &disc.dom,
            &disc.params,
            degree,
            with_j,
        )
        .unwrap()
    };
    let record = measure(4, true);
    // The boundary norm splits exactly into its two parts.
    let star_sq = record.err_star * record.err_star;
    let parts = record.err_h1_semi * record.err_h1_semi
        + record.boundary_term * record.boundary_term;
    assert!((star_sq - parts).abs() <= 1e-12 * star_sq);
    assert!(record.err_star >= record.err_h1_semi);
    // Ghost penalty diagnostic of the discrete error.
    let j = record.j_term.unwrap();
    assert!(j >= 0.0);
    assert!(record.err_h_norm().unwrap() >= record.err_star);

    // Raising the error-quadrature degree barely moves the numbers.
    let refined = measure(6, false);
    for (coarse, fine) in [
        (record.err_l2, refined.err_l2),
        (record.err_h1_semi, refined.err_h1_semi),
        (record.err_star, refined.err_star),
    ] {
        assert!((coarse - fine).abs() <= 1e-3 * fine, "{coarse} vs {fine}");
    }
}

#[test]
fn linear_limit_study_keeps_the_rates() {
    use cutfem::driver::run_convergence;
    let config = RunConfig {
        levels: 4,
        ..quiet("disc-p2")
    };
    let outcome = run_convergence(&config).unwrap();
    assert!(
        (0.9..=1.1).contains(&outcome.table.mean_eoc_h1),
        "H1 EOC {}",
        outcome.table.mean_eoc_h1
    );
    assert!(
        (1.8..=2.2).contains(&outcome.table.mean_eoc_l2),
        "L2 EOC {}",
        outcome.table.mean_eoc_l2
    );
    assert!((0.9..=1.1).contains(&outcome.table.mean_eoc_star));
}

#[test]
fn failed_level_aborts_with_partial_table() {
    use cutfem::driver::{run_convergence, DriverError};
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        levels: 3,
        newton_max_iter: 2, // not enough for the p = 4 problem
        output_dir: Some(dir.path().to_string_lossy().into_owned()),
        ..quiet("disc-p4")
    };
    let err = run_convergence(&config).unwrap_err();
    assert!(matches!(err, DriverError::NonConvergence { .. }));
    assert_eq!(err.exit_code(), 3);
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(table.starts_with("h,err_h1,eoc_h1"));
}

#[test]
fn newton_trace_csv_layout() {
    let run = run_single(&quiet("disc-p4"), 0).unwrap();
    let mut out = Vec::new();
    run.report.write_trace_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,residual_norm"));
    assert_eq!(text.lines().count(), run.report.residual_norms.len() + 1);
}
