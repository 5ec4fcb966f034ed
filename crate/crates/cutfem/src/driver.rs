//! End-to-end drivers: discretize and solve one level, run a convergence
//! study over halving levels, sweep random interface positions, and the
//! built-in quick-check suite.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{
    assemble_ah, assemble_dirichlet_data, assemble_ghost_penalty, assemble_load,
    ProblemParams, QuadratureSet,
};
use crate::config::{ConfigError, RunConfig};
use crate::geometry::{
    build_background_mesh_with_cells, grid_cells_for_target, CutMesh, MeshError, Point2,
};
use crate::io::write_vtk_solution;
use crate::postprocess::{
    error_norms, write_partial_csv, ConvergenceTable, ErrorRecord, PostprocessError,
};
use crate::problems::ManufacturedProblem;
use crate::quadrature::QuadratureError;
use crate::solver::{newton_solve, NewtonReport, NewtonSettings, SolverError};
use crate::space::{FeFunction, FeSpace};
use crate::sparse::SparseOperator;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("level {level}: {source}")]
    Mesh {
        level: usize,
        source: MeshError,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("level {level}: {source}")]
    Solver {
        level: usize,
        source: SolverError,
    },
    #[error("level {level}: newton did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        level: usize,
        iterations: usize,
        residual: f64,
    },
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error("failed to write artifacts: {0}")]
    Io(#[from] std::io::Error),
}

impl DriverError {
    /// Process exit code: 2 validation, 3 solver failure, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            DriverError::Config(_) | DriverError::Mesh { .. } | DriverError::Quadrature(_) => 2,
            DriverError::Solver { .. } | DriverError::NonConvergence { .. } => 3,
            DriverError::Postprocess(_) | DriverError::Io(_) => 1,
        }
    }
}

/// The assembled linear part of one level: geometry, space, operators and
/// right-hand side.
#[derive(Debug)]
pub struct Discretization {
    pub level: usize,
    pub dom: CutMesh,
    pub space: FeSpace,
    pub params: ProblemParams,
    pub quad: QuadratureSet,
    pub a: SparseOperator,
    pub j_gp: SparseOperator,
    pub load: Vec<f64>,
}

/// Builds the level-`level` mesh by doubling the level-0 cell counts, so
/// the mesh parameter halves exactly between consecutive levels.
pub fn level_mesh(config: &RunConfig, level: usize) -> Result<crate::geometry::Mesh, DriverError> {
    let (nx, ny) = grid_cells_for_target(config.bounds(), config.base_h)
        .map_err(|source| DriverError::Mesh { level, source })?;
    Ok(build_background_mesh_with_cells(
        config.bounds(),
        nx << level,
        ny << level,
    ))
}

/// Discretizes `problem` on the level mesh: classification, space,
/// Nitsche operator, ghost penalty and load.
pub fn discretize(
    config: &RunConfig,
    level: usize,
    problem: &ManufacturedProblem,
) -> Result<Discretization, DriverError> {
    let mesh = level_mesh(config, level)?;
    let dom = CutMesh::build(mesh, &problem.level_set);
    let space = FeSpace::build(&dom);
    let params = config.params(dom.mesh.h_max)?;
    let quad = config.quadrature()?;
    let a = assemble_ah(&space, &dom, &params, &quad);
    let j_gp = assemble_ghost_penalty(&space, &dom, &params);
    let mut load = assemble_load(&space, &dom, &quad, &problem.f2);
    if let Some(g) = &problem.dirichlet_data {
        let data = assemble_dirichlet_data(&space, &dom, &params, &quad, g);
        for (b, d) in load.iter_mut().zip(&data) {
            *b += d;
        }
    }
    Ok(Discretization {
        level,
        dom,
        space,
        params,
        quad,
        a,
        j_gp,
        load,
    })
}

/// Newton-solves an assembled level from the zero initial guess.
pub fn solve_discretization(
    config: &RunConfig,
    disc: &Discretization,
) -> Result<(FeFunction, NewtonReport), DriverError> {
    let settings = NewtonSettings {
        tol_abs: config.newton_tol,
        max_iter: config.newton_max_iter,
        ..NewtonSettings::default()
    };
    let (u, report) = newton_solve(
        &disc.space,
        &disc.dom,
        &disc.a,
        &disc.j_gp,
        &disc.load,
        &disc.params,
        &disc.quad,
        disc.space.zero_function(),
        &settings,
    )
    .map_err(|source| DriverError::Solver {
        level: disc.level,
        source,
    })?;
    if !report.converged {
        return Err(DriverError::NonConvergence {
            level: disc.level,
            iterations: report.iterations,
            residual: *report.residual_norms.last().unwrap_or(&f64::NAN),
        });
    }
    Ok((u, report))
}

/// Everything produced by one level solve.
#[derive(Debug)]
pub struct LevelRun {
    pub level: usize,
    pub h: f64,
    pub n_active_elements: usize,
    pub n_dofs: usize,
    pub solution: FeFunction,
    pub report: NewtonReport,
    pub errors: ErrorRecord,
}

fn measure_errors(
    config: &RunConfig,
    problem: &ManufacturedProblem,
    disc: &Discretization,
    u: &FeFunction,
) -> Result<ErrorRecord, DriverError> {
    Ok(error_norms(
        &problem.u_exact,
        &problem.grad_u_exact,
        u,
        &disc.space,
        &disc.dom,
        &disc.params,
        config.error_degree,
        false,
    )?)
}

fn write_level_artifacts(
    dir: &Path,
    disc: &Discretization,
    run: &LevelRun,
) -> Result<(), DriverError> {
    fs::create_dir_all(dir)?;
    let vtk = fs::File::create(dir.join(format!("solution_{}.vtk", run.level)))?;
    write_vtk_solution(
        std::io::BufWriter::new(vtk),
        &disc.dom,
        &disc.space,
        &run.solution,
        "u",
    )?;
    let newton = fs::File::create(dir.join(format!("newton_{}.csv", run.level)))?;
    run.report.write_trace_csv(newton)?;
    let mut errors = fs::File::create(dir.join(format!("errors_{}.csv", run.level)))?;
    write_partial_csv(std::slice::from_ref(&run.errors), &mut errors)?;
    Ok(())
}

/// Solves a single level end to end and writes its artifacts when an
/// output directory is configured.
pub fn run_single(config: &RunConfig, level: usize) -> Result<LevelRun, DriverError> {
    config.validate()?;
    let problem = config.problem_with_offset([0.0, 0.0])?;
    let disc = discretize(config, level, &problem)?;
    let (solution, report) = solve_discretization(config, &disc)?;
    let errors = measure_errors(config, &problem, &disc, &solution)?;
    let run = LevelRun {
        level,
        h: disc.dom.mesh.h_max,
        n_active_elements: disc.dom.active_elements().len(),
        n_dofs: disc.space.n_dofs(),
        solution,
        report,
        errors,
    };
    if let Some(dir) = &config.output_dir {
        write_level_artifacts(Path::new(dir), &disc, &run)?;
    }
    Ok(run)
}

/// Result of a convergence study.
#[derive(Debug)]
pub struct ConvergenceOutcome {
    pub table: ConvergenceTable,
    pub runs: Vec<LevelRun>,
    pub within_bands: bool,
    pub table_path: Option<PathBuf>,
}

fn in_band(value: f64, band: [f64; 2]) -> bool {
    band[0] <= value && value <= band[1]
}

/// Runs all configured levels, emits the table CSV and a machine-readable
/// summary, and checks the mean EOCs against the configured bands. A
/// failing level aborts after writing the partial table.
pub fn run_convergence(config: &RunConfig) -> Result<ConvergenceOutcome, DriverError> {
    config.validate()?;
    if config.levels < 2 {
        return Err(ConfigError::TooFewLevelsForStudy(config.levels).into());
    }
    let out_dir = config.output_dir.as_ref().map(PathBuf::from);
    if let Some(dir) = &out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut runs: Vec<LevelRun> = Vec::new();
    for level in 0..config.levels {
        match run_single(config, level) {
            Ok(run) => runs.push(run),
            Err(err) => {
                if let Some(dir) = &out_dir {
                    let records: Vec<ErrorRecord> = runs.iter().map(|r| r.errors).collect();
                    let file = fs::File::create(dir.join("table.csv"))?;
                    match ConvergenceTable::from_records(records.clone()) {
                        Ok(table) => table.write_csv(file)?,
                        Err(_) => write_partial_csv(&records, file)?,
                    }
                }
                return Err(err);
            }
        }
    }
    let table = ConvergenceTable::from_records(runs.iter().map(|r| r.errors).collect())?;
    let within_bands = in_band(table.mean_eoc_h1, config.eoc_band_h1)
        && in_band(table.mean_eoc_l2, config.eoc_band_l2)
        && in_band(table.mean_eoc_star, config.eoc_band_star);
    let mut table_path = None;
    if let Some(dir) = &out_dir {
        let path = dir.join("table.csv");
        table.write_csv(fs::File::create(&path)?)?;
        let summary = serde_json::json!({
            "mean_eoc_h1": table.mean_eoc_h1,
            "mean_eoc_l2": table.mean_eoc_l2,
            "mean_eoc_star": table.mean_eoc_star,
            "eoc_band_h1": config.eoc_band_h1,
            "eoc_band_l2": config.eoc_band_l2,
            "eoc_band_star": config.eoc_band_star,
            "within_bands": within_bands,
            "levels": runs.len(),
        });
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
        table_path = Some(path);
    }
    Ok(ConvergenceOutcome {
        table,
        runs,
        within_bands,
        table_path,
    })
}

/// One repetition of the random-translation robustness sweep.
#[derive(Debug)]
pub struct SweepRun {
    pub rep: usize,
    pub offset: Point2,
    pub iterations: usize,
    pub err_h1_full: f64,
    pub err_l2: f64,
    /// Smallest-eigenvalue estimate of the penalized bilinear form when
    /// requested via [`SweepOptions::eigen_gamma_d`].
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// When set, additionally assembles the Nitsche form with this
    /// boundary penalty and estimates the smallest eigenvalue of
    /// `a_h + j_h`.
    pub eigen_gamma_d: Option<f64>,
    pub eigen_iterations: usize,
}

/// Cell side length of the level grid, the amplitude of the random
/// translations.
pub fn level_cell_size(config: &RunConfig, level: usize) -> Result<f64, DriverError> {
    let (nx, _) = grid_cells_for_target(config.bounds(), config.base_h)
        .map_err(|source| DriverError::Mesh { level, source })?;
    Ok(config.bounds().width() / (nx << level) as f64)
}

/// Re-solves the configured problem at one level with the disc center
/// shifted by seeded random offsets of up to one grid cell, exercising
/// the robustness of the stabilized scheme to the interface position.
pub fn run_translation_sweep(
    config: &RunConfig,
    level: usize,
    reps: usize,
    options: &SweepOptions,
) -> Result<Vec<SweepRun>, DriverError> {
    config.validate()?;
    let cell = level_cell_size(config, level)?;
    let mut out = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(rep as u64));
        let offset = [
            rng.random_range(-cell..cell),
            rng.random_range(-cell..cell),
        ];
        let problem = config.problem_with_offset(offset)?;
        let disc = discretize(config, level, &problem)?;
        let (u, report) = solve_discretization(config, &disc)?;
        let errors = measure_errors(config, &problem, &disc, &u)?;
        let lambda_min = match options.eigen_gamma_d {
            Some(gamma_d) => {
                let mut params = disc.params;
                params.gamma_d = gamma_d;
                let a = assemble_ah(&disc.space, &disc.dom, &params, &disc.quad);
                let stabilized = a.add(&disc.j_gp);
                Some(
                    crate::solver::smallest_eigenvalue_estimate(
                        &stabilized,
                        options.eigen_iterations.max(1),
                        config.seed.wrapping_add(1000 + rep as u64),
                    )
                    .map_err(|source| DriverError::Solver { level, source })?,
                )
            }
            None => None,
        };
        out.push(SweepRun {
            rep,
            offset,
            iterations: report.iterations,
            err_h1_full: errors.err_h1_full(),
            err_l2: errors.err_l2,
            lambda_min,
        });
    }
    Ok(out)
}

/// Writes the sweep results as CSV.
pub fn write_sweep_csv(runs: &[SweepRun], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "rep,offset_x,offset_y,iterations,err_h1,err_l2,lambda_min")?;
    for run in runs {
        let lambda = run
            .lambda_min
            .map(|l| format!("{:e}", l))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{:e},{:e},{},{:e},{:e},{}",
            run.rep, run.offset[0], run.offset[1], run.iterations, run.err_h1_full, run.err_l2,
            lambda
        )?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Built-in quick property suite behind the `check` subcommand: rule
/// exactness, cut partitioning, Jacobian consistency and the exact
/// patch/linear-limit solves, all on coarse meshes.
pub fn run_check() -> Vec<CheckResult> {
    let mut results = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        results.push(CheckResult {
            name,
            passed,
            detail,
        });
    };

    // Quadrature exactness against closed-form monomial integrals.
    {
        let mut worst = 0.0f64;
        for degree in 1..=crate::quadrature::MAX_DEGREE {
            let rule = crate::quadrature::triangle_rule(degree).unwrap();
            for a in 0..=rule.exact_degree {
                for b in 0..=(rule.exact_degree - a) {
                    let quad: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&[x, y], &w)| w * x.powi(a as i32) * y.powi(b as i32))
                        .sum();
                    let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    worst = worst.max(((quad - exact) / exact).abs());
                }
            }
        }
        push(
            "triangle quadrature exactness",
            worst <= 1e-12,
            format!("worst relative defect {:.2e}", worst),
        );
    }

    // Partition property of random cuts.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let tri = crate::geometry::random_ccw_triangle(&mut rng);
            let values = crate::geometry::random_mixed_signs(&mut rng);
            let area = crate::geometry::signed_area(tri[0], tri[1], tri[2]);
            let pos = crate::geometry::intersect_element(0, &tri, &values).unwrap();
            let neg_values = [-values[0], -values[1], -values[2]];
            let neg = crate::geometry::intersect_element(0, &tri, &neg_values).unwrap();
            worst = worst.max(((pos.inside_area() + neg.inside_area() - area) / area).abs());
        }
        push(
            "cut partition of element area",
            worst <= 1e-12,
            format!("worst relative defect {:.2e}", worst),
        );
    }

    // Jacobian versus directional finite differences on the coarse disc.
    {
        let config = RunConfig {
            output_dir: None,
            ..RunConfig::default()
        };
        let problem = config.problem_with_offset([0.0, 0.0]).unwrap();
        let disc = discretize(&config, 0, &problem).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = FeFunction {
            coefficients: (0..disc.space.n_dofs())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        };
        let defect = jacobian_fd_defect(&disc, &u, 17);
        push(
            "nonlinearity jacobian consistency",
            defect <= 1.0,
            format!("relative defect {:.2e} of allowance", defect),
        );
    }

    // Affine patch test: every error norm at solver tolerance.
    {
        let config = RunConfig {
            problem: "affine-patch".to_string(),
            newton_tol: 1e-13,
            output_dir: None,
            ..RunConfig::default()
        };
        match run_single(&config, 0) {
            Ok(run) => {
                let worst = run
                    .errors
                    .err_h1_full()
                    .max(run.errors.err_star)
                    .max(run.errors.err_l2);
                push(
                    "affine patch test",
                    worst <= 1e-10,
                    format!("largest error norm {:.2e}", worst),
                );
            }
            Err(err) => push("affine patch test", false, err.to_string()),
        }
    }

    // Linear limit p = 2: Newton converges in one step.
    {
        let config = RunConfig {
            problem: "disc-p2".to_string(),
            p: 2.0,
            output_dir: None,
            ..RunConfig::default()
        };
        match run_single(&config, 0) {
            Ok(run) => push(
                "linear limit single newton step",
                run.report.iterations == 1,
                format!("iterations = {}", run.report.iterations),
            ),
            Err(err) => push("linear limit single newton step", false, err.to_string()),
        }
    }

    // Ghost penalty vanishes on globally affine functions.
    {
        let config = RunConfig {
            output_dir: None,
            ..RunConfig::default()
        };
        let problem = config.problem_with_offset([0.0, 0.0]).unwrap();
        let disc = discretize(&config, 0, &problem).unwrap();
        let affine = disc
            .space
            .interpolate_nodal(&disc.dom.mesh, |p| 1.0 - 2.0 * p[0] + 0.5 * p[1]);
        let energy = disc.j_gp.quadratic_form(&affine.coefficients).abs();
        push(
            "ghost penalty kernel contains affines",
            energy <= 1e-12,
            format!("j(v, v) = {:.2e}", energy),
        );
    }

    results
}

/// Largest ratio of the finite-difference Jacobian defect to the
/// tolerance `1e-5 * |J v| + 1e-10` over a few random directions; values
/// at most 1 pass.
pub fn jacobian_fd_defect(disc: &Discretization, u: &FeFunction, seed: u64) -> f64 {
    use crate::assembly::{assemble_f1_jacobian, assemble_f1_residual};
    let n = disc.space.n_dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jac = assemble_f1_jacobian(&disc.space, &disc.dom, &disc.quad, u, disc.params.p);
    let r0 = assemble_f1_residual(&disc.space, &disc.dom, &disc.quad, u, disc.params.p);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u_pert = FeFunction {
            coefficients: u
                .coefficients
                .iter()
                .zip(&v)
                .map(|(ui, vi)| ui + eps * vi)
                .collect(),
        };
        let r1 = assemble_f1_residual(&disc.space, &disc.dom, &disc.quad, &u_pert, disc.params.p);
        let jv = jac.matvec(&v);
        let mut defect_sq = 0.0;
        let mut jv_sq = 0.0;
        for i in 0..n {
            let fd = (r1[i] - r0[i]) / eps;
            defect_sq += (fd - jv[i]) * (fd - jv[i]);
            jv_sq += jv[i] * jv[i];
        }
        let allowance = 1e-5 * jv_sq.sqrt() + 1e-10;
        worst = worst.max(defect_sq.sqrt() / allowance);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_config() -> RunConfig {
        RunConfig {
            output_dir: None,
            ..RunConfig::default()
        }
    }

    #[test]
    fn level_meshes_halve_exactly() {
        let config = quiet_config();
        let m0 = level_mesh(&config, 0).unwrap();
        let m1 = level_mesh(&config, 1).unwrap();
        let m2 = level_mesh(&config, 2).unwrap();
        assert_eq!(m0.n_triangles(), 1682);
        assert_eq!(m1.h_max, m0.h_max / 2.0);
        assert_eq!(m2.h_max, m1.h_max / 2.0);
        assert!(m0.h_max <= config.base_h);
    }

    #[test]
    fn zero_force_solves_to_zero_in_no_iterations() {
        let config = RunConfig {
            problem: "zero".to_string(),
            ..quiet_config()
        };
        let run = run_single(&config, 0).unwrap();
        assert_eq!(run.report.iterations, 0);
        assert!(run.report.converged);
        assert!(run.solution.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(run.errors.err_l2, 0.0);
        assert_eq!(run.errors.err_star, 0.0);
    }

    #[test]
    fn single_level_study_is_rejected() {
        let config = RunConfig {
            levels: 1,
            ..quiet_config()
        };
        assert!(matches!(
            run_convergence(&config),
            Err(DriverError::Config(ConfigError::TooFewLevelsForStudy(1)))
        ));
    }

    #[test]
    fn check_suite_passes() {
        for result in run_check() {
            assert!(result.passed, "{}: {}", result.name, result.detail);
        }
    }
}
