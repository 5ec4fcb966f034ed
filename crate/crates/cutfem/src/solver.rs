//! Sparse linear solves and the Newton iteration for the discrete
//! semilinear system.
//!
//! Linear systems go through a sparse LU factorization; symmetric systems
//! fall back to diagonally preconditioned conjugate gradients when the
//! factorization does not deliver the requested residual. One global `h`
//! level is solved at a time; independent levels share no mutable state.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{assemble_f1_jacobian, assemble_f1_residual, ProblemParams, QuadratureSet};
use crate::geometry::CutMesh;
use crate::space::{FeFunction, FeSpace};
use crate::sparse::SparseOperator;

pub const DEFAULT_LINEAR_TOL: f64 = 1e-12;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 25;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("matrix is {n}x{n} but right-hand side has length {rhs}")]
    DimensionMismatch { n: usize, rhs: usize },
    #[error("linear solve failed: factorization residual {direct:e}, cg residual {cg:e} after {iterations} iterations")]
    LinearSolveFailed {
        direct: f64,
        cg: f64,
        iterations: usize,
    },
    #[error("conjugate gradient did not reach {tol:e} within {iterations} iterations")]
    IterationLimit { tol: f64, iterations: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

fn ensure_sequential() {
    use std::sync::Once;
    static INIT: Once = Once::new();
    // Single-threaded kernels keep factorizations bitwise reproducible.
    INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

fn to_faer(a: &SparseOperator) -> SparseColMat<usize, f64> {
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    SparseColMat::try_new_from_triplets(a.n(), a.n(), &triplets)
        .expect("CSR triplets are always in range")
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn residual_norm(a: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    ax.iter()
        .zip(b)
        .map(|(axi, bi)| (axi - bi) * (axi - bi))
        .sum::<f64>()
        .sqrt()
}

/// Solves `A x = b` to a relative residual of `tol`: sparse LU first, then
/// a Jacobi-preconditioned CG rescue for symmetric systems.
pub fn linear_solve(a: &SparseOperator, b: &[f64], tol: f64) -> Result<Vec<f64>, SolverError> {
    ensure_sequential();
    let n = a.n();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { n, rhs: b.len() });
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut direct_rel = f64::INFINITY;
    if let Ok(lu) = to_faer(a).sp_lu() {
        let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
        let sol = lu.solve(&rhs);
        let x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
        direct_rel = residual_norm(a, &x, b) / b_norm;
        if direct_rel <= tol {
            return Ok(x);
        }
    }
    if a.is_symmetric() {
        let max_iter = 20 * n;
        match conjugate_gradient(a, b, tol, max_iter) {
            Ok(x) => return Ok(x),
            Err(SolverError::IterationLimit { .. }) => {
                return Err(SolverError::LinearSolveFailed {
                    direct: direct_rel,
                    cg: f64::INFINITY,
                    iterations: max_iter,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Err(SolverError::LinearSolveFailed {
        direct: direct_rel,
        cg: f64::INFINITY,
        iterations: 0,
    })
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// definite systems.
pub fn conjugate_gradient(
    a: &SparseOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolverError> {
    let n = a.n();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { n, rhs: b.len() });
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(ri, zi)| ri * zi).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if norm(&r) <= tol * b_norm {
            return Ok(x);
        }
        a.matvec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(pi, api)| pi * api).sum();
        if !(pap > 0.0) {
            // Breakdown: the matrix is not positive definite.
            return Err(SolverError::IterationLimit {
                tol,
                iterations: max_iter,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(ri, zi)| ri * zi).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm(&r) <= tol * b_norm {
        Ok(x)
    } else {
        Err(SolverError::IterationLimit {
            tol,
            iterations: max_iter,
        })
    }
}

/// Trace of one Newton run.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    /// Number of Newton steps taken (0 when the initial guess already
    /// satisfies the tolerance).
    pub iterations: usize,
    /// Euclidean norms of the algebraic residual, one entry per assembled
    /// residual including the initial one.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
}

impl NewtonReport {
    /// Writes `iteration,residual_norm` CSV rows.
    pub fn write_trace_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "iteration,residual_norm")?;
        for (k, r) in self.residual_norms.iter().enumerate() {
            writeln!(w, "{},{:e}", k, r)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    pub tol_abs: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol_abs: DEFAULT_NEWTON_TOL,
            max_iter: DEFAULT_NEWTON_MAX_ITER,
            linear_tol: DEFAULT_LINEAR_TOL,
        }
    }
}

/// Newton iteration for the discrete system
/// `(A + J_gp) u + F1(u) = load` with an exact Jacobian and a halving
/// line search that only activates when the full step increases the
/// residual norm.
#[allow(clippy::too_many_arguments)]
pub fn newton_solve(
    space: &FeSpace,
    dom: &CutMesh,
    a: &SparseOperator,
    j_gp: &SparseOperator,
    load: &[f64],
    params: &ProblemParams,
    quad: &QuadratureSet,
    u0: FeFunction,
    settings: &NewtonSettings,
) -> Result<(FeFunction, NewtonReport), SolverError> {
    let linear = a.add(j_gp);
    let residual = |u: &FeFunction| -> Vec<f64> {
        let mut r = linear.matvec(&u.coefficients);
        let f1 = assemble_f1_residual(space, dom, quad, u, params.p);
        for i in 0..r.len() {
            r[i] += f1[i] - load[i];
        }
        r
    };

    let mut u = u0;
    let mut r = residual(&u);
    let mut r_norm = norm(&r);
    let mut residual_norms = vec![r_norm];
    if r_norm <= settings.tol_abs {
        return Ok((
            u,
            NewtonReport {
                iterations: 0,
                residual_norms,
                converged: true,
            },
        ));
    }
    for iteration in 1..=settings.max_iter {
        let jac = linear.add(&assemble_f1_jacobian(space, dom, quad, &u, params.p));
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = linear_solve(&jac, &neg_r, settings.linear_tol)?;

        let mut alpha = 1.0;
        let (mut u_trial, mut r_trial, mut r_trial_norm);
        loop {
            u_trial = FeFunction {
                coefficients: u
                    .coefficients
                    .iter()
                    .zip(&delta)
                    .map(|(ui, di)| ui + alpha * di)
                    .collect(),
            };
            r_trial = residual(&u_trial);
            r_trial_norm = norm(&r_trial);
            if r_trial_norm <= r_norm || alpha < 1e-8 {
                break;
            }
            alpha *= 0.5;
        }
        u = u_trial;
        r = r_trial;
        r_norm = r_trial_norm;
        residual_norms.push(r_norm);
        if !r_norm.is_finite() {
            break;
        }
        if r_norm <= settings.tol_abs {
            return Ok((
                u,
                NewtonReport {
                    iterations: iteration,
                    residual_norms,
                    converged: true,
                },
            ));
        }
    }
    let iterations = residual_norms.len() - 1;
    Ok((
        u,
        NewtonReport {
            iterations,
            residual_norms,
            converged: false,
        },
    ))
}

/// Estimate of the smallest eigenvalue of a symmetric positive definite
/// operator: a sparse Cholesky factorization certifies positive
/// definiteness, then inverse iteration from a seeded random vector
/// refines the Rayleigh quotient.
pub fn smallest_eigenvalue_estimate(
    a: &SparseOperator,
    iterations: usize,
    seed: u64,
) -> Result<f64, SolverError> {
    ensure_sequential();
    let n = a.n();
    let llt = to_faer(a)
        .sp_cholesky(faer::Side::Lower)
        .map_err(|_| SolverError::NotPositiveDefinite)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scale = norm(&x);
    x.iter_mut().for_each(|v| *v /= scale);
    for _ in 0..iterations {
        let rhs = Mat::from_fn(n, 1, |i, _| x[i]);
        let y = llt.solve(&rhs);
        let mut y: Vec<f64> = (0..n).map(|i| y[(i, 0)]).collect();
        let s = norm(&y);
        y.iter_mut().for_each(|v| *v /= s);
        x = y;
    }
    Ok(a.quadratic_form(&x))
}
