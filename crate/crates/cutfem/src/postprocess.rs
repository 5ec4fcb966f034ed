//! Error measurement in L2, the H1 seminorm and the mesh-dependent
//! boundary norm, plus experimental orders of convergence.

use std::io::Write;

use thiserror::Error;

use crate::assembly::{assemble_ghost_penalty, ProblemParams};
use crate::geometry::{barycentric_coords, p1_gradients, CutMesh, Point2};
use crate::quadrature::{
    element_volume_points, physical_interface_points, segment_rule, triangle_rule, QuadratureError,
};
use crate::space::{FeFunction, FeSpace};

#[derive(Debug, Error)]
pub enum PostprocessError {
    #[error("convergence tables need at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("mesh sizes must halve between levels: h[{index}] = {coarse} vs {fine}")]
    NonHalvingLevels {
        index: usize,
        coarse: f64,
        fine: f64,
    },
}

/// Errors of one discrete solution against the exact one.
///
/// The squared boundary norm `err_star^2` splits exactly into
/// `err_h1_semi^2 + boundary_term^2`.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRecord {
    pub h: f64,
    pub err_l2: f64,
    pub err_h1_semi: f64,
    /// sqrt of the H1 seminorm part plus the scaled boundary mass of the
    /// error.
    pub err_star: f64,
    /// sqrt of `gamma_d / h * int_Gamma (u - u_h)^2`.
    pub boundary_term: f64,
    /// Ghost penalty energy j(e_h, e_h) of the discrete error
    /// `u_h - I_h u`; only computed on request.
    pub j_term: Option<f64>,
}

impl ErrorRecord {
    /// Full H1 norm: seminorm plus L2 part.
    pub fn err_h1_full(&self) -> f64 {
        (self.err_h1_semi * self.err_h1_semi + self.err_l2 * self.err_l2).sqrt()
    }

    /// Diagnostic norm including the ghost penalty energy, when computed.
    /// The gradient part is taken over the physical domain.
    pub fn err_h_norm(&self) -> Option<f64> {
        self.j_term
            .map(|j| (self.err_star * self.err_star + j).sqrt())
    }
}

/// Computes the error norms of `u_h` against an exact solution given by
/// value and gradient fields. Volume terms are integrated over the
/// physical part of every active element; the boundary term integrates
/// the squared difference `u - u_h` over the discrete interface, scaled
/// by `gamma_d / h`.
#[allow(clippy::too_many_arguments)]
pub fn error_norms(
    u_exact: impl Fn(Point2) -> f64,
    grad_u_exact: impl Fn(Point2) -> Point2,
    u_h: &FeFunction,
    space: &FeSpace,
    dom: &CutMesh,
    params: &ProblemParams,
    error_degree: u32,
    with_j_term: bool,
) -> Result<ErrorRecord, QuadratureError> {
    let volume_rule = triangle_rule(error_degree)?;
    let interface_rule = segment_rule(error_degree)?;
    let mut l2_sq = 0.0;
    let mut h1_sq = 0.0;
    for &t in dom.active_elements() {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        let coeffs = [
            u_h.coefficients[dofs[0]],
            u_h.coefficients[dofs[1]],
            u_h.coefficients[dofs[2]],
        ];
        let grads = p1_gradients(&tri);
        let mut grad_uh = [0.0; 2];
        for k in 0..3 {
            grad_uh[0] += coeffs[k] * grads[k][0];
            grad_uh[1] += coeffs[k] * grads[k][1];
        }
        for (x, w) in element_volume_points(dom, t, &volume_rule) {
            let lam = barycentric_coords(&tri, x);
            let uh = coeffs[0] * lam[0] + coeffs[1] * lam[1] + coeffs[2] * lam[2];
            let e = u_exact(x) - uh;
            let ge = grad_u_exact(x);
            let gd = [ge[0] - grad_uh[0], ge[1] - grad_uh[1]];
            l2_sq += w * e * e;
            h1_sq += w * (gd[0] * gd[0] + gd[1] * gd[1]);
        }
    }
    let mut boundary_sq = 0.0;
    for (&t, cut) in &dom.cut_geometry {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        let coeffs = [
            u_h.coefficients[dofs[0]],
            u_h.coefficients[dofs[1]],
            u_h.coefficients[dofs[2]],
        ];
        for (x, w, _) in physical_interface_points(cut, &interface_rule) {
            let lam = barycentric_coords(&tri, x);
            let uh = coeffs[0] * lam[0] + coeffs[1] * lam[1] + coeffs[2] * lam[2];
            let e = u_exact(x) - uh;
            boundary_sq += w * e * e;
        }
    }
    boundary_sq *= params.gamma_d / params.h;
    let j_term = with_j_term.then(|| {
        let interpolant = space.interpolate_nodal(&dom.mesh, &u_exact);
        let e_h: Vec<f64> = u_h
            .coefficients
            .iter()
            .zip(&interpolant.coefficients)
            .map(|(a, b)| a - b)
            .collect();
        assemble_ghost_penalty(space, dom, params).quadratic_form(&e_h)
    });
    Ok(ErrorRecord {
        h: params.h,
        err_l2: l2_sq.sqrt(),
        err_h1_semi: h1_sq.sqrt(),
        err_star: (h1_sq + boundary_sq).sqrt(),
        boundary_term: boundary_sq.sqrt(),
        j_term,
    })
}

/// Order of convergence between two errors one mesh halving apart.
pub fn eoc_pair(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Error records over a sequence of halving levels with per-level and
/// mean orders of convergence. The H1 column uses the full H1 norm.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub records: Vec<ErrorRecord>,
    /// EOC between level l-1 and l, one entry per level past the first.
    pub eoc_h1: Vec<f64>,
    pub eoc_l2: Vec<f64>,
    pub eoc_star: Vec<f64>,
    pub mean_eoc_h1: f64,
    pub mean_eoc_l2: f64,
    pub mean_eoc_star: f64,
}

impl ConvergenceTable {
    pub fn from_records(records: Vec<ErrorRecord>) -> Result<Self, PostprocessError> {
        if records.len() < 2 {
            return Err(PostprocessError::TooFewLevels(records.len()));
        }
        for index in 1..records.len() {
            let (coarse, fine) = (records[index - 1].h, records[index].h);
            if (coarse / fine - 2.0).abs() > 1e-9 {
                return Err(PostprocessError::NonHalvingLevels {
                    index,
                    coarse,
                    fine,
                });
            }
        }
        let column = |f: &dyn Fn(&ErrorRecord) -> f64| -> Vec<f64> {
            records
                .windows(2)
                .map(|w| eoc_pair(f(&w[0]), f(&w[1])))
                .collect()
        };
        let eoc_h1 = column(&|r| r.err_h1_full());
        let eoc_l2 = column(&|r| r.err_l2);
        let eoc_star = column(&|r| r.err_star);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Ok(ConvergenceTable {
            mean_eoc_h1: mean(&eoc_h1),
            mean_eoc_l2: mean(&eoc_l2),
            mean_eoc_star: mean(&eoc_star),
            records,
            eoc_h1,
            eoc_l2,
            eoc_star,
        })
    }

    /// Writes the table as CSV with columns
    /// `h,err_h1,eoc_h1,err_l2,eoc_l2,err_star,eoc_star`, one row per
    /// level and a final row of mean EOCs.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write_csv_header(&mut w)?;
        for (level, record) in self.records.iter().enumerate() {
            let eoc = |v: &[f64]| {
                if level == 0 {
                    String::new()
                } else {
                    format!("{:.3}", v[level - 1])
                }
            };
            writeln!(
                w,
                "{:.6e},{:.5e},{},{:.5e},{},{:.5e},{}",
                record.h,
                record.err_h1_full(),
                eoc(&self.eoc_h1),
                record.err_l2,
                eoc(&self.eoc_l2),
                record.err_star,
                eoc(&self.eoc_star),
            )?;
        }
        writeln!(
            w,
            "mean,,{:.3},,{:.3},,{:.3}",
            self.mean_eoc_h1, self.mean_eoc_l2, self.mean_eoc_star
        )?;
        Ok(())
    }
}

pub(crate) fn write_csv_header(mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "h,err_h1,eoc_h1,err_l2,eoc_l2,err_star,eoc_star")
}

/// Writes the rows of a partial study (fewer than two levels, or an
/// aborted run) without EOC columns filled in.
pub fn write_partial_csv(records: &[ErrorRecord], mut w: impl Write) -> std::io::Result<()> {
    write_csv_header(&mut w)?;
    for record in records {
        writeln!(
            w,
            "{:.6e},{:.5e},,{:.5e},,{:.5e},",
            record.h,
            record.err_h1_full(),
            record.err_l2,
            record.err_star,
        )?;
    }
    Ok(())
}
