//! Unfitted (cut) finite elements for semilinear elliptic problems.
//!
//! The library discretizes `-laplace(u) + |u|^(p-2) u = f` with
//! homogeneous Dirichlet conditions on a domain given implicitly as the
//! negative region of a level-set function, immersed in a structured
//! triangular background mesh. Boundary conditions are imposed weakly
//! with a symmetric Nitsche formulation and the cut zone is stabilized by
//! a ghost penalty on normal gradient jumps, so the discrete problem
//! stays well conditioned no matter how the interface crosses the mesh.
//! A Newton iteration with exact Jacobians solves the nonlinear systems;
//! error norms and experimental convergence orders against manufactured
//! solutions come out as CSV tables.
//!
//! The `cutfem` binary exposes single solves (`solve`), convergence
//! studies (`convergence`) and a built-in property check (`check`).
//!
//! ```
//! use cutfem::config::RunConfig;
//! use cutfem::driver::run_single;
//!
//! let config = RunConfig {
//!     output_dir: None, // keep the artifacts in memory
//!     ..RunConfig::default()
//! };
//! let run = run_single(&config, 0).unwrap();
//! assert!(run.report.converged);
//! assert!(run.errors.err_h1_full() < 0.1);
//! ```

// Validation uses `!(x > 0.0)` so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops in the linear-algebra kernels run over several slices in
// lockstep.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod config;
pub mod driver;
pub mod geometry;
pub mod io;
pub mod postprocess;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use assembly::{PenaltyLengthScale, ProblemParams, QuadratureSet};
pub use config::RunConfig;
pub use geometry::{CutClassification, CutGeometry, CutMesh, ElementLabel, Mesh, Point2, Rect};
pub use postprocess::{ConvergenceTable, ErrorRecord};
pub use problems::ManufacturedProblem;
pub use solver::{NewtonReport, NewtonSettings};
pub use space::{FeFunction, FeSpace};
pub use sparse::SparseOperator;
