//! Iterative solvers: Gauss-Seidel relaxation, geometric multigrid, Krylov
//! methods, the estimator-driven FEM solver and the block Gauss-Seidel
//! solver for enriched systems.

pub mod block_gs;
pub mod estimators;
pub mod krylov;
pub mod multigrid;
pub mod relax;

pub use block_gs::{block_gs_outer, fem_solve, InnerMode, OuterRecord, SolveReport, StoppingConfig};
pub use estimators::{estimator_fem, extrapolated_error, richardson_outer_estimator, Extrapolation};
pub use krylov::{cg, fcg, KrylovOutcome};
pub use multigrid::{MeshHierarchy, Smoothing};
pub use relax::{gauss_seidel, sweep_backward, sweep_forward, RelaxOutcome};
