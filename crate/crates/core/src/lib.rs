//! Generalized and stable generalized finite element discretizations of
//! two-dimensional elliptic interface problems, together with the
//! block Gauss-Seidel solvers whose speed is governed by the angle between
//! the FEM and enrichment subspaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] and [`interface`] build the uniform triangulation, classify cut
//!   elements and sub-triangulate them along the (possibly polygonal) interface.
//! * [`enrichment`] constructs the distance-based enrichment functions.
//! * [`manufactured`] provides the exact solutions and their Neumann data.
//! * [`assembly`] builds the 2x2 block stiffness system and its unit-diagonal scaling.
//! * [`diagnostics`] computes condition numbers, subspace angles and error measures.
//! * [`solvers`] holds Gauss-Seidel, multigrid, Krylov and block Gauss-Seidel solvers.
//! * [`oned`] is the dense one-dimensional reference problem.
//! * [`experiments`] runs the parameter sweeps consumed by the command-line driver.
//!
//! With the default `parallel` feature, element assembly, sparse products and
//! experiment grids run on the rayon thread pool; without it every path is
//! sequential. [`par::Exec`] selects the path explicitly at runtime.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod diagnostics;
pub mod eigen;
pub mod enrichment;
pub mod error;
pub mod experiments;
pub mod interface;
pub mod manufactured;
pub mod mesh;
pub mod oned;
pub mod par;
pub mod problem;
#[cfg(test)]
mod proptests;
pub mod quadrature;
pub mod skyline;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};

/// A point of the plane.
pub type Point = [f64; 2];
