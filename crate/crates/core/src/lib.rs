//! Iterative and direct solvers for the one-dimensional polarized
//! radiative transfer benchmark: a two-level atom (J_u = 1, J_l = 0) in
//! complete frequency redistribution, isothermal slab, Stokes I and Q.
//!
//! The unknown is the vector of multipolar source-function components
//! `[σ⁰₀(τ₁), σ²₀(τ₁), σ⁰₀(τ₂), …]`, and the system is
//! `(Id − J Λ T) σ = J t + c`. The operator can be applied matrix-free
//! ([`operator::OperatorContext`]) or assembled column by column into a
//! dense matrix, then handed to the Richardson, GMRES, BiCGSTAB or CGS
//! solvers in [`solvers`] with any of the preconditioners in
//! [`preconditioners`].

pub mod bench;
pub mod discretization;
pub mod error;
pub mod linalg;
pub mod operator;
pub mod preconditioners;
pub mod rt;
pub mod solvers;
pub mod voigt;

pub use discretization::{Grid, GridSpec, ModelParams};
pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use operator::{AssemblyMode, LinearOperator, OperatorContext};
pub use preconditioners::{Preconditioner, PreconditionerKind, PreconditionerSpec};
pub use rt::{FormalSolverKind, SigmaVector, SourceField, StokesField};
pub use solvers::{Method, SolveReport, SolveStatus, SolverConfig};
