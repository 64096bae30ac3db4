//! Dense box-constrained convex QP solver.
//!
//! Solves `minimize ½xᵀPx + qᵀx subject to l ≤ Ax ≤ u` with an OSQP-style
//! ADMM iteration whose inner linear system can be handled either by
//! per-iteration conjugate gradient or by a set of conjugate directions
//! computed once offline. The directions are conjugate with respect to
//! `P + σI` and `Aᵀϱ A` separately, so they survive scalar rescaling of the
//! augmentation matrix `ϱ` during adaptive updates.
//!
//! Everything is generic over [`Scalar`] (`f32`/`f64`); the `*F64` aliases
//! below name the double-precision instantiations used by the CLI.

// Comparisons are written as `!(x > 0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod error;
pub mod linalg;
pub mod offline;
pub mod oracle;
pub mod qp;
mod scalar;

pub use admm::{
    instrumented_solve, rho_update, rho_update_factor, solve, Backend, ResidualRecord, RhoMode,
    SolveResult, SolveStatus, SolverSettings,
};
pub use error::{Error, Result};
pub use linalg::{CgTrace, EigenPair, Matrix, SpdOperator};
pub use offline::{
    compute_offline, conjugacy_check, fingerprint, rho_init, AugmentationMatrix, ConjugacyReport,
    ConjugateDirectionSet, DirectionStrategy,
};
pub use oracle::{kkt_oracle, KktReport};
pub use qp::{project_box, residuals, validate, Iterate, QpProblem, Residuals};
pub use scalar::Scalar;

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type QpProblemF64 = QpProblem<f64>;
pub type QpProblemF32 = QpProblem<f32>;
pub type SolverSettingsF64 = SolverSettings<f64>;
pub type SolverSettingsF32 = SolverSettings<f32>;
pub type SolveResultF64 = SolveResult<f64>;
pub type SolveResultF32 = SolveResult<f32>;
pub type AugmentationMatrixF64 = AugmentationMatrix<f64>;
pub type ConjugateDirectionSetF64 = ConjugateDirectionSet<f64>;
