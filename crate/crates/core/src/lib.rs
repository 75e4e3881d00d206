//! Optimal L^p Lyapunov constants, non-resonance certificates and
//! solvers for Neumann boundary value problems on intervals and
//! rectangles.
//!
//! The crate has three layers:
//!
//! * numerical kernels — uniform grids with trapezoid quadrature
//!   ([`grid`], [`gridfn`]), dense symmetric eigendecomposition
//!   ([`smallmat`]) and banded symmetric solvers/eigensolvers ([`band`]);
//! * the constants and certificates — the constrained-quotient
//!   minimizer for the optimal constants β_p ([`beta`]), the uniqueness
//!   certificates for linear matrix-coefficient systems ([`certify`])
//!   and the optimality counterexample generator ([`counterexample`]);
//! * ground truth and applications — the discrete kernel oracle and
//!   forced linear solver ([`oracle`]), the fundamental-matrix shooting
//!   oracle ([`shooting`]) and the fixed-point solver for nonlinear
//!   resonant systems ([`nonlinear`]).
//!
//! Every certificate is a *sufficient* condition: a `pass` verdict
//! claims the boundary value problem has only the trivial solution, and
//! the kernel oracle exists precisely to cross-check that claim.

pub mod band;
pub mod beta;
pub mod error;
pub mod exponent;
pub mod field;
pub mod grid;
pub mod gridfn;
pub mod oracle;
pub mod shooting;
pub mod smallmat;

pub use band::{
    self_adjointness_defect, smallest_eigenpairs, solve_linear, solve_minres, BandMatrix,
    EigOptions, EigenPair, MatrixFreeOperator, SymmetricOperator,
};
pub use beta::{
    beta_by_shooting, closed_form_beta, compute_beta, constraint_residual, rayleigh_quotient,
    shift_to_admissible, BetaConstant, BetaOptions, BetaValue, ShiftOutcome,
};
pub use error::{Error, Result};
pub use exponent::Exponent;
pub use field::{FieldManifest, MatrixField};
pub use grid::{build_grid, Grid, GridDescriptor};
pub use gridfn::{GridFunction, VectorFunction};
pub use oracle::{kernel_report, kernel_report_with, solve_linear_bvp, KernelReport, NeumannOperator};
pub use shooting::shooting_determinant;
pub use smallmat::{sym_eig_small, EigenDecomp, SymMat};
