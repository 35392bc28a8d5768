//! Numerical laboratory for obstacle-type free boundary problems
//! `F(D²u) = χ_Ω` on the half-ball `B₁⁺` with `u = 0` on the flat boundary `Π = {x₁ = 0}`.
//!
//! The operator `F` is convex, positively homogeneous of degree one and uniformly
//! elliptic. The crate provides the operators ([`operator`]), a monotone wide-stencil
//! discretization ([`scheme`]) on classified Cartesian grids ([`grid`]), complementarity
//! and two-phase solvers ([`solver`]), closed-form references ([`oracle`]) and the
//! regularity diagnostics measured on discrete solutions ([`diagnostics`]).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64` aliases below
//! fix the double precision used by the command-line tools.

// Negated float comparisons such as `!(x > 0)` deliberately reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boundary;
pub mod diagnostics;
pub mod error;
pub mod export;
mod frozen;
pub mod grid;
pub mod matrix;
pub mod operator;
pub mod oracle;
pub mod rescale;
pub mod scalar;
pub mod scheme;
pub mod solver;

pub use boundary::{boundary_preset_eval, BoundaryPreset};
pub use error::{Error, Result};
pub use grid::{
    build_grid, classify_phase, second_difference, FrameSet, GridDomain, NodeRole, Phase, PhaseField, ScalarField,
    Shape,
};
pub use matrix::SymMatrix;
pub use operator::{eval_operator, OperatorKind, OperatorSpec};
pub use oracle::{halfspace_oracle, oracle_1d, quadratic_probe, HalfspaceOracle, Oracle1D, QuadraticProbe};
pub use rescale::{interpolate, restrict_and_rescale};
pub use scalar::Real;
pub use scheme::{discrete_operator, DiscreteOperator};
pub use diagnostics::{run_diagnostics, DiagnosticsReport, DiagnosticsRequest};
pub use solver::{
    calibrate_contact_amplitude, complementarity_residual, solve_positive, solve_positive_seeded, solve_two_phase,
    ContactCalibration, InnerSolver, SolveConfig, SolveMode, SolveResult,
};

pub type SymMatrix64 = SymMatrix<f64>;
pub type OperatorSpec64 = OperatorSpec<f64>;
pub type GridDomain64 = GridDomain<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type SolveConfig64 = SolveConfig<f64>;
pub type SolveResult64 = SolveResult<f64>;
pub type BoundaryPreset64 = BoundaryPreset<f64>;
pub type DiagnosticsReport64 = DiagnosticsReport<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
pub type OperatorSpec32 = OperatorSpec<f32>;
pub type GridDomain32 = GridDomain<f32>;
