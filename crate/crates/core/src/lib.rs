//! Finite element and continuous interior penalty (CIP) finite element
//! solvers for the Helmholtz problem
//!
//! ```text
//! -Δu - k²u = f      in Ω = (0,1)²
//! ∂u/∂n + iku = g    on ∂Ω
//! ```
//!
//! on Cartesian grids with tensor-product Lagrange elements of order `p`.
//! The CIP variant adds penalties on the jumps of normal derivatives of
//! order `1..=p` across interior edges.
//!
//! Modules, bottom-up:
//!
//! - [`grid`]: the `m x m` grid, interior edges and degree-of-freedom numbering
//! - [`element`]: Lagrange bases and Gauss rules on the reference square
//! - [`manufactured`]: Bessel functions and the model problem data
//! - [`penalty`]: penalty parameter sets, including the dispersion-free ones
//! - [`assemble`]: sparse stiffness, mass, boundary and jump matrices, load vector
//! - [`linsolve`]: sparse direct LU and a preconditioned GMRES fallback
//! - [`errnorm`]: error functionals and the interpolation baseline
//! - [`dispersion`]: 1D Bloch-wave dispersion analysis
//! - [`theory`]: discrete elliptic operator, discrete Sobolev norms, coercivity
//! - [`fit`]: log-log slope fits

pub mod assemble;
pub mod dispersion;
pub mod element;
pub mod errnorm;
pub mod field;
pub mod fit;
pub mod grid;
pub mod linsolve;
pub mod manufactured;
pub mod penalty;
pub mod sparse;
pub mod theory;

pub use num_complex::Complex64;

pub use assemble::{assemble_blocks, assemble_penalty, assemble_rhs, combined_system, SystemBlocks};
pub use element::{gauss_rule, lagrange_basis, shape_2d, Basis1D, QuadRule, TensorBasis};
pub use errnorm::{error_report, interpolation_error, ErrorReport};
pub use field::{DiscreteField, Field};
pub use fit::{fit_slope, SlopeFit};
pub use grid::{DofMap, Mesh};
pub use linsolve::{solve, SolveReport, SolverKind, SolverOptions};
pub use manufactured::{bessel_j0, bessel_j1, source_f, ExactSolution};
pub use penalty::{gamma_constant, gamma_optimal, GammaSpec, PenaltySet, Provenance};
pub use sparse::{CsrMatrix, SparseComplexMatrix};
