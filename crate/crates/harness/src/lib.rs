//! Experiment driver for the Helmholtz FEM and CIP-FEM solvers: convergence
//! studies, fixed-`kh/p` wave-number sweeps, critical mesh sizes,
//! dispersion tables, and their CSV and SVG output.

pub mod config;
pub mod envelope;
pub mod experiments;
pub mod output;
pub mod plot;

pub use config::{Method, RunConfig};
pub use experiments::{critical_mesh_size, run_convergence, run_critical, run_dispersion, run_ksweep, solve_case, Case, CriticalMeshResult, HarnessError};
