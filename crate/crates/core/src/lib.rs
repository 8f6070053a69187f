//! Kinematical bounds and dynamical realizability for finite-level quantum
//! control.
//!
//! Given a control-linear Hamiltonian `H0 + sum_m f_m(t) H_m`, an initial
//! density matrix and an observable, this crate computes the extremal
//! expectation values reachable by any unitary, builds unitaries that reach
//! them, decides complete controllability from the rank of the generated
//! Lie algebra, tightens the bounds for decoupled systems, and searches for
//! piecewise-constant pulses that approach the bounds through the actual
//! dynamics.

pub mod bounds;
pub mod controllability;
pub mod dynamics;
pub mod error;
pub mod matcore;
pub mod optimizer;
pub mod sampling;
pub mod states;

pub use bounds::{
    check_attainment, decoupled_bounds, kinematical_bounds, optimal_unitary, Attainment, Direction, KinematicalBounds,
    SubspacePartition,
};
pub use controllability::{
    detect_decoupling, is_completely_controllable, lie_closure, IdealReport, LieClosureReport, DEFAULT_CLOSURE_TOL,
};
pub use dynamics::{propagate, simulate_expectation, ControlModel, PulseSchedule};
pub use error::{QcbError, Result};
pub use matcore::{commutator, expm_unitary, hermitian_eig, hs_inner, ComplexMatrix, EigDecomposition};
pub use optimizer::{
    gradient, optimize, optimize_multistart, yield_fraction, InitialPulse, OptimizationConfig, OptimizationReport,
    YieldFraction,
};
pub use states::{ensemble_decomposition, evolve_state, expectation, DensityMatrix, EnsembleDecomposition, Observable};

pub use num_complex::Complex64;
