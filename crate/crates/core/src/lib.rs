//! Variational quantum solver for discretized Poisson equations.
//!
//! The crate builds the finite-difference linear systems for 1D Poisson
//! problems with mixed boundary conditions (and d-dimensional Dirichlet
//! problems), decomposes `σx ⊗ A` into a short sum of Hermitian, one-sparse,
//! self-inverse signed-permutation operators, evaluates the loss
//! `⟨ψ|A²|ψ⟩ − |⟨b|A|ψ⟩|²` through Hadamard tests on a statevector
//! simulator, and optimizes a layered variational ansatz against it. A dense
//! classical oracle cross-checks every quantum-side quantity.
//!
//! Modules:
//! - [`grid`]: discretization matrices, right-hand sides, target Hamiltonian
//! - [`decomp`]: signed-permutation terms and the decompositions of `σx⊗A`, `σx⊗A²`
//! - [`simulator`]: statevector simulator, term circuits, ancilla bookkeeping
//! - [`estimator`]: Hadamard tests and loss assembly
//! - [`vqa`]: ansatz, finite-difference gradients, restart-based descent
//! - [`oracle`]: dense solves, spectra, convergence studies

pub use num_complex::Complex64;

pub mod decomp;
pub mod estimator;
pub mod grid;
pub mod oracle;
pub mod simulator;
pub mod vqa;

pub use decomp::{Decomposition, ProductTermList, Sign, SignedPermutationOp, TermLabel};
pub use estimator::{GateBackend, HadamardTestResult, HtMode, HtTarget, LossMode, LossReport};
pub use grid::{BoundaryParams, ProblemSpec, Rhs};
pub use oracle::SpectrumReport;
pub use simulator::{CircuitLayout, Gate, StateVector, TermCircuit};
pub use vqa::{AnsatzParams, OptimizerConfig, RunReport};
