//! Shared fixtures for the criterion benchmarks.

use qpoisson_core::grid::{build_rhs, BoundaryParams, ProblemSpec, Rhs};
use qpoisson_core::simulator::StateVector;

/// Dirichlet 1D problem with uniform rhs and its |b⟩ state.
pub fn dirichlet_fixture(m: usize) -> (BoundaryParams, StateVector) {
    let spec = ProblemSpec::dirichlet(m, 1, Rhs::Uniform).expect("valid spec");
    let (_, b_unit) = build_rhs(&spec).expect("uniform rhs");
    let b_state = StateVector::inject_real(m, b_unit.as_slice()).expect("unit norm");
    (BoundaryParams::dirichlet(1 << m), b_state)
}

/// A reproducible non-trivial register state.
pub fn probe_state(width: usize) -> StateVector {
    use qpoisson_core::vqa::{ansatz_state, AnsatzParams};
    let params = AnsatzParams::tied(width, &[(0.37, 1.21), (2.53, 0.71)]);
    ansatz_state(&params).expect("width >= 2")
}
