//! Dense classical reference computations: direct solves, spectra, fidelity
//! targets, and discretization-convergence studies.

use crate::grid::{self, BoundaryParams, ProblemSpec, Rhs};
use crate::simulator::StateVector;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("matrix is singular or too ill-conditioned (relative residual {0})")]
    IllConditioned(f64),
    #[error("spectrum computation guarded to {max} qubits, got {got}")]
    SizeGuard { max: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] grid::GridError),
}

/// Eigendecompositions are guarded to 2^12-dimensional matrices.
pub const MAX_SPECTRUM_QUBITS: usize = 12;

/// Eigenvalues below this threshold count as the numerically zero ground
/// energy when locating λ₁.
pub const GROUND_THRESHOLD: f64 = 1e-8;

/// Solve A·x = b; returns the raw solution and its unit-norm copy.
pub fn dense_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), OracleError> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(OracleError::IllConditioned(f64::INFINITY))?;
    let residual = (a * &x - b).norm() / b.norm().max(1e-300);
    if !residual.is_finite() || residual > 1e-10 {
        return Err(OracleError::IllConditioned(residual));
    }
    let norm = x.norm();
    let unit = if norm > 0.0 { &x / norm } else { x.clone() };
    Ok((x, unit))
}

/// Sorted spectrum of a symmetric PSD matrix with the ground direction and
/// the λ_max/λ₁ diagnostic.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvector of the smallest eigenvalue.
    pub ground_state: DVector<f64>,
    /// Smallest eigenvalue above [`GROUND_THRESHOLD`].
    pub lambda_1: f64,
    /// λ_max / λ₁.
    pub ratio: f64,
}

/// Full symmetric eigendecomposition (size-guarded).
pub fn spectrum(h: &DMatrix<f64>) -> Result<SpectrumReport, OracleError> {
    let n = h.nrows();
    if n > (1 << MAX_SPECTRUM_QUBITS) {
        return Err(OracleError::SizeGuard {
            max: MAX_SPECTRUM_QUBITS,
            got: n.ilog2() as usize,
        });
    }
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let ground_state = eig.eigenvectors.column(order[0]).into_owned();
    let lambda_1 = eigenvalues
        .iter()
        .copied()
        .find(|&v| v > GROUND_THRESHOLD)
        .unwrap_or(f64::NAN);
    let ratio = eigenvalues.last().copied().unwrap_or(f64::NAN) / lambda_1;
    Ok(SpectrumReport {
        eigenvalues,
        ground_state,
        lambda_1,
        ratio,
    })
}

impl SpectrumReport {
    /// The ground state as a statevector for fidelity targets.
    pub fn ground_statevector(&self) -> StateVector {
        let width = self.ground_state.len().ilog2() as usize;
        StateVector::inject_real(width, self.ground_state.as_slice())
            .expect("eigenvector is unit norm")
    }
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub m: usize,
    pub n: usize,
    pub max_error: f64,
    /// log(e_prev/e)/log(h_prev/h); NaN on the coarsest level.
    pub observed_order: f64,
}

/// Max-norm error of the 1D Dirichlet solve against a manufactured solution
/// at each level m. The discrete system Â·μ = h²·f approximates −μ'' = f.
pub fn convergence_study(
    f: impl Fn(f64) -> f64,
    exact: impl Fn(f64) -> f64,
    levels: &[usize],
) -> Result<Vec<ConvergenceRow>, OracleError> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for &m in levels {
        let n = 1usize << m;
        let h = 1.0 / (n as f64 + 1.0);
        let spec = ProblemSpec::dirichlet(m, 1, Rhs::Uniform)?;
        let a = grid::build_matrix_1d(&spec)?;
        let rhs = DVector::from_fn(n, |i, _| h * h * f((i as f64 + 1.0) * h));
        let (solution, _) = dense_solve(&a, &rhs)?;
        let max_error = (0..n)
            .map(|i| (solution[i] - exact((i as f64 + 1.0) * h)).abs())
            .fold(0.0, f64::max);
        let observed_order = match rows.last() {
            Some(prev) => {
                let h_prev = 1.0 / (prev.n as f64 + 1.0);
                (prev.max_error / max_error).ln() / (h_prev / h).ln()
            }
            None => f64::NAN,
        };
        rows.push(ConvergenceRow {
            m,
            n,
            max_error,
            observed_order,
        });
    }
    Ok(rows)
}

/// Fidelity |⟨reference|ψ⟩|² of two unit states of equal width.
pub fn state_fidelity(psi: &StateVector, reference: &StateVector) -> f64 {
    psi.inner(reference).norm_sqr()
}

/// Loss/fidelity diagnostic of one optimization step.
#[derive(Debug, Clone, Copy)]
pub struct WorseCaseReport {
    pub loss_before: f64,
    pub loss_after: f64,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
    /// True when the loss decreased while the fidelity also decreased.
    pub flag: bool,
}

/// Check a step ψ_before → ψ_after against H: the loss can decrease while
/// the fidelity to the ground state decreases, when the spectrum above λ₁ is
/// spread out.
pub fn worse_case_probe(
    h: &DMatrix<f64>,
    psi_before: &StateVector,
    psi_after: &StateVector,
) -> Result<WorseCaseReport, OracleError> {
    let report = spectrum(h)?;
    let ground = report.ground_statevector();
    let quadratic = |psi: &StateVector| -> f64 {
        let n = h.nrows();
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += psi.amps()[i].conj() * h[(i, j)] * psi.amps()[j];
            }
        }
        acc.re
    };
    let loss_before = quadratic(psi_before);
    let loss_after = quadratic(psi_after);
    let fidelity_before = state_fidelity(psi_before, &ground);
    let fidelity_after = state_fidelity(psi_after, &ground);
    Ok(WorseCaseReport {
        loss_before,
        loss_after,
        fidelity_before,
        fidelity_after,
        flag: loss_after < loss_before && fidelity_after < fidelity_before,
    })
}

/// Dense Hamiltonian of a problem spec, for oracles and diagnostics.
pub fn problem_hamiltonian(spec: &ProblemSpec) -> Result<DMatrix<f64>, OracleError> {
    let a = grid::build_matrix(spec)?;
    let (_, b_unit) = grid::build_rhs(spec)?;
    Ok(grid::build_hamiltonian(&a, &b_unit)?)
}

/// Classical solution state of a problem spec (fidelity target).
pub fn classical_solution(spec: &ProblemSpec) -> Result<StateVector, OracleError> {
    let a = grid::build_matrix(spec)?;
    let (_, b_unit) = grid::build_rhs(spec)?;
    let (_, unit) = dense_solve(&a, &b_unit)?;
    Ok(
        StateVector::inject_real(spec.register_width(), unit.as_slice())
            .expect("unit-norm solution"),
    )
}

/// Dirichlet problem with uniform rhs, the configuration of the experiments.
pub fn dirichlet_uniform(m: usize, dim: usize) -> ProblemSpec {
    ProblemSpec::dirichlet(m, dim, Rhs::Uniform).expect("valid spec")
}

#[allow(unused)]
fn boundary_for_tests(c: f64, d_r: f64, n: usize) -> BoundaryParams {
    BoundaryParams::from_coefficients(c, d_r, n).unwrap()
}
