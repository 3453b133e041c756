//! Finite-difference discretization of the Poisson problem.
//!
//! The 1D problem on (0,1) with boundary conditions
//! `α₁μ'(0) − α₂μ(0) = 0`, `β₁μ'(1) + β₂μ(1) = 0` discretizes on n = 2^m
//! interior points to a tridiagonal system with diagonal
//! `(2−c, 2, …, 2, 2−d_r)` and off-diagonals −1, where
//! `c = α₁/(α₁+α₂h)`, `d_r = β₁/(β₁+β₂h)`, `h = 1/(n+1)`. The d-dimensional
//! Dirichlet problem yields the Kronecker sum of the 1D Dirichlet stencil.
//!
//! Dense matrices appear only on the classical oracle side; the quantum-side
//! code never forms `A`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid boundary: alpha1+alpha2 and beta1+beta2 must both be positive")]
    InvalidBoundary,
    #[error("dimension {0} >= 2 requires Dirichlet boundary conditions")]
    UnsupportedBoundary(usize),
    #[error("grid size must be n = 2^m with m >= 1, got n = {0}")]
    InvalidGridSize(usize),
    #[error("right-hand side is (numerically) the zero vector")]
    DegenerateRhs,
    #[error("sampled rhs has length {got}, expected {expected}")]
    RhsLength { got: usize, expected: usize },
    #[error("dimension mismatch: matrix is {matrix}, vector is {vector}")]
    DimensionMismatch { matrix: usize, vector: usize },
    #[error("operation requires dim == 1, got dim = {0}")]
    NotOneDimensional(usize),
    #[error("operation requires dim >= 2, got dim = {0}")]
    NotMultiDimensional(usize),
}

/// Boundary constants of the unified 1D conditions and the derived
/// discretization coefficients.
///
/// `c` and `d_r` both lie in [0,1]; Dirichlet (`alpha1 = beta1 = 0`) forces
/// `c = d_r = 0`. The right coefficient is named `d_r` so `d`/`dim` stays
/// free for the spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Grid spacing h = 1/(n+1).
    pub h: f64,
    /// Left coefficient c = α₁/(α₁ + α₂h).
    pub c: f64,
    /// Right coefficient d_r = β₁/(β₁ + β₂h).
    pub d_r: f64,
}

impl BoundaryParams {
    /// Dirichlet boundary (α₁ = β₁ = 0, α₂ = β₂ = 1): c = d_r = 0.
    pub fn dirichlet(n: usize) -> Self {
        boundary_coefficients(0.0, 1.0, 0.0, 1.0, n).expect("Dirichlet is always valid")
    }

    /// Boundary parameters given directly by the derived coefficients
    /// c, d_r ∈ [0,1]. The constants α, β are back-filled so the closed
    /// forms reproduce exactly: α₁ = c, α₂ = (1−c)/h gives
    /// α₁/(α₁+α₂h) = c.
    pub fn from_coefficients(c: f64, d_r: f64, n: usize) -> Result<Self, GridError> {
        if !(0.0..=1.0).contains(&c) || !(0.0..=1.0).contains(&d_r) {
            return Err(GridError::InvalidBoundary);
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(GridError::InvalidGridSize(n));
        }
        let h = 1.0 / (n as f64 + 1.0);
        Ok(BoundaryParams {
            alpha1: c,
            alpha2: (1.0 - c) / h,
            beta1: d_r,
            beta2: (1.0 - d_r) / h,
            h,
            c,
            d_r,
        })
    }

    pub fn is_dirichlet(&self) -> bool {
        self.c == 0.0 && self.d_r == 0.0
    }
}

/// Compute `h`, `c`, and `d_r` from the four boundary constants and the
/// interior grid size `n`.
pub fn boundary_coefficients(
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    n: usize,
) -> Result<BoundaryParams, GridError> {
    if !(alpha1 >= 0.0 && alpha2 >= 0.0 && beta1 >= 0.0 && beta2 >= 0.0) {
        return Err(GridError::InvalidBoundary);
    }
    if alpha1 + alpha2 <= 0.0 || beta1 + beta2 <= 0.0 {
        return Err(GridError::InvalidBoundary);
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(GridError::InvalidGridSize(n));
    }
    let h = 1.0 / (n as f64 + 1.0);
    Ok(BoundaryParams {
        alpha1,
        alpha2,
        beta1,
        beta2,
        h,
        c: alpha1 / (alpha1 + alpha2 * h),
        d_r: beta1 / (beta1 + beta2 * h),
    })
}

/// Right-hand side descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    /// All-equal entries; |b⟩ is the uniform state.
    Uniform,
    /// f sampled on the interior grid points, in basis-index order.
    Samples(Vec<f64>),
}

impl Rhs {
    /// Sample `f` at the 1D interior points x_i = i·h, i = 1..n.
    pub fn from_fn_1d(f: impl Fn(f64) -> f64, n: usize) -> Self {
        let h = 1.0 / (n as f64 + 1.0);
        Rhs::Samples((1..=n).map(|i| f(i as f64 * h)).collect())
    }
}

/// Problem description: qubits per axis, spatial dimension, boundary, rhs.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    /// Qubits per axis; the per-axis grid size is n = 2^m.
    pub m: usize,
    /// Spatial dimension. dim >= 2 requires Dirichlet boundaries.
    pub dim: usize,
    pub boundary: BoundaryParams,
    pub rhs: Rhs,
}

impl ProblemSpec {
    pub fn new(
        m: usize,
        dim: usize,
        boundary: BoundaryParams,
        rhs: Rhs,
    ) -> Result<Self, GridError> {
        if m == 0 {
            return Err(GridError::InvalidGridSize(0));
        }
        if dim == 0 {
            return Err(GridError::NotOneDimensional(0));
        }
        if dim >= 2 && !boundary.is_dirichlet() {
            return Err(GridError::UnsupportedBoundary(dim));
        }
        Ok(ProblemSpec {
            m,
            dim,
            boundary,
            rhs,
        })
    }

    /// 1D problem with the given boundary parameters.
    pub fn one_dim(m: usize, boundary: BoundaryParams, rhs: Rhs) -> Result<Self, GridError> {
        Self::new(m, 1, boundary, rhs)
    }

    /// Dirichlet problem in `dim` dimensions.
    pub fn dirichlet(m: usize, dim: usize, rhs: Rhs) -> Result<Self, GridError> {
        Self::new(m, dim, BoundaryParams::dirichlet(1 << m), rhs)
    }

    /// Per-axis grid size n = 2^m.
    pub fn n(&self) -> usize {
        1 << self.m
    }

    /// Solution register width N = m·dim.
    pub fn register_width(&self) -> usize {
        self.m * self.dim
    }

    /// Linear-system dimension n^dim = 2^N.
    pub fn system_size(&self) -> usize {
        1 << self.register_width()
    }
}

/// Tridiagonal 1D matrix with diagonal (2−c, 2, …, 2, 2−d_r), off-diagonals −1.
pub fn build_matrix_1d(spec: &ProblemSpec) -> Result<DMatrix<f64>, GridError> {
    if spec.dim != 1 {
        return Err(GridError::NotOneDimensional(spec.dim));
    }
    let n = spec.n();
    let (c, d_r) = (spec.boundary.c, spec.boundary.d_r);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0;
        if i + 1 < n {
            a[(i, i + 1)] = -1.0;
            a[(i + 1, i)] = -1.0;
        }
    }
    a[(0, 0)] -= c;
    a[(n - 1, n - 1)] -= d_r;
    Ok(a)
}

/// Kronecker sum `A^(d) = Σ_{s+t=d−1} I_s ⊗ Ã ⊗ I_t` of the Dirichlet stencil.
pub fn build_matrix_ddim(spec: &ProblemSpec) -> Result<DMatrix<f64>, GridError> {
    if spec.dim < 2 {
        return Err(GridError::NotMultiDimensional(spec.dim));
    }
    if !spec.boundary.is_dirichlet() {
        return Err(GridError::UnsupportedBoundary(spec.dim));
    }
    let n = spec.n();
    let tilde = {
        let dirichlet = ProblemSpec::dirichlet(spec.m, 1, Rhs::Uniform).expect("valid 1D spec");
        build_matrix_1d(&dirichlet)?
    };
    let eye = DMatrix::<f64>::identity(n, n);
    let total = spec.system_size();
    let mut a = DMatrix::zeros(total, total);
    for s in 0..spec.dim {
        // I_s ⊗ Ã ⊗ I_t with t = dim−1−s; the right factor has stride 1.
        let mut term = DMatrix::<f64>::identity(1, 1);
        for _ in 0..s {
            term = term.kronecker(&eye);
        }
        term = term.kronecker(&tilde);
        for _ in 0..(spec.dim - 1 - s) {
            term = term.kronecker(&eye);
        }
        a += term;
    }
    Ok(a)
}

/// Dispatch on dimension.
pub fn build_matrix(spec: &ProblemSpec) -> Result<DMatrix<f64>, GridError> {
    if spec.dim == 1 {
        build_matrix_1d(spec)
    } else {
        build_matrix_ddim(spec)
    }
}

/// Explicit four-sparse form of Â² for the 1D problem: interior stencil
/// (1, −4, 6, −4, 1), entries +c / +d_r next to the corners, and corner
/// diagonals 6−(4c+1−c²) and 6−(4d_r+1−d_r²).
pub fn a_squared_explicit(m: usize, c: f64, d_r: f64) -> DMatrix<f64> {
    let n = 1usize << m;
    let mut sq = DMatrix::zeros(n, n);
    for i in 0..n {
        sq[(i, i)] = 6.0;
        if i + 1 < n {
            sq[(i, i + 1)] = -4.0;
            sq[(i + 1, i)] = -4.0;
        }
        if i + 2 < n {
            sq[(i, i + 2)] = 1.0;
            sq[(i + 2, i)] = 1.0;
        }
    }
    if n >= 2 {
        sq[(0, 1)] += c;
        sq[(1, 0)] += c;
        sq[(n - 2, n - 1)] += d_r;
        sq[(n - 1, n - 2)] += d_r;
    }
    sq[(0, 0)] -= 4.0 * c + 1.0 - c * c;
    sq[(n - 1, n - 1)] -= 4.0 * d_r + 1.0 - d_r * d_r;
    sq
}

/// Raw rhs vector b and the unit-norm state |b⟩ ∝ b.
pub fn build_rhs(spec: &ProblemSpec) -> Result<(DVector<f64>, DVector<f64>), GridError> {
    let size = spec.system_size();
    let raw = match &spec.rhs {
        Rhs::Uniform => DVector::from_element(size, 1.0),
        Rhs::Samples(v) => {
            if v.len() != size {
                return Err(GridError::RhsLength {
                    got: v.len(),
                    expected: size,
                });
            }
            DVector::from_column_slice(v)
        }
    };
    let norm = raw.norm();
    if norm <= 1e-300 {
        return Err(GridError::DegenerateRhs);
    }
    let unit = &raw / norm;
    Ok((raw, unit))
}

/// Target Hamiltonian H = Aᵀ(I − |b⟩⟨b|)A. Positive semidefinite with a zero
/// eigenvalue at states proportional to A⁻¹b.
pub fn build_hamiltonian(
    a: &DMatrix<f64>,
    b_state: &DVector<f64>,
) -> Result<DMatrix<f64>, GridError> {
    let n = a.nrows();
    if b_state.len() != n {
        return Err(GridError::DimensionMismatch {
            matrix: n,
            vector: b_state.len(),
        });
    }
    let projector = DMatrix::identity(n, n) - b_state * b_state.transpose();
    Ok(a.transpose() * projector * a)
}
