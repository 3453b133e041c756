//! Hadamard-test estimation of ⟨+|⟨ψ|G|+⟩|ψ⟩, ⟨+|⟨b|G|+⟩|ψ⟩ and
//! ⟨+|⟨ψ|GG′|+⟩|ψ⟩, and assembly of the loss E = ⟨ψ|A²|ψ⟩ − |⟨b|A|ψ⟩|².
//!
//! The test circuit prepares the work register through a controlled-Ũ with
//! Ũ = W_out†·G·W_in, where W_in|0⟩ = |+⟩|ψ⟩ and W_out|0⟩ is |+⟩|ψ⟩ or
//! |+⟩|b⟩. Reading the ancilla gives ⟨0|Ũ|0⟩ = (2P_R−1) + i(2P_I−1). EXACT
//! mode reads the probabilities from the simulated amplitudes; SHOTS mode
//! draws Bernoulli samples from them with a seeded generator.

use crate::decomp::{
    self, decompose_a2_1d, decompose_a_1d, decompose_a_ddim, expand_a2_ddim, make_term,
    SignedPermutationOp, TermLabel,
};
use crate::grid::{self, BoundaryParams, ProblemSpec, Rhs};
use crate::simulator::{synthesize_term_circuit, Gate, SimError, StateVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("state width {state} does not match operator width {op}")]
    WidthMismatch { state: usize, op: usize },
    #[error("product terms must be distinct, got {0:?} twice")]
    SameLabels(TermLabel),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error(transparent)]
    Decomp(#[from] decomp::DecompError),
}

/// How the controlled term queries are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateBackend {
    /// Controlled signed-permutation action, no ancillas.
    #[default]
    Direct,
    /// The synthesized query circuits with index and phase ancillas.
    Synthesized,
}

/// Estimation mode of a single Hadamard test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Result of one Hadamard-test pair (real and imaginary circuits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HadamardTestResult {
    pub p_real: f64,
    pub p_imag: f64,
    /// (2·p_real−1) + i·(2·p_imag−1).
    pub estimate: Complex64,
    /// None in EXACT mode.
    pub shots: Option<u64>,
}

/// A controlled-Ũ target: input/output preparations and the term sequence.
#[derive(Debug, Clone)]
pub struct HtTarget {
    width: usize,
    phi_in: StateVector,
    phi_out: StateVector,
    /// Applied in order: ops[0] first (the rightmost operator factor).
    ops: Vec<SignedPermutationOp>,
}

fn check_width(psi: &StateVector, op: &SignedPermutationOp) -> Result<(), EstimatorError> {
    if psi.width() + 1 != op.width() {
        return Err(EstimatorError::WidthMismatch {
            state: psi.width(),
            op: op.width(),
        });
    }
    Ok(())
}

impl HtTarget {
    /// Ũ for ⟨+|⟨ψ|G|+⟩|ψ⟩.
    pub fn expectation(psi: &StateVector, op: SignedPermutationOp) -> Result<Self, EstimatorError> {
        check_width(psi, &op)?;
        let phi = psi.with_plus_top();
        Ok(HtTarget {
            width: op.width(),
            phi_in: phi.clone(),
            phi_out: phi,
            ops: vec![op],
        })
    }

    /// Ũ for ⟨+|⟨b|G|+⟩|ψ⟩.
    pub fn overlap(
        b_state: &StateVector,
        psi: &StateVector,
        op: SignedPermutationOp,
    ) -> Result<Self, EstimatorError> {
        check_width(psi, &op)?;
        check_width(b_state, &op)?;
        Ok(HtTarget {
            width: op.width(),
            phi_in: psi.with_plus_top(),
            phi_out: b_state.with_plus_top(),
            ops: vec![op],
        })
    }

    /// Ũ for ⟨+|⟨ψ|GG′|+⟩|ψ⟩ with left·right the operator product.
    pub fn product(
        psi: &StateVector,
        left: SignedPermutationOp,
        right: SignedPermutationOp,
    ) -> Result<Self, EstimatorError> {
        if left.label() == right.label() {
            return Err(EstimatorError::SameLabels(left.label()));
        }
        check_width(psi, &left)?;
        check_width(psi, &right)?;
        let phi = psi.with_plus_top();
        // left·right|φ⟩ applies right first.
        Ok(HtTarget {
            width: left.width(),
            phi_in: phi.clone(),
            phi_out: phi,
            ops: vec![right, left],
        })
    }

    /// ⟨φ_out|G_k…G_1|φ_in⟩ without the test ancilla (validation oracle).
    pub fn direct_inner_product(&self) -> Complex64 {
        let mut state = self.phi_in.clone();
        for op in &self.ops {
            state
                .apply_term_direct(op)
                .expect("widths checked at construction");
        }
        self.phi_out.inner(&state)
    }
}

/// Simulate the real- or imaginary-part test circuit and return the exact
/// probability of measuring 0 on the ancilla.
fn ancilla_zero_probability(target: &HtTarget, imaginary: bool, backend: GateBackend) -> f64 {
    let circuits: Vec<_> = match backend {
        GateBackend::Direct => vec![],
        GateBackend::Synthesized => target.ops.iter().map(synthesize_term_circuit).collect(),
    };
    let ancilla_top = circuits
        .iter()
        .map(|c| c.layout.total_width)
        .max()
        .unwrap_or(target.width);
    let ht = ancilla_top;
    let mut state = StateVector::zeros(ht + 1);
    state.apply(&Gate::H(ht));
    if imaginary {
        state.apply(&Gate::Sdg(ht));
    }
    state
        .apply_controlled_prepare(ht, &target.phi_in, false)
        .expect("layout places the ancilla above the work register");
    match backend {
        GateBackend::Direct => {
            for op in &target.ops {
                state
                    .apply_term_controlled(op, ht)
                    .expect("widths checked at construction");
            }
        }
        GateBackend::Synthesized => {
            for circuit in &circuits {
                state.apply_all(&circuit.controlled_gates(ht));
            }
        }
    }
    state
        .apply_controlled_prepare(ht, &target.phi_out, true)
        .expect("layout places the ancilla above the work register");
    state.apply(&Gate::H(ht));
    state.probability(ht, false)
}

/// Run the Hadamard-test pair for `target`.
pub fn hadamard_test(
    target: &HtTarget,
    mode: HtMode,
    backend: GateBackend,
) -> Result<HadamardTestResult, EstimatorError> {
    let p_real_exact = ancilla_zero_probability(target, false, backend);
    let p_imag_exact = ancilla_zero_probability(target, true, backend);
    let (p_real, p_imag, shots) = match mode {
        HtMode::Exact => (p_real_exact, p_imag_exact, None),
        HtMode::Shots { shots, seed } => {
            if shots == 0 {
                return Err(EstimatorError::ZeroShots);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (
                sample_bernoulli(p_real_exact, shots, &mut rng),
                sample_bernoulli(p_imag_exact, shots, &mut rng),
                Some(shots),
            )
        }
    };
    Ok(HadamardTestResult {
        p_real,
        p_imag,
        estimate: Complex64::new(2.0 * p_real - 1.0, 2.0 * p_imag - 1.0),
        shots,
    })
}

fn sample_bernoulli(p: f64, shots: u64, rng: &mut ChaCha8Rng) -> f64 {
    let mut count = 0u64;
    for _ in 0..shots {
        if rng.gen::<f64>() < p {
            count += 1;
        }
    }
    count as f64 / shots as f64
}

/// ⟨+|⟨ψ|G|+⟩|ψ⟩ via the (b1)-form test.
pub fn expectation_psi_g_psi(
    psi: &StateVector,
    op: SignedPermutationOp,
    mode: HtMode,
    backend: GateBackend,
) -> Result<Complex64, EstimatorError> {
    Ok(hadamard_test(&HtTarget::expectation(psi, op)?, mode, backend)?.estimate)
}

/// ⟨+|⟨b|G|+⟩|ψ⟩ via the (b2)-form test.
pub fn overlap_b_g_psi(
    b_state: &StateVector,
    psi: &StateVector,
    op: SignedPermutationOp,
    mode: HtMode,
    backend: GateBackend,
) -> Result<Complex64, EstimatorError> {
    Ok(hadamard_test(&HtTarget::overlap(b_state, psi, op)?, mode, backend)?.estimate)
}

/// ⟨+|⟨ψ|GG′|+⟩|ψ⟩ via the (b3)-form test.
pub fn expectation_psi_gg_psi(
    psi: &StateVector,
    left: SignedPermutationOp,
    right: SignedPermutationOp,
    mode: HtMode,
    backend: GateBackend,
) -> Result<Complex64, EstimatorError> {
    Ok(hadamard_test(&HtTarget::product(psi, left, right)?, mode, backend)?.estimate)
}

/// Loss-evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Classical oracle: dense H = Aᵀ(I−|b⟩⟨b|)A quadratic form.
    Dense,
    /// Hadamard tests with exact ancilla probabilities.
    ExactHt,
    /// Hadamard tests with sampled probabilities.
    ShotsHt { shots: u64, seed: u64 },
}

/// One estimated inner-product item of a loss evaluation.
#[derive(Debug, Clone)]
pub struct LossItem {
    pub description: String,
    pub coefficient: f64,
    pub value: Complex64,
}

/// Assembled loss and its constituents.
#[derive(Debug, Clone)]
pub struct LossReport {
    /// term_a2 − |term_b_a|².
    pub loss: f64,
    /// Re ⟨ψ|A²|ψ⟩.
    pub term_a2: f64,
    /// Imaginary residue of the A² estimate (zero up to noise).
    pub term_a2_imag: f64,
    /// ⟨b|A|ψ⟩.
    pub term_b_a: Complex64,
    /// Items of the ⟨b|A|ψ⟩ sum (empty in Dense mode).
    pub overlap_items: Vec<LossItem>,
    /// Items of the ⟨ψ|A²|ψ⟩ sum (empty in Dense mode).
    pub expectation_items: Vec<LossItem>,
}

fn dense_loss(a: &nalgebra::DMatrix<f64>, b_state: &StateVector, psi: &StateVector) -> LossReport {
    let n = a.nrows();
    let apsi: Vec<Complex64> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)] * psi.amps()[j]).sum())
        .collect();
    let term_a2: f64 = apsi.iter().map(|v| v.norm_sqr()).sum();
    let term_b_a: Complex64 = b_state
        .amps()
        .iter()
        .zip(&apsi)
        .map(|(b, v)| b.conj() * v)
        .sum();
    LossReport {
        loss: term_a2 - term_b_a.norm_sqr(),
        term_a2,
        term_a2_imag: 0.0,
        term_b_a,
        overlap_items: vec![],
        expectation_items: vec![],
    }
}

struct ItemRng {
    base: Option<(u64, ChaCha8Rng)>,
}

impl ItemRng {
    fn new(mode: LossMode) -> Self {
        match mode {
            LossMode::ShotsHt { shots, seed } => ItemRng {
                base: Some((shots, ChaCha8Rng::seed_from_u64(seed))),
            },
            _ => ItemRng { base: None },
        }
    }

    /// Independent sub-seeded mode for the next item, in call order.
    fn next_mode(&mut self) -> HtMode {
        match &mut self.base {
            Some((shots, rng)) => HtMode::Shots {
                shots: *shots,
                seed: rng.gen(),
            },
            None => HtMode::Exact,
        }
    }
}

/// Loss for the 1D problem: ⟨b|A|ψ⟩ from the σx⊗Â decomposition (≤7 items)
/// and ⟨ψ|A²|ψ⟩ from the σx⊗Â² decomposition (≤15 items).
pub fn loss_1d(
    psi: &StateVector,
    boundary: &BoundaryParams,
    b_state: &StateVector,
    mode: LossMode,
    backend: GateBackend,
) -> Result<LossReport, EstimatorError> {
    let m = psi.width();
    if b_state.width() != m {
        return Err(EstimatorError::WidthMismatch {
            state: b_state.width(),
            op: m + 1,
        });
    }
    if mode == LossMode::Dense {
        let spec = ProblemSpec::one_dim(m, *boundary, Rhs::Uniform)?;
        let a = grid::build_matrix_1d(&spec)?;
        return Ok(dense_loss(&a, b_state, psi));
    }
    let mut rng = ItemRng::new(mode);
    let (c, d_r) = (boundary.c, boundary.d_r);

    let mut term_b_a = Complex64::ZERO;
    let mut overlap_items = Vec::new();
    for (coeff, label) in decompose_a_1d(m, c, d_r).terms {
        let op = make_term(label, m, 1)?;
        let value = overlap_b_g_psi(b_state, psi, op, rng.next_mode(), backend)?;
        term_b_a += coeff * value;
        overlap_items.push(LossItem {
            description: label.name(),
            coefficient: coeff,
            value,
        });
    }

    let mut a2 = Complex64::ZERO;
    let mut expectation_items = Vec::new();
    for (coeff, label) in decompose_a2_1d(m, c, d_r).terms {
        let op = make_term(label, m, 1)?;
        let value = expectation_psi_g_psi(psi, op, rng.next_mode(), backend)?;
        a2 += coeff * value;
        expectation_items.push(LossItem {
            description: label.name(),
            coefficient: coeff,
            value,
        });
    }

    Ok(LossReport {
        loss: a2.re - term_b_a.norm_sqr(),
        term_a2: a2.re,
        term_a2_imag: a2.im,
        term_b_a,
        overlap_items,
        expectation_items,
    })
}

/// Loss for the d-dimensional Dirichlet problem: ⟨b|A|ψ⟩ from 4d+1 items
/// and ⟨ψ|A²|ψ⟩ from the constant 4d²+d plus (4d+1)²−(4d+1) product items.
pub fn loss_ddim(
    psi: &StateVector,
    m: usize,
    dim: usize,
    b_state: &StateVector,
    mode: LossMode,
    backend: GateBackend,
) -> Result<LossReport, EstimatorError> {
    let n_total = m * dim;
    if psi.width() != n_total || b_state.width() != n_total {
        return Err(EstimatorError::WidthMismatch {
            state: psi.width(),
            op: n_total + 1,
        });
    }
    if mode == LossMode::Dense {
        let spec = ProblemSpec::dirichlet(m, dim, Rhs::Uniform)?;
        let a = grid::build_matrix_ddim(&spec)?;
        return Ok(dense_loss(&a, b_state, psi));
    }
    let mut rng = ItemRng::new(mode);

    let mut term_b_a = Complex64::ZERO;
    let mut overlap_items = Vec::new();
    for (coeff, label) in decompose_a_ddim(m, dim).terms {
        let op = make_term(label, m, dim)?;
        let value = overlap_b_g_psi(b_state, psi, op, rng.next_mode(), backend)?;
        term_b_a += coeff * value;
        overlap_items.push(LossItem {
            description: label.name(),
            coefficient: coeff,
            value,
        });
    }

    let expansion = expand_a2_ddim(m, dim);
    let mut a2 = Complex64::new(expansion.constant, 0.0);
    let mut expectation_items = Vec::new();
    for (coeff, left, right) in expansion.products {
        let left_op = make_term(left, m, dim)?;
        let right_op = make_term(right, m, dim)?;
        let value = expectation_psi_gg_psi(psi, left_op, right_op, rng.next_mode(), backend)?;
        a2 += coeff * value;
        expectation_items.push(LossItem {
            description: format!("{}*{}", left.name(), right.name()),
            coefficient: coeff,
            value,
        });
    }

    Ok(LossReport {
        loss: a2.re - term_b_a.norm_sqr(),
        term_a2: a2.re,
        term_a2_imag: a2.im,
        term_b_a,
        overlap_items,
        expectation_items,
    })
}
