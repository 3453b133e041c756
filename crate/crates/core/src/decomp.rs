//! Decomposition of `σx ⊗ A` and `σx ⊗ A²` into Hermitian, one-sparse,
//! self-inverse signed-permutation operators.
//!
//! Every term is a signed permutation in involution form: a permutation π
//! with π∘π = id and signs s(x) ∈ {±1} with s(π(x)) = s(x). The matrix
//! `M[π(x)][x] = s(x)` is then simultaneously Hermitian and self-inverse.
//! Terms are never stored as maps; the permutation and sign are computed on
//! demand from the label by bit manipulation, so width-N operators cost O(1)
//! memory. Dense materialization exists only as a testing oracle.
//!
//! Bit convention: q₀ is least significant, the basis index is
//! g = Σ qᵢ·2^i, and the σx qubit is the most significant bit (index N).

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("label {0:?} is not valid for m={1}, dim={2}")]
    InconsistentLabel(TermLabel, usize, usize),
    #[error("width {0} exceeds the dense materialization guard of {MAX_DENSE_WIDTH} qubits")]
    WidthGuard(usize),
}

/// Dense materialization is a testing oracle only; wider operators stay
/// implicit.
pub const MAX_DENSE_WIDTH: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Label of a decomposition term.
///
/// The 1D family acts on m+1 qubits; the d-dimensional family on m·dim+1.
/// `t` selects the axis whose m-qubit block the operator shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermLabel {
    /// Flip of the σx qubit, all signs +1.
    G0,
    /// Like G0 but with sign −1 when the low m bits are all 0.
    G0FMinus,
    /// Like G0 but with sign −1 when the low m bits are all 1.
    G0LMinus,
    /// g ↦ g+2^m+1 on the lower half (diagonal ± at g = 2^m−1 and g = 2^m).
    GPlus1(Sign),
    /// g ↦ g+2^m−1 on the lower half (diagonal ± at g = 0 and g = 2^{m+1}−1).
    GMinus1(Sign),
    /// g ↦ g+2^m+2 on the lower half (diagonal ± on the four middle indices).
    GPlus2(Sign),
    /// g ↦ g+2^m−2 on the lower half (diagonal ± on the four outer indices).
    GMinus2(Sign),
    /// Flip of the end qubits q_m, q₀ with sign ± when q_{m−1}…q₁ are all 0.
    G1F(Sign),
    /// Flip of the end qubits q_m, q₀ with sign ± when q_{m−1}…q₁ are all 1.
    G1L(Sign),
    /// d-dimensional analogue of G0: flip of the σx qubit q_{md}.
    Gd0,
    /// g ↦ g+2^{md}+2^{mt} driven by the axis-t block.
    GdPlus(usize, Sign),
    /// g ↦ g+2^{md}−2^{mt} driven by the axis-t block.
    GdMinus(usize, Sign),
}

impl TermLabel {
    /// True for labels of the d-dimensional family.
    pub fn is_ddim(&self) -> bool {
        matches!(
            self,
            TermLabel::Gd0 | TermLabel::GdPlus(..) | TermLabel::GdMinus(..)
        )
    }

    /// Compact text form for reports and CSV tables.
    pub fn name(&self) -> String {
        fn pm(s: Sign) -> &'static str {
            match s {
                Sign::Plus => "+",
                Sign::Minus => "-",
            }
        }
        match self {
            TermLabel::G0 => "G0".into(),
            TermLabel::G0FMinus => "G0f-".into(),
            TermLabel::G0LMinus => "G0l-".into(),
            TermLabel::GPlus1(s) => format!("G+1{}", pm(*s)),
            TermLabel::GMinus1(s) => format!("G-1{}", pm(*s)),
            TermLabel::GPlus2(s) => format!("G+2{}", pm(*s)),
            TermLabel::GMinus2(s) => format!("G-2{}", pm(*s)),
            TermLabel::G1F(s) => format!("G1f{}", pm(*s)),
            TermLabel::G1L(s) => format!("G1l{}", pm(*s)),
            TermLabel::Gd0 => "Gd0".into(),
            TermLabel::GdPlus(t, s) => format!("Gd+2^{}m{}", t, pm(*s)),
            TermLabel::GdMinus(t, s) => format!("Gd-2^{}m{}", t, pm(*s)),
        }
    }
}

/// A Hermitian, one-sparse, self-inverse operator described by its label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedPermutationOp {
    label: TermLabel,
    m: usize,
    dim: usize,
    width: usize,
}

/// Construct the operator for `label` on the register determined by
/// (m, dim): width m+1 for the 1D family, m·dim+1 for the d-dimensional one.
pub fn make_term(
    label: TermLabel,
    m: usize,
    dim: usize,
) -> Result<SignedPermutationOp, DecompError> {
    let consistent = match label {
        TermLabel::Gd0 => dim >= 2,
        TermLabel::GdPlus(t, _) | TermLabel::GdMinus(t, _) => dim >= 2 && t < dim,
        _ => dim == 1,
    };
    if m == 0 || !consistent {
        return Err(DecompError::InconsistentLabel(label, m, dim));
    }
    Ok(SignedPermutationOp {
        label,
        m,
        dim,
        width: m * dim + 1,
    })
}

impl SignedPermutationOp {
    pub fn label(&self) -> TermLabel {
        self.label
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits the operator acts on (N+1 including the σx qubit).
    pub fn width(&self) -> usize {
        self.width
    }

    /// Basis action: |x⟩ ↦ sign(x)·|perm(x)⟩.
    pub fn apply_basis(&self, x: usize) -> (usize, f64) {
        debug_assert!(x < 1usize << self.width);
        let m = self.m;
        let top = 1usize << (self.width - 1); // σx qubit
        let block_mask = (1usize << m) - 1;
        match self.label {
            TermLabel::G0 | TermLabel::Gd0 => (x ^ top, 1.0),
            TermLabel::G0FMinus => {
                let sign = if x & block_mask == 0 { -1.0 } else { 1.0 };
                (x ^ top, sign)
            }
            TermLabel::G0LMinus => {
                let sign = if x & block_mask == block_mask {
                    -1.0
                } else {
                    1.0
                };
                (x ^ top, sign)
            }
            TermLabel::G1F(s) => {
                // Middle bits q_{m−1}…q₁; for m=1 the condition is vacuous.
                let mid_mask = block_mask & !1;
                if x & mid_mask == 0 {
                    (x ^ top ^ 1, s.value())
                } else {
                    (x, 1.0)
                }
            }
            TermLabel::G1L(s) => {
                let mid_mask = block_mask & !1;
                if x & mid_mask == mid_mask {
                    (x ^ top ^ 1, s.value())
                } else {
                    (x, 1.0)
                }
            }
            TermLabel::GPlus1(s) => shift_action(x, top, 0, m, 1, false, s),
            TermLabel::GMinus1(s) => shift_action(x, top, 0, m, 1, true, s),
            TermLabel::GPlus2(s) => shift_action(x, top, 0, m, 2, false, s),
            TermLabel::GMinus2(s) => shift_action(x, top, 0, m, 2, true, s),
            TermLabel::GdPlus(t, s) => shift_action(x, top, m * t, m, 1, false, s),
            TermLabel::GdMinus(t, s) => shift_action(x, top, m * t, m, 1, true, s),
        }
    }

    /// The permutation component alone.
    pub fn perm(&self, x: usize) -> usize {
        self.apply_basis(x).0
    }

    /// The sign component alone.
    pub fn sign(&self, x: usize) -> f64 {
        self.apply_basis(x).1
    }
}

/// Common basis rule of the block-shift terms.
///
/// The operator flips the σx qubit and adds `step` to (minus-family:
/// subtracts `step` from) the m-bit block starting at `block_lo` when the σx
/// qubit is 0, and does the inverse on the upper half. Blocks that would
/// overflow are the ± diagonal fixed points.
fn shift_action(
    x: usize,
    top: usize,
    block_lo: usize,
    m: usize,
    step: usize,
    minus_family: bool,
    s: Sign,
) -> (usize, f64) {
    let block = (x >> block_lo) & ((1 << m) - 1);
    let max = (1usize << m) - 1;
    let upper = x & top != 0;
    // On the lower half the plus family increments the block, the minus
    // family decrements it; the upper half mirrors.
    let increment = upper == minus_family;
    let diagonal = if increment {
        block + step > max
    } else {
        block < step
    };
    if diagonal {
        return (x, s.value());
    }
    let new_block = if increment {
        block + step
    } else {
        block - step
    };
    let y = (x & !(((1usize << m) - 1) << block_lo) ^ top) | (new_block << block_lo);
    (y, 1.0)
}

/// A real linear combination of terms plus an identity contribution.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub m: usize,
    pub dim: usize,
    /// Width of every term (N+1).
    pub width: usize,
    pub terms: Vec<(f64, TermLabel)>,
    /// Coefficient of the identity; zero except for squared d-dim expansions.
    pub constant: f64,
}

impl Decomposition {
    /// Operators for all terms, in the fixed stored order.
    pub fn operators(&self) -> Vec<(f64, SignedPermutationOp)> {
        self.terms
            .iter()
            .map(|&(coeff, label)| {
                (
                    coeff,
                    make_term(label, self.m, self.dim).expect("labels validated at construction"),
                )
            })
            .collect()
    }
}

/// Ordered products of two distinct terms plus an identity contribution.
#[derive(Debug, Clone)]
pub struct ProductTermList {
    pub m: usize,
    pub dim: usize,
    pub width: usize,
    /// (coefficient, left, right); the operator product is left·right.
    pub products: Vec<(f64, TermLabel, TermLabel)>,
    pub constant: f64,
}

fn push_nonzero(terms: &mut Vec<(f64, TermLabel)>, coeff: f64, label: TermLabel) {
    if coeff != 0.0 {
        terms.push((coeff, label));
    }
}

/// Decomposition of σx⊗Â:
/// (2−(c+d_r)/2)·G0 + (c/2)·G0f− + (d_r/2)·G0l− − ½·(G₊₁⁺+G₊₁⁻+G₋₁⁺+G₋₁⁻).
///
/// Zero coefficients are dropped, so Dirichlet yields exactly 5 terms and the
/// general case at most 7.
pub fn decompose_a_1d(m: usize, c: f64, d_r: f64) -> Decomposition {
    let mut terms = Vec::with_capacity(7);
    push_nonzero(&mut terms, 2.0 - (c + d_r) / 2.0, TermLabel::G0);
    push_nonzero(&mut terms, c / 2.0, TermLabel::G0FMinus);
    push_nonzero(&mut terms, d_r / 2.0, TermLabel::G0LMinus);
    for label in [
        TermLabel::GPlus1(Sign::Plus),
        TermLabel::GPlus1(Sign::Minus),
        TermLabel::GMinus1(Sign::Plus),
        TermLabel::GMinus1(Sign::Minus),
    ] {
        terms.push((-0.5, label));
    }
    Decomposition {
        m,
        dim: 1,
        width: m + 1,
        terms,
        constant: 0.0,
    }
}

/// Decomposition of σx⊗Â² exploiting the four-sparse structure of Â²:
/// at most 15 terms, 11 for Dirichlet.
pub fn decompose_a2_1d(m: usize, c: f64, d_r: f64) -> Decomposition {
    let mut terms = Vec::with_capacity(15);
    push_nonzero(
        &mut terms,
        5.0 + (c * c + d_r * d_r) / 2.0 - 2.0 * c - 2.0 * d_r,
        TermLabel::G0,
    );
    push_nonzero(
        &mut terms,
        (4.0 * c + 1.0 - c * c) / 2.0,
        TermLabel::G0FMinus,
    );
    push_nonzero(
        &mut terms,
        (4.0 * d_r + 1.0 - d_r * d_r) / 2.0,
        TermLabel::G0LMinus,
    );
    push_nonzero(&mut terms, c / 2.0, TermLabel::G1F(Sign::Plus));
    push_nonzero(&mut terms, -c / 2.0, TermLabel::G1F(Sign::Minus));
    push_nonzero(&mut terms, d_r / 2.0, TermLabel::G1L(Sign::Plus));
    push_nonzero(&mut terms, -d_r / 2.0, TermLabel::G1L(Sign::Minus));
    for label in [
        TermLabel::GPlus1(Sign::Plus),
        TermLabel::GPlus1(Sign::Minus),
        TermLabel::GMinus1(Sign::Plus),
        TermLabel::GMinus1(Sign::Minus),
    ] {
        terms.push((-2.0, label));
    }
    for label in [
        TermLabel::GPlus2(Sign::Plus),
        TermLabel::GPlus2(Sign::Minus),
        TermLabel::GMinus2(Sign::Plus),
        TermLabel::GMinus2(Sign::Minus),
    ] {
        terms.push((0.5, label));
    }
    Decomposition {
        m,
        dim: 1,
        width: m + 1,
        terms,
        constant: 0.0,
    }
}

/// The fixed-order source set S of the d-dimensional shift terms.
fn ddim_shift_labels(dim: usize) -> Vec<TermLabel> {
    let mut labels = Vec::with_capacity(4 * dim);
    for t in 0..dim {
        labels.push(TermLabel::GdPlus(t, Sign::Plus));
        labels.push(TermLabel::GdPlus(t, Sign::Minus));
        labels.push(TermLabel::GdMinus(t, Sign::Plus));
        labels.push(TermLabel::GdMinus(t, Sign::Minus));
    }
    labels
}

/// Decomposition of σx⊗A^(d): 2d·Gd0 − ½·Σ_t(shift terms); exactly 4d+1 terms.
pub fn decompose_a_ddim(m: usize, dim: usize) -> Decomposition {
    assert!(dim >= 2, "use decompose_a_1d for dim == 1");
    let mut terms = Vec::with_capacity(4 * dim + 1);
    terms.push((2.0 * dim as f64, TermLabel::Gd0));
    for label in ddim_shift_labels(dim) {
        terms.push((-0.5, label));
    }
    Decomposition {
        m,
        dim,
        width: m * dim + 1,
        terms,
        constant: 0.0,
    }
}

/// Expansion of (σx⊗A^(d))² as identity constant + products of distinct
/// terms: constant 4d²+d, the Gd0 cross products with coefficient −d in both
/// orders, and ¼ on every ordered pair of distinct shift terms. Total product
/// count (4d+1)²−(4d+1).
pub fn expand_a2_ddim(m: usize, dim: usize) -> ProductTermList {
    assert!(dim >= 2, "use decompose_a2_1d for dim == 1");
    let d = dim as f64;
    let shifts = ddim_shift_labels(dim);
    let mut products = Vec::with_capacity((4 * dim + 1) * 4 * dim);
    for &g in &shifts {
        products.push((-d, TermLabel::Gd0, g));
        products.push((-d, g, TermLabel::Gd0));
    }
    for &g in &shifts {
        for &g2 in &shifts {
            if g != g2 {
                products.push((0.25, g, g2));
            }
        }
    }
    ProductTermList {
        m,
        dim,
        width: m * dim + 1,
        products,
        constant: 4.0 * d * d + d,
    }
}

fn check_dense_width(width: usize) -> Result<usize, DecompError> {
    if width > MAX_DENSE_WIDTH {
        Err(DecompError::WidthGuard(width))
    } else {
        Ok(1usize << width)
    }
}

/// Dense matrix of a single term (testing oracle).
pub fn materialize_term(op: &SignedPermutationOp) -> Result<DMatrix<f64>, DecompError> {
    let size = check_dense_width(op.width())?;
    let mut mat = DMatrix::zeros(size, size);
    for x in 0..size {
        let (y, s) = op.apply_basis(x);
        mat[(y, x)] = s;
    }
    Ok(mat)
}

/// Dense sum Σ coeff·term + constant·I (testing oracle).
pub fn materialize_decomposition(dec: &Decomposition) -> Result<DMatrix<f64>, DecompError> {
    let size = check_dense_width(dec.width)?;
    let mut mat = DMatrix::from_diagonal_element(size, size, dec.constant);
    for (coeff, op) in dec.operators() {
        for x in 0..size {
            let (y, s) = op.apply_basis(x);
            mat[(y, x)] += coeff * s;
        }
    }
    Ok(mat)
}

/// Dense sum Σ coeff·left·right + constant·I (testing oracle).
pub fn materialize_products(list: &ProductTermList) -> Result<DMatrix<f64>, DecompError> {
    let size = check_dense_width(list.width)?;
    let mut mat = DMatrix::from_diagonal_element(size, size, list.constant);
    for &(coeff, left, right) in &list.products {
        let left = make_term(left, list.m, list.dim).expect("labels validated at construction");
        let right = make_term(right, list.m, list.dim).expect("labels validated at construction");
        for x in 0..size {
            // left·right acting on |x⟩: apply right first.
            let (mid, s1) = right.apply_basis(x);
            let (y, s2) = left.apply_basis(mid);
            mat[(y, x)] += coeff * s1 * s2;
        }
    }
    Ok(mat)
}

/// Report of the three defining properties of a decomposition term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermPropertyReport {
    pub hermitian: bool,
    pub self_inverse: bool,
    pub one_sparse: bool,
}

impl TermPropertyReport {
    pub fn all_hold(&self) -> bool {
        self.hermitian && self.self_inverse && self.one_sparse
    }
}

/// Exact property check of an arbitrary (perm, sign) action over all basis
/// indices of `width` qubits. Generic over the action so corrupted variants
/// can be checked as negative controls.
pub fn verify_permutation_properties(
    width: usize,
    perm: impl Fn(usize) -> usize,
    sign: impl Fn(usize) -> f64,
) -> TermPropertyReport {
    let size = 1usize << width;
    let mut seen = vec![false; size];
    let mut one_sparse = true;
    let mut hermitian = true;
    let mut self_inverse = true;
    for x in 0..size {
        let y = perm(x);
        let (sx, sy) = (sign(x), sign(y));
        if y >= size || seen[y] || (sx != 1.0 && sx != -1.0) {
            one_sparse = false;
        } else {
            seen[y] = true;
        }
        // M = Mᵀ over real entries ⇔ perm(perm(x)) = x and sign(perm(x)) = sign(x).
        if y < size && (perm(y) != x || sy != sx) {
            hermitian = false;
        }
        // M² = I ⇔ perm(perm(x)) = x and sign(x)·sign(perm(x)) = 1.
        if y < size && (perm(y) != x || sx * sy != 1.0) {
            self_inverse = false;
        }
    }
    TermPropertyReport {
        hermitian,
        self_inverse,
        one_sparse,
    }
}

/// Property check of a constructed term.
pub fn verify_term_properties(op: &SignedPermutationOp) -> TermPropertyReport {
    verify_permutation_properties(op.width(), |x| op.perm(x), |x| op.sign(x))
}

/// All labels defined for a register configuration, used by verification
/// sweeps. `dim == 1` yields the 15 one-dimensional labels; `dim >= 2` the
/// 4·dim+1 d-dimensional ones.
pub fn all_labels(dim: usize) -> Vec<TermLabel> {
    if dim == 1 {
        let mut labels = vec![TermLabel::G0, TermLabel::G0FMinus, TermLabel::G0LMinus];
        for sign in [Sign::Plus, Sign::Minus] {
            labels.push(TermLabel::GPlus1(sign));
            labels.push(TermLabel::GMinus1(sign));
            labels.push(TermLabel::GPlus2(sign));
            labels.push(TermLabel::GMinus2(sign));
            labels.push(TermLabel::G1F(sign));
            labels.push(TermLabel::G1L(sign));
        }
        labels
    } else {
        let mut labels = vec![TermLabel::Gd0];
        labels.extend(ddim_shift_labels(dim));
        labels
    }
}
