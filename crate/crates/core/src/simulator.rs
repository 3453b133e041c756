//! Minimal statevector simulator with the gate set needed by the term query
//! circuits and the Hadamard tests, plus direct signed-permutation
//! application for cross-validation.
//!
//! Multi-controlled X gates are simulated natively, not lowered to
//! Toffolis. The −1 phase of the minus-variant terms is a Z flip on the
//! phase ancilla.

use crate::decomp::{SignedPermutationOp, TermLabel};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("qubit index {0} out of range for width {1}")]
    QubitOutOfRange(usize, usize),
    #[error("injected state must have {expected} amplitudes, got {got}")]
    InjectLength { expected: usize, got: usize },
    #[error("injected state has norm {0}, expected 1")]
    InjectNorm(f64),
    #[error("state width {state} incompatible with operator width {op}")]
    WidthMismatch { state: usize, op: usize },
    #[error("control qubit {0} overlaps the operand register of width {1}")]
    ControlOverlap(usize, usize),
    #[error("unitary extraction guarded to {max} qubits, circuit needs {got}")]
    UnitaryGuard { max: usize, got: usize },
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Complex amplitudes over the 2^width computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    width: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `width` qubits.
    pub fn zeros(width: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << width];
        amps[0] = Complex64::ONE;
        StateVector { width, amps }
    }

    /// |+⟩^⊗width.
    pub fn plus(width: usize) -> Self {
        let size = 1usize << width;
        let amp = Complex64::new((size as f64).sqrt().recip(), 0.0);
        StateVector {
            width,
            amps: vec![amp; size],
        }
    }

    /// Inject an explicit unit-norm amplitude vector.
    pub fn inject(width: usize, amps: &[Complex64]) -> Result<Self, SimError> {
        let size = 1usize << width;
        if amps.len() != size {
            return Err(SimError::InjectLength {
                expected: size,
                got: amps.len(),
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::InjectNorm(norm));
        }
        Ok(StateVector {
            width,
            amps: amps.to_vec(),
        })
    }

    /// Inject a real unit vector.
    pub fn inject_real(width: usize, values: &[f64]) -> Result<Self, SimError> {
        let amps: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::inject(width, &amps)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.width, other.width);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability of measuring `value` on `qubit`.
    pub fn probability(&self, qubit: usize, value: bool) -> f64 {
        let bit = 1usize << qubit;
        self.amps
            .iter()
            .enumerate()
            .filter(|(x, _)| (x & bit != 0) == value)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Tensor `self` (low qubits) with extra |0⟩ qubits on top.
    pub fn extend_with_zeros(&self, extra: usize) -> StateVector {
        let width = self.width + extra;
        let mut amps = vec![Complex64::ZERO; 1 << width];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        StateVector { width, amps }
    }

    /// |+⟩ ⊗ self, the +-extended register with the σx qubit on top.
    pub fn with_plus_top(&self) -> StateVector {
        let width = self.width + 1;
        let half = self.amps.len();
        let mut amps = vec![Complex64::ZERO; 2 * half];
        for (x, a) in self.amps.iter().enumerate() {
            let v = a * SQRT_HALF;
            amps[x] = v;
            amps[x + half] = v;
        }
        StateVector { width, amps }
    }

    pub fn apply(&mut self, gate: &Gate) {
        self.apply_masked(gate, 0, 0);
    }

    pub fn apply_all(&mut self, gates: &[Gate]) {
        for gate in gates {
            self.apply(gate);
        }
    }

    /// Apply `gate` restricted to basis states x with x & mask == want.
    fn apply_masked(&mut self, gate: &Gate, mask: usize, want: usize) {
        match gate {
            Gate::H(q) => {
                let bit = 1usize << q;
                for x in self.masked_indices_without(mask, want, bit) {
                    let (a, b) = (self.amps[x], self.amps[x | bit]);
                    self.amps[x] = (a + b) * SQRT_HALF;
                    self.amps[x | bit] = (a - b) * SQRT_HALF;
                }
            }
            Gate::X(q) => {
                let bit = 1usize << q;
                for x in self.masked_indices_without(mask, want, bit) {
                    self.amps.swap(x, x | bit);
                }
            }
            Gate::Z(q) => {
                let bit = 1usize << q;
                for x in 0..self.amps.len() {
                    if x & mask == want && x & bit != 0 {
                        self.amps[x] = -self.amps[x];
                    }
                }
            }
            Gate::Sdg(q) => {
                let bit = 1usize << q;
                let phase = Complex64::new(0.0, -1.0);
                for x in 0..self.amps.len() {
                    if x & mask == want && x & bit != 0 {
                        self.amps[x] *= phase;
                    }
                }
            }
            Gate::Rz(q, theta) => {
                let bit = 1usize << q;
                let lo = Complex64::from_polar(1.0, -theta / 2.0);
                let hi = Complex64::from_polar(1.0, theta / 2.0);
                for x in 0..self.amps.len() {
                    if x & mask == want {
                        self.amps[x] *= if x & bit != 0 { hi } else { lo };
                    }
                }
            }
            Gate::Rx(q, theta) => {
                let bit = 1usize << q;
                let cos = Complex64::new((theta / 2.0).cos(), 0.0);
                let misin = Complex64::new(0.0, -(theta / 2.0).sin());
                for x in self.masked_indices_without(mask, want, bit) {
                    let (a, b) = (self.amps[x], self.amps[x | bit]);
                    self.amps[x] = cos * a + misin * b;
                    self.amps[x | bit] = misin * a + cos * b;
                }
            }
            Gate::Rzz(a, b, theta) => {
                let (ba, bb) = (1usize << a, 1usize << b);
                let same = Complex64::from_polar(1.0, -theta / 2.0);
                let diff = Complex64::from_polar(1.0, theta / 2.0);
                for x in 0..self.amps.len() {
                    if x & mask == want {
                        let parity = (x & ba != 0) != (x & bb != 0);
                        self.amps[x] *= if parity { diff } else { same };
                    }
                }
            }
            Gate::Ryy(a, b, theta) => {
                // Y⊗Y is the antidiagonal (−1,1,1,−1) on each 2-qubit slice;
                // exp(−iθ/2·YY) mixes |00⟩↔|11⟩ and |01⟩↔|10⟩.
                let (ba, bb) = (1usize << a, 1usize << b);
                let cos = Complex64::new((theta / 2.0).cos(), 0.0);
                let isin = Complex64::new(0.0, (theta / 2.0).sin());
                for x in self.masked_indices_without(mask, want, ba | bb) {
                    let (x00, x01, x10, x11) = (x, x | ba, x | bb, x | ba | bb);
                    let (a00, a01, a10, a11) = (
                        self.amps[x00],
                        self.amps[x01],
                        self.amps[x10],
                        self.amps[x11],
                    );
                    self.amps[x00] = cos * a00 + isin * a11;
                    self.amps[x11] = cos * a11 + isin * a00;
                    self.amps[x01] = cos * a01 - isin * a10;
                    self.amps[x10] = cos * a10 - isin * a01;
                }
            }
            Gate::Mcx { controls, target } => {
                let bit = 1usize << target;
                let mut ones = 0usize;
                let mut ctrl_mask = 0usize;
                for &(q, polarity) in controls {
                    ctrl_mask |= 1 << q;
                    if polarity {
                        ones |= 1 << q;
                    }
                }
                for x in self.masked_indices_without(mask | ctrl_mask, want | ones, bit) {
                    self.amps.swap(x, x | bit);
                }
            }
            Gate::Swap(a, b) => {
                let (ba, bb) = (1usize << a, 1usize << b);
                for x in self.masked_indices_without(mask, want, ba | bb) {
                    self.amps.swap(x | ba, x | bb);
                }
            }
            Gate::Controlled { control, gates } => {
                let cbit = 1usize << control;
                for gate in gates {
                    self.apply_masked(gate, mask | cbit, want | cbit);
                }
            }
        }
    }

    /// Indices x with x & mask == want and all bits of `clear` zero.
    fn masked_indices_without(
        &self,
        mask: usize,
        want: usize,
        clear: usize,
    ) -> impl Iterator<Item = usize> {
        let len = self.amps.len();
        (0..len).filter(move |x| x & mask == want && x & clear == 0)
    }

    /// Controlled state preparation on the low `target.width()` qubits: on
    /// the control=1 subspace apply a unitary W with W|0…0⟩ = |φ⟩ (or W†
    /// when `dagger`). W is completed as a phase-adjusted reflection
    /// e^{iα}(I − 2|v⟩⟨v|) with v ∝ |0⟩ − e^{−iα}|φ⟩; any completion yields
    /// the same Hadamard-test statistics, which depend only on ⟨0|Ũ|0⟩.
    pub fn apply_controlled_prepare(
        &mut self,
        control: usize,
        target: &StateVector,
        dagger: bool,
    ) -> Result<(), SimError> {
        let w = target.width();
        if control < w {
            return Err(SimError::ControlOverlap(control, w));
        }
        if control >= self.width || self.width < w {
            return Err(SimError::WidthMismatch {
                state: self.width,
                op: w + 1,
            });
        }
        let size = 1usize << w;
        let alpha = if target.amps[0].norm() > 0.0 {
            target.amps[0].arg()
        } else {
            0.0
        };
        let phase = Complex64::from_polar(1.0, if dagger { -alpha } else { alpha });
        let rot = Complex64::from_polar(1.0, -alpha);
        // v = (|0⟩ − e^{−iα}φ) before normalization.
        let mut v: Vec<Complex64> = target.amps.iter().map(|a| -(rot * a)).collect();
        v[0] += Complex64::ONE;
        let v_norm_sqr: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        let reflect = v_norm_sqr > 1e-30;
        if reflect {
            let inv = v_norm_sqr.sqrt().recip();
            for a in &mut v {
                *a *= inv;
            }
        }
        let cbit = 1usize << control;
        for high in 0..(self.amps.len() >> w) {
            if (high << w) & cbit == 0 {
                continue;
            }
            let base = high << w;
            let block = &mut self.amps[base..base + size];
            if reflect {
                let overlap: Complex64 = v
                    .iter()
                    .zip(block.iter())
                    .map(|(vi, ui)| vi.conj() * *ui)
                    .sum();
                for (ui, vi) in block.iter_mut().zip(&v) {
                    *ui = phase * (*ui - 2.0 * overlap * vi);
                }
            } else {
                // φ is |0…0⟩ up to a phase: W = diag(e^{iα}, 1, …, 1).
                block[0] *= phase;
            }
        }
        Ok(())
    }

    /// Apply a signed-permutation term directly on the low qubits: amplitudes
    /// are permuted with sign multiplication, no gate synthesis.
    pub fn apply_term_direct(&mut self, op: &SignedPermutationOp) -> Result<(), SimError> {
        self.apply_term_where(op, None)
    }

    /// Controlled direct application: acts only where `control` = 1. The
    /// control must lie outside the operand register.
    pub fn apply_term_controlled(
        &mut self,
        op: &SignedPermutationOp,
        control: usize,
    ) -> Result<(), SimError> {
        if control < op.width() {
            return Err(SimError::ControlOverlap(control, op.width()));
        }
        if control >= self.width {
            return Err(SimError::QubitOutOfRange(control, self.width));
        }
        self.apply_term_where(op, Some(control))
    }

    fn apply_term_where(
        &mut self,
        op: &SignedPermutationOp,
        control: Option<usize>,
    ) -> Result<(), SimError> {
        let w = op.width();
        if self.width < w {
            return Err(SimError::WidthMismatch {
                state: self.width,
                op: w,
            });
        }
        let size = 1usize << w;
        let cbit = control.map(|c| 1usize << c);
        for high in 0..(self.amps.len() >> w) {
            if let Some(cb) = cbit {
                if (high << w) & cb == 0 {
                    continue;
                }
            }
            let base = high << w;
            // The permutation is an involution: visit each orbit once.
            for x in 0..size {
                let (y, s) = op.apply_basis(x);
                if y < x {
                    continue;
                }
                if y == x {
                    self.amps[base + x] *= s;
                } else {
                    // sign(perm(x)) = sign(x), so both directions carry s.
                    self.amps.swap(base + x, base + y);
                    self.amps[base + x] *= s;
                    self.amps[base + y] *= s;
                }
            }
        }
        Ok(())
    }
}

/// Control with polarity: (qubit, true) fires on |1⟩, (qubit, false) on |0⟩.
pub type Control = (usize, bool);

/// Gate set of the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    /// S† = diag(1, −i), used by the imaginary-part Hadamard test.
    Sdg(usize),
    Rz(usize, f64),
    Rx(usize, f64),
    /// exp(−iθ/2 · Z⊗Z).
    Rzz(usize, usize, f64),
    /// exp(−iθ/2 · Y⊗Y).
    Ryy(usize, usize, f64),
    Mcx {
        controls: Vec<Control>,
        target: usize,
    },
    Swap(usize, usize),
    Controlled {
        control: usize,
        gates: Vec<Gate>,
    },
}

impl Gate {
    /// Single positively-controlled X.
    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::Mcx {
            controls: vec![(control, true)],
            target,
        }
    }

    /// The same gate with one more positive control.
    pub fn with_control(&self, control: usize) -> Gate {
        match self {
            Gate::X(t) => Gate::cx(control, *t),
            Gate::Mcx { controls, target } => {
                let mut controls = controls.clone();
                controls.push((control, true));
                Gate::Mcx {
                    controls,
                    target: *target,
                }
            }
            Gate::Controlled {
                control: inner,
                gates,
            } => Gate::Controlled {
                control,
                gates: vec![Gate::Controlled {
                    control: *inner,
                    gates: gates.clone(),
                }],
            },
            other => Gate::Controlled {
                control,
                gates: vec![other.clone()],
            },
        }
    }

    /// Largest qubit index touched.
    pub fn max_qubit(&self) -> usize {
        match self {
            Gate::H(q)
            | Gate::X(q)
            | Gate::Z(q)
            | Gate::Sdg(q)
            | Gate::Rz(q, _)
            | Gate::Rx(q, _) => *q,
            Gate::Rzz(a, b, _) | Gate::Ryy(a, b, _) | Gate::Swap(a, b) => (*a).max(*b),
            Gate::Mcx { controls, target } => controls
                .iter()
                .map(|&(q, _)| q)
                .chain(std::iter::once(*target))
                .max()
                .unwrap_or(*target),
            Gate::Controlled { control, gates } => gates
                .iter()
                .map(|g| g.max_qubit())
                .chain(std::iter::once(*control))
                .max()
                .unwrap_or(*control),
        }
    }
}

/// Qubit bookkeeping of a synthesized term circuit.
///
/// The main register (solution qubits plus the σx qubit) always occupies
/// qubits 0..main_width. The index ancilla register mirrors the m-qubit block
/// the term shifts plus the σx qubit; the phase ancilla flags the −1 entries
/// (and the diagonal fixed points of the shift terms).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitLayout {
    /// N+1 qubits: solution register and the σx qubit on top of it.
    pub main_width: usize,
    /// First qubit of the index ancilla register, if present.
    pub index_start: Option<usize>,
    /// Width of the index ancilla register (m+1 when present).
    pub index_width: usize,
    /// Phase ancilla qubit, if present.
    pub phase: Option<usize>,
    /// Total qubits including ancillas.
    pub total_width: usize,
}

impl CircuitLayout {
    pub fn ancilla_count(&self) -> usize {
        self.total_width - self.main_width
    }
}

/// A synthesized query circuit in compute / middle / uncompute form.
///
/// `compute` writes the target index and sign flag into the ancillas,
/// `middle` carries the phase flip and the main↔index swaps, and `uncompute`
/// is the reversed compute stage. Because the permutation is an involution
/// and the sign is involution-symmetric, the reversed compute stage restores
/// both ancilla registers to |0…0⟩. A controlled query only needs to control
/// the middle stage: with the middle off, compute and uncompute cancel.
#[derive(Debug, Clone)]
pub struct TermCircuit {
    pub layout: CircuitLayout,
    compute: Vec<Gate>,
    middle: Vec<Gate>,
    uncompute: Vec<Gate>,
}

impl TermCircuit {
    /// Full gate list of the uncontrolled query.
    pub fn gates(&self) -> Vec<Gate> {
        let mut gates = self.compute.clone();
        gates.extend(self.middle.iter().cloned());
        gates.extend(self.uncompute.iter().cloned());
        gates
    }

    /// Gate list with only the middle stage controlled.
    pub fn controlled_gates(&self, control: usize) -> Vec<Gate> {
        let mut gates = self.compute.clone();
        gates.extend(self.middle.iter().map(|g| g.with_control(control)));
        gates.extend(self.uncompute.iter().cloned());
        gates
    }

    /// Gate list with every stage controlled.
    pub fn fully_controlled_gates(&self, control: usize) -> Vec<Gate> {
        self.gates()
            .iter()
            .map(|g| g.with_control(control))
            .collect()
    }

    pub fn gate_count(&self) -> usize {
        self.compute.len() + self.middle.len() + self.uncompute.len()
    }
}

/// Gate list mapping |g⟩ → |g+1 mod 2^width⟩ on `register` (cascaded
/// multi-controlled X, most significant bit first).
pub fn binary_increment_circuit(register: &[usize]) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(register.len());
    for k in (1..register.len()).rev() {
        let controls: Vec<Control> = register[..k].iter().map(|&q| (q, true)).collect();
        gates.push(Gate::Mcx {
            controls,
            target: register[k],
        });
    }
    if !register.is_empty() {
        gates.push(Gate::X(register[0]));
    }
    gates
}

/// Synthesize the query circuit for a term.
///
/// The circuit acts on (main ⊗ |0⟩_index ⊗ |0⟩_phase) exactly as the direct
/// signed-permutation action on main, with both ancilla registers restored.
pub fn synthesize_term_circuit(op: &SignedPermutationOp) -> TermCircuit {
    let m = op.m();
    let main_width = op.width();
    let top = main_width - 1; // σx qubit
    let block_mask_bits = |start: usize| -> Vec<usize> { (start..start + m).collect() };

    match op.label() {
        TermLabel::G0 | TermLabel::Gd0 => TermCircuit {
            layout: CircuitLayout {
                main_width,
                index_start: None,
                index_width: 0,
                phase: None,
                total_width: main_width,
            },
            compute: vec![],
            middle: vec![Gate::X(top)],
            uncompute: vec![],
        },
        TermLabel::G0FMinus | TermLabel::G0LMinus => {
            let phase = main_width;
            // −1 on the all-zero (f) or all-one (l) low register.
            let polarity = op.label() == TermLabel::G0LMinus;
            let controls: Vec<Control> = (0..m).map(|q| (q, polarity)).collect();
            let detect = Gate::Mcx {
                controls,
                target: phase,
            };
            TermCircuit {
                layout: CircuitLayout {
                    main_width,
                    index_start: None,
                    index_width: 0,
                    phase: Some(phase),
                    total_width: main_width + 1,
                },
                compute: vec![detect.clone()],
                middle: vec![Gate::Z(phase), Gate::X(top)],
                uncompute: vec![detect],
            }
        }
        TermLabel::G1F(sign) | TermLabel::G1L(sign) => {
            let phase = main_width;
            let polarity = matches!(op.label(), TermLabel::G1L(_));
            // Condition lives on the middle qubits q_{m−1}…q₁.
            let controls: Vec<Control> = (1..m).map(|q| (q, polarity)).collect();
            let detect = if controls.is_empty() {
                Gate::X(phase)
            } else {
                Gate::Mcx {
                    controls,
                    target: phase,
                }
            };
            let mut middle = vec![Gate::cx(phase, top), Gate::cx(phase, 0)];
            if sign == crate::decomp::Sign::Minus {
                middle.push(Gate::Z(phase));
            }
            TermCircuit {
                layout: CircuitLayout {
                    main_width,
                    index_start: None,
                    index_width: 0,
                    phase: Some(phase),
                    total_width: main_width + 1,
                },
                compute: vec![detect.clone()],
                middle,
                uncompute: vec![detect],
            }
        }
        TermLabel::GPlus1(sign)
        | TermLabel::GMinus1(sign)
        | TermLabel::GPlus2(sign)
        | TermLabel::GMinus2(sign)
        | TermLabel::GdPlus(_, sign)
        | TermLabel::GdMinus(_, sign) => {
            let (block_lo, minus_family, step) = match op.label() {
                TermLabel::GPlus1(_) => (0, false, 1),
                TermLabel::GMinus1(_) => (0, true, 1),
                TermLabel::GPlus2(_) => (0, false, 2),
                TermLabel::GMinus2(_) => (0, true, 2),
                TermLabel::GdPlus(t, _) => (m * t, false, 1),
                TermLabel::GdMinus(t, _) => (m * t, true, 1),
                _ => unreachable!(),
            };
            let index_start = main_width;
            let phase = index_start + m + 1;
            let block = block_mask_bits(block_lo);
            let a_block: Vec<usize> = (index_start..index_start + m).collect();
            let a_top = index_start + m;

            let mut compute = Vec::new();
            // Copy the touched qubits into the index register.
            for (&src, &dst) in block.iter().zip(&a_block) {
                compute.push(Gate::cx(src, dst));
            }
            compute.push(Gate::cx(top, a_top));
            // Conjugate the block so both halves share one rule: the plus
            // family flips it on the upper half, the minus family on the
            // lower half.
            let conj_polarity = !minus_family;
            for &q in &a_block {
                compute.push(Gate::Mcx {
                    controls: vec![(a_top, conj_polarity)],
                    target: q,
                });
            }
            // Diagonal fixed points now show as the conjugated block landing
            // in the top `step` values: detect on the m−(step−1) high bits.
            let detect_controls: Vec<Control> =
                a_block[(step - 1)..m].iter().map(|&q| (q, true)).collect();
            compute.push(if detect_controls.is_empty() {
                Gate::X(phase)
            } else {
                Gate::Mcx {
                    controls: detect_controls,
                    target: phase,
                }
            });
            // Off-diagonal action: add `step` to the conjugated block, gated
            // on the flag staying clear.
            for gate in binary_increment_circuit(&a_block[(step - 1)..m]) {
                compute.push(match gate {
                    Gate::X(t) => Gate::Mcx {
                        controls: vec![(phase, false)],
                        target: t,
                    },
                    Gate::Mcx {
                        mut controls,
                        target,
                    } => {
                        controls.push((phase, false));
                        Gate::Mcx { controls, target }
                    }
                    other => other,
                });
            }
            // Undo the conjugation and flip the mirrored σx qubit.
            for &q in &a_block {
                compute.push(Gate::Mcx {
                    controls: vec![(a_top, conj_polarity)],
                    target: q,
                });
            }
            compute.push(Gate::Mcx {
                controls: vec![(phase, false)],
                target: a_top,
            });

            let mut middle = Vec::new();
            if sign == crate::decomp::Sign::Minus {
                middle.push(Gate::Z(phase));
            }
            for (&src, &dst) in block.iter().zip(&a_block) {
                middle.push(Gate::Swap(src, dst));
            }
            middle.push(Gate::Swap(top, a_top));

            // Every compute gate is self-inverse, so the reversed list is
            // the exact inverse.
            let uncompute: Vec<Gate> = compute.iter().rev().cloned().collect();

            TermCircuit {
                layout: CircuitLayout {
                    main_width,
                    index_start: Some(index_start),
                    index_width: m + 1,
                    phase: Some(phase),
                    total_width: main_width + m + 2,
                },
                compute,
                middle,
                uncompute,
            }
        }
    }
}

/// Maximum width for dense unitary extraction.
pub const MAX_UNITARY_WIDTH: usize = 10;

/// Dense unitary of a gate list by column-by-column simulation (testing
/// oracle, guarded).
pub fn circuit_unitary(
    gates: &[Gate],
    width: usize,
) -> Result<nalgebra::DMatrix<Complex64>, SimError> {
    if width > MAX_UNITARY_WIDTH {
        return Err(SimError::UnitaryGuard {
            max: MAX_UNITARY_WIDTH,
            got: width,
        });
    }
    let size = 1usize << width;
    let mut unitary = nalgebra::DMatrix::zeros(size, size);
    for col in 0..size {
        let mut state = StateVector::zeros(width);
        state.amps[0] = Complex64::ZERO;
        state.amps[col] = Complex64::ONE;
        state.apply_all(gates);
        for row in 0..size {
            unitary[(row, col)] = state.amps[row];
        }
    }
    Ok(unitary)
}

/// Plain-text gate list, one gate per line: KIND target [controls] [angle].
pub fn format_gate_list(gates: &[Gate]) -> String {
    fn line(gate: &Gate, prefix: &str, out: &mut String) {
        match gate {
            Gate::H(q) => out.push_str(&format!("{prefix}H {q}\n")),
            Gate::X(q) => out.push_str(&format!("{prefix}X {q}\n")),
            Gate::Z(q) => out.push_str(&format!("{prefix}Z {q}\n")),
            Gate::Sdg(q) => out.push_str(&format!("{prefix}SDG {q}\n")),
            Gate::Rz(q, theta) => out.push_str(&format!("{prefix}RZ {q} {theta}\n")),
            Gate::Rx(q, theta) => out.push_str(&format!("{prefix}RX {q} {theta}\n")),
            Gate::Rzz(a, b, theta) => out.push_str(&format!("{prefix}RZZ {a} {b} {theta}\n")),
            Gate::Ryy(a, b, theta) => out.push_str(&format!("{prefix}RYY {a} {b} {theta}\n")),
            Gate::Swap(a, b) => out.push_str(&format!("{prefix}SWAP {a} {b}\n")),
            Gate::Mcx { controls, target } => {
                let ctrl: Vec<String> = controls
                    .iter()
                    .map(|&(q, p)| format!("{}{}", if p { '+' } else { '-' }, q))
                    .collect();
                out.push_str(&format!("{prefix}MCX {target} {}\n", ctrl.join(" ")));
            }
            Gate::Controlled { control, gates } => {
                for g in gates {
                    line(g, &format!("{prefix}CTRL +{control} "), out);
                }
            }
        }
    }
    let mut out = String::new();
    for gate in gates {
        line(gate, "", &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{all_labels, make_term, Sign};

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} != {b}");
    }

    #[test]
    fn prepare_zeros_and_plus() {
        let z = StateVector::zeros(1);
        assert_eq!(z.amps()[0], Complex64::ONE);
        assert_eq!(z.amps()[1], Complex64::ZERO);

        let p = StateVector::plus(2);
        for a in p.amps() {
            assert_close(*a, Complex64::new(0.5, 0.0), 1e-15);
        }
    }

    #[test]
    fn inject_requires_unit_norm() {
        let v = [Complex64::new(0.6, 0.0); 4];
        assert!(StateVector::inject(2, &v).is_err());
        let n = 26f64.sqrt();
        let ok = [2.0 / n, 3.0 / n, 3.0 / n, 2.0 / n].map(|x| Complex64::new(x, 0.0));
        let state = StateVector::inject(2, &ok).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_on_zero() {
        let mut state = StateVector::zeros(1);
        state.apply(&Gate::H(0));
        assert_close(state.amps()[0], Complex64::new(SQRT_HALF, 0.0), 1e-15);
        assert_close(state.amps()[1], Complex64::new(SQRT_HALF, 0.0), 1e-15);
    }

    #[test]
    fn mcx_flips_on_matching_controls() {
        // |011⟩ with controls q1=1, q0=1 flips q2.
        let mut state = StateVector::zeros(3);
        state.apply(&Gate::X(0));
        state.apply(&Gate::X(1));
        state.apply(&Gate::Mcx {
            controls: vec![(0, true), (1, true)],
            target: 2,
        });
        assert_close(state.amps()[0b111], Complex64::ONE, 1e-15);

        // Negative polarity: fires on |0⟩.
        let mut state = StateVector::zeros(2);
        state.apply(&Gate::Mcx {
            controls: vec![(0, false)],
            target: 1,
        });
        assert_close(state.amps()[0b10], Complex64::ONE, 1e-15);
    }

    #[test]
    fn rz_2pi_gives_minus_one() {
        let mut state = StateVector::zeros(1);
        state.apply(&Gate::X(0));
        state.apply(&Gate::Rz(0, 2.0 * std::f64::consts::PI));
        // e^{iπ} = −1 on |1⟩ up to the global convention.
        assert_close(state.amps()[1], Complex64::new(-1.0, 0.0), 1e-12);
    }

    #[test]
    fn z_on_phase_qubit_flips_flagged_branch() {
        let mut state = StateVector::plus(1);
        state.apply(&Gate::Z(0));
        assert_close(state.amps()[0], Complex64::new(SQRT_HALF, 0.0), 1e-15);
        assert_close(state.amps()[1], Complex64::new(-SQRT_HALF, 0.0), 1e-15);
    }

    #[test]
    fn norm_preserved_over_many_gates() {
        let mut state = StateVector::plus(4);
        for k in 0..1000 {
            let q = k % 4;
            state.apply(&Gate::H(q));
            state.apply(&Gate::Rx(q, 0.3 + k as f64 * 0.01));
            state.apply(&Gate::Rzz(q, (q + 1) % 4, 0.7));
            state.apply(&Gate::Ryy(q, (q + 1) % 4, 0.2));
        }
        assert!((state.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn term_direct_examples() {
        let op = make_term(TermLabel::G0, 2, 1).unwrap();
        let mut state = StateVector::zeros(3);
        state.apply(&Gate::X(0));
        state.apply_term_direct(&op).unwrap();
        assert_close(state.amps()[0b101], Complex64::ONE, 1e-15);

        let op = make_term(TermLabel::GMinus1(Sign::Minus), 2, 1).unwrap();
        let mut state = StateVector::zeros(3);
        state.apply(&Gate::X(0));
        state.apply_term_direct(&op).unwrap();
        assert_close(state.amps()[0b100], Complex64::ONE, 1e-15);
    }

    #[test]
    fn term_direct_is_self_inverse_on_random_state() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for label in all_labels(1) {
            let op = make_term(label, 3, 1).unwrap();
            let raw: Vec<Complex64> = (0..16)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let amps: Vec<Complex64> = raw.iter().map(|a| a / norm).collect();
            let state = StateVector::inject(4, &amps).unwrap();
            let mut twice = state.clone();
            twice.apply_term_direct(&op).unwrap();
            twice.apply_term_direct(&op).unwrap();
            for (a, b) in state.amps().iter().zip(twice.amps()) {
                assert_close(*a, *b, 1e-12);
            }
        }
    }

    #[test]
    fn increment_circuit_exhaustive() {
        for width in 1..=3 {
            let register: Vec<usize> = (0..width).collect();
            let gates = binary_increment_circuit(&register);
            for g in 0..(1usize << width) {
                let mut state = StateVector::zeros(width);
                if g != 0 {
                    for q in 0..width {
                        if g & (1 << q) != 0 {
                            state.apply(&Gate::X(q));
                        }
                    }
                }
                state.apply_all(&gates);
                let expect = (g + 1) % (1 << width);
                assert_close(state.amps()[expect], Complex64::ONE, 1e-12);
            }
        }
    }

    /// Circuit/direct equivalence over every basis input, checking both the
    /// main-register action and ancilla restoration.
    fn check_circuit_matches_direct(op: &SignedPermutationOp) {
        let circuit = synthesize_term_circuit(op);
        let total = circuit.layout.total_width;
        let main = op.width();
        let gates = circuit.gates();
        for x in 0..(1usize << main) {
            let mut state = StateVector::zeros(total);
            for q in 0..main {
                if x & (1 << q) != 0 {
                    state.apply(&Gate::X(q));
                }
            }
            state.apply_all(&gates);
            let (y, s) = op.apply_basis(x);
            for (idx, amp) in state.amps().iter().enumerate() {
                let expect = if idx == y {
                    Complex64::new(s, 0.0)
                } else {
                    Complex64::ZERO
                };
                assert!(
                    (amp - expect).norm() < 1e-10,
                    "label {:?} m={} input {x}: index {idx} got {amp}, want {expect}",
                    op.label(),
                    op.m()
                );
            }
        }
    }

    #[test]
    fn circuits_match_direct_action_1d() {
        for m in 1..=3 {
            for label in all_labels(1) {
                check_circuit_matches_direct(&make_term(label, m, 1).unwrap());
            }
        }
    }

    #[test]
    fn circuits_match_direct_action_ddim() {
        for label in all_labels(2) {
            check_circuit_matches_direct(&make_term(label, 1, 2).unwrap());
        }
        for label in all_labels(2) {
            check_circuit_matches_direct(&make_term(label, 2, 2).unwrap());
        }
    }

    #[test]
    fn plus_variant_differs_only_by_phase_gate() {
        let plus =
            synthesize_term_circuit(&make_term(TermLabel::GPlus1(Sign::Plus), 2, 1).unwrap());
        let minus =
            synthesize_term_circuit(&make_term(TermLabel::GPlus1(Sign::Minus), 2, 1).unwrap());
        let phase = minus.layout.phase.unwrap();
        let mut stripped = minus.gates();
        let pos = stripped.iter().position(|g| *g == Gate::Z(phase)).unwrap();
        stripped.remove(pos);
        assert_eq!(stripped, plus.gates());
    }

    #[test]
    fn ancilla_budget_is_m_plus_two() {
        for m in 1..=4 {
            for label in all_labels(1) {
                let circuit = synthesize_term_circuit(&make_term(label, m, 1).unwrap());
                assert!(circuit.layout.ancilla_count() <= m + 2);
            }
        }
        for label in all_labels(3) {
            let circuit = synthesize_term_circuit(&make_term(label, 2, 3).unwrap());
            assert!(circuit.layout.ancilla_count() <= 2 + 2);
        }
    }

    #[test]
    fn controlled_circuit_equals_controlled_direct() {
        for m in 1..=2 {
            for label in all_labels(1) {
                let op = make_term(label, m, 1).unwrap();
                let circuit = synthesize_term_circuit(&op);
                let total = circuit.layout.total_width;
                let control = total; // one extra qubit above the ancillas
                let gates = circuit.controlled_gates(control);
                let full = circuit.fully_controlled_gates(control);
                for x in 0..(1usize << (m + 1)) {
                    // Control in |+⟩, operand in |x⟩.
                    let mut reference = StateVector::zeros(total + 1);
                    for q in 0..(m + 1) {
                        if x & (1 << q) != 0 {
                            reference.apply(&Gate::X(q));
                        }
                    }
                    reference.apply(&Gate::H(control));
                    let mut middle_controlled = reference.clone();
                    let mut fully_controlled = reference.clone();
                    reference.apply_term_controlled(&op, control).unwrap();
                    middle_controlled.apply_all(&gates);
                    fully_controlled.apply_all(&full);
                    for i in 0..reference.amps().len() {
                        assert_close(middle_controlled.amps()[i], reference.amps()[i], 1e-10);
                        assert_close(fully_controlled.amps()[i], reference.amps()[i], 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn controlled_on_zero_control_is_identity() {
        let op = make_term(TermLabel::GPlus1(Sign::Minus), 2, 1).unwrap();
        let mut state = StateVector::plus(3).extend_with_zeros(1);
        let before = state.clone();
        state.apply_term_controlled(&op, 3).unwrap();
        assert_eq!(state, before);
    }

    #[test]
    fn controlled_prepare_example_from_rules() {
        // control (|0⟩+|1⟩)/√2, operand |001⟩, G0 → (|0⟩|001⟩+|1⟩|101⟩)/√2.
        let op = make_term(TermLabel::G0, 2, 1).unwrap();
        let mut state = StateVector::zeros(4);
        state.apply(&Gate::X(0));
        state.apply(&Gate::H(3));
        state.apply_term_controlled(&op, 3).unwrap();
        assert_close(state.amps()[0b0001], Complex64::new(SQRT_HALF, 0.0), 1e-14);
        assert_close(state.amps()[0b1101], Complex64::new(SQRT_HALF, 0.0), 1e-14);
    }

    #[test]
    fn control_overlap_rejected() {
        let op = make_term(TermLabel::G0, 2, 1).unwrap();
        let mut state = StateVector::zeros(4);
        assert!(state.apply_term_controlled(&op, 2).is_err());
    }

    #[test]
    fn gate_counts_polynomial_in_width() {
        // Observed maximum is linear in m; assert the documented quadratic
        // envelope 12·N² + 20 with room to spare.
        for m in 1..=6 {
            for label in all_labels(1) {
                let circuit = synthesize_term_circuit(&make_term(label, m, 1).unwrap());
                let n = m;
                assert!(
                    circuit.gate_count() <= 12 * n * n + 20,
                    "m={m} label={label:?} count={}",
                    circuit.gate_count()
                );
            }
        }
    }

    #[test]
    fn unitary_extraction_guard() {
        assert!(circuit_unitary(&[Gate::H(0)], 11).is_err());
        let u = circuit_unitary(&[Gate::H(0)], 1).unwrap();
        assert!((u[(0, 0)].re - SQRT_HALF).abs() < 1e-15);
        assert!((u[(1, 1)].re + SQRT_HALF).abs() < 1e-15);
    }

    #[test]
    fn gate_list_export_format() {
        let gates = vec![
            Gate::H(3),
            Gate::Mcx {
                controls: vec![(0, true), (1, false)],
                target: 2,
            },
            Gate::Swap(1, 4),
            Gate::Z(0).with_control(5),
        ];
        let text = format_gate_list(&gates);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "H 3");
        assert_eq!(lines[1], "MCX 2 +0 -1");
        assert_eq!(lines[2], "SWAP 1 4");
        assert_eq!(lines[3], "CTRL +5 Z 0");
    }
}
