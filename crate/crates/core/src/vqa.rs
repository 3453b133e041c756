//! Variational ansatz, finite-difference gradients, and the restart-based
//! gradient-descent optimizer.
//!
//! The state is |ψ(θ)⟩ = U_M(β_p)U_D(γ_p)···U_M(β_1)U_D(γ_1)|+⟩^⊗m with
//!
//!   U_D(γ_l) = exp(−i Σ_j γ_l^j Z_jZ_{j+1} − i γ_l^{m−1} Z_{m−1}Z_0 − i γ_l^y Y_0Y_1)
//!   U_M(β_l) = exp(−i Σ_j β_l^j X_j)
//!
//! realized as a product of rotations in a fixed order: the Z_jZ_{j+1} chain
//! for j = 0..m−2, then the ring term Z_{m−1}Z_0, then Y_0Y_1, then the X
//! rotations. Y_0Y_1 does not commute with the ZZ terms touching qubits 0
//! and 1, so the product order is part of the ansatz definition; it is fixed
//! here so runs reproduce exactly.

use crate::simulator::{Gate, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VqaError {
    #[error("the ansatz needs at least two qubits, got m = {0}")]
    TooFewQubits(usize),
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { got: usize, expected: usize },
}

/// Per-layer angles: gamma has m+1 entries (m ZZ angles and the YY angle),
/// beta has m entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzParams {
    pub m: usize,
    /// layers[l] = (gamma_l, beta_l).
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl AnsatzParams {
    pub fn zeros(m: usize, depth: usize) -> Self {
        AnsatzParams {
            m,
            layers: vec![(vec![0.0; m + 1], vec![0.0; m]); depth],
        }
    }

    /// All angles drawn uniformly from [0, 2π).
    pub fn random(m: usize, depth: usize, rng: &mut impl Rng) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        AnsatzParams {
            m,
            layers: (0..depth)
                .map(|_| {
                    (
                        (0..=m).map(|_| rng.gen::<f64>() * tau).collect(),
                        (0..m).map(|_| rng.gen::<f64>() * tau).collect(),
                    )
                })
                .collect(),
        }
    }

    /// Tied layers: one γ and one β per layer, copied across qubits.
    pub fn tied(m: usize, angles: &[(f64, f64)]) -> Self {
        AnsatzParams {
            m,
            layers: angles
                .iter()
                .map(|&(gamma, beta)| (vec![gamma; m + 1], vec![beta; m]))
                .collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Total parameter count p·(2m+1).
    pub fn count(&self) -> usize {
        self.depth() * (2 * self.m + 1)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.count());
        for (gamma, beta) in &self.layers {
            flat.extend_from_slice(gamma);
            flat.extend_from_slice(beta);
        }
        flat
    }

    pub fn from_flat(m: usize, depth: usize, flat: &[f64]) -> Result<Self, VqaError> {
        let expected = depth * (2 * m + 1);
        if flat.len() != expected {
            return Err(VqaError::ParamLength {
                got: flat.len(),
                expected,
            });
        }
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let base = l * (2 * m + 1);
            layers.push((
                flat[base..base + m + 1].to_vec(),
                flat[base + m + 1..base + 2 * m + 1].to_vec(),
            ));
        }
        Ok(AnsatzParams { m, layers })
    }

    /// The same parameters with `extra` zero layers appended; the appended
    /// layers are the identity, so the prepared state is unchanged.
    pub fn zero_padded(&self, extra: usize) -> Self {
        let mut padded = self.clone();
        padded.layers.extend(std::iter::repeat_n(
            (vec![0.0; self.m + 1], vec![0.0; self.m]),
            extra,
        ));
        padded
    }
}

/// Prepare |ψ(θ)⟩ on m qubits.
pub fn ansatz_state(params: &AnsatzParams) -> Result<StateVector, VqaError> {
    let m = params.m;
    if m < 2 {
        return Err(VqaError::TooFewQubits(m));
    }
    let mut state = StateVector::plus(m);
    for (gamma, beta) in &params.layers {
        debug_assert_eq!(gamma.len(), m + 1);
        debug_assert_eq!(beta.len(), m);
        // exp(−iγ·ZZ) = Rzz(2γ); chain, ring, then the YY rotation.
        for (j, &angle) in gamma.iter().take(m - 1).enumerate() {
            state.apply(&Gate::Rzz(j, j + 1, 2.0 * angle));
        }
        state.apply(&Gate::Rzz(m - 1, 0, 2.0 * gamma[m - 1]));
        state.apply(&Gate::Ryy(0, 1, 2.0 * gamma[m]));
        for (j, angle) in beta.iter().enumerate() {
            state.apply(&Gate::Rx(j, 2.0 * angle));
        }
    }
    Ok(state)
}

/// Squared overlap |⟨reference|ψ⟩|².
pub fn fidelity(psi: &StateVector, reference: &StateVector) -> Result<f64, VqaError> {
    if psi.width() != reference.width() {
        return Err(VqaError::ParamLength {
            got: psi.width(),
            expected: reference.width(),
        });
    }
    Ok(psi.inner(reference).norm_sqr())
}

/// Central finite-difference gradient of `f` at `params`.
pub fn loss_gradient(params: &[f64], delta: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut gradient = vec![0.0; params.len()];
    let mut probe = params.to_vec();
    for i in 0..params.len() {
        probe[i] = params[i] + delta;
        let plus = f(&probe);
        probe[i] = params[i] - delta;
        let minus = f(&probe);
        probe[i] = params[i];
        gradient[i] = (plus - minus) / (2.0 * delta);
    }
    gradient
}

/// Gradient-descent configuration.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub learning_rate: f64,
    /// Central-difference step.
    pub delta: f64,
    pub master_seed: u64,
    /// Stop when the loss improvement falls below this.
    pub tolerance: f64,
    /// Backtracking line search (Armijo, halving) instead of a fixed step.
    pub line_search: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 10,
            max_iterations: 500,
            learning_rate: 0.1,
            delta: 1e-4,
            master_seed: 0,
            tolerance: 1e-10,
            line_search: true,
        }
    }
}

/// One recorded optimization step.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub loss: f64,
    pub fidelity: f64,
}

/// Trajectory and outcome of a single restart.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub restart: usize,
    pub points: Vec<TrajectoryPoint>,
    pub final_params: AnsatzParams,
    pub final_loss: f64,
    pub final_fidelity: f64,
}

/// Full optimizer report.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub restarts: Vec<RestartOutcome>,
    /// Index of the restart with the lowest final loss.
    pub best_restart: usize,
    pub best_loss: f64,
    pub best_fidelity: f64,
    pub best_params: AnsatzParams,
    pub wall_time: std::time::Duration,
}

/// Optimize `loss` over the ansatz parameters with seeded random restarts.
///
/// Restart r draws its initial angles from a stream derived from
/// (master_seed, r), so parallel and serial execution produce identical
/// reports. `warm_start` adds one extra restart initialized from the given
/// parameters (zero-padded elsewhere to this depth).
pub fn optimize(
    m: usize,
    depth: usize,
    config: &OptimizerConfig,
    loss: impl Fn(&StateVector) -> f64 + Sync,
    reference: &StateVector,
    warm_start: Option<AnsatzParams>,
) -> Result<RunReport, VqaError> {
    if m < 2 {
        return Err(VqaError::TooFewQubits(m));
    }
    let start = std::time::Instant::now();
    let loss_of_flat = |flat: &[f64]| -> f64 {
        let params = AnsatzParams::from_flat(m, depth, flat).expect("flat length fixed");
        loss(&ansatz_state(&params).expect("m checked"))
    };

    let mut initials: Vec<AnsatzParams> = (0..config.restarts)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
            rng.set_stream(r as u64 + 1);
            AnsatzParams::random(m, depth, &mut rng)
        })
        .collect();
    if let Some(seed_params) = warm_start {
        debug_assert!(seed_params.depth() <= depth);
        let extra = depth - seed_params.depth();
        initials.push(seed_params.zero_padded(extra));
    }

    let restarts: Vec<RestartOutcome> = initials
        .into_par_iter()
        .enumerate()
        .map(|(r, initial)| {
            run_descent(r, initial, config, &loss_of_flat, |flat| {
                let params = AnsatzParams::from_flat(m, depth, flat).expect("flat length fixed");
                fidelity(&ansatz_state(&params).expect("m checked"), reference)
                    .expect("widths equal")
            })
        })
        .collect();

    let best_restart = restarts
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.final_loss.partial_cmp(&b.final_loss).unwrap())
        .map(|(i, _)| i)
        .expect("at least one restart");
    let best = &restarts[best_restart];
    Ok(RunReport {
        best_restart,
        best_loss: best.final_loss,
        best_fidelity: best.final_fidelity,
        best_params: best.final_params.clone(),
        restarts,
        wall_time: start.elapsed(),
    })
}

fn run_descent(
    restart: usize,
    initial: AnsatzParams,
    config: &OptimizerConfig,
    loss_of_flat: &(impl Fn(&[f64]) -> f64 + Sync),
    fidelity_of_flat: impl Fn(&[f64]) -> f64,
) -> RestartOutcome {
    let m = initial.m;
    let depth = initial.depth();
    let mut flat = initial.to_flat();
    let mut current_loss = loss_of_flat(&flat);
    let mut points = vec![TrajectoryPoint {
        iteration: 0,
        loss: current_loss,
        fidelity: fidelity_of_flat(&flat),
    }];

    for iteration in 1..=config.max_iterations {
        let gradient = loss_gradient(&flat, config.delta, |p| loss_of_flat(p));
        let grad_norm_sqr: f64 = gradient.iter().map(|g| g * g).sum();
        if grad_norm_sqr == 0.0 {
            break;
        }
        let mut step = config.learning_rate;
        let (next_flat, next_loss) = if config.line_search {
            // Armijo backtracking: halve until f(x−t·g) ≤ f(x) − c·t·‖g‖².
            const ARMIJO_C: f64 = 1e-4;
            let mut accepted = None;
            for _ in 0..40 {
                let candidate: Vec<f64> = flat
                    .iter()
                    .zip(&gradient)
                    .map(|(x, g)| x - step * g)
                    .collect();
                let candidate_loss = loss_of_flat(&candidate);
                if candidate_loss <= current_loss - ARMIJO_C * step * grad_norm_sqr {
                    accepted = Some((candidate, candidate_loss));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some(found) => found,
                None => break, // no descent step found: converged
            }
        } else {
            let candidate: Vec<f64> = flat
                .iter()
                .zip(&gradient)
                .map(|(x, g)| x - step * g)
                .collect();
            let candidate_loss = loss_of_flat(&candidate);
            (candidate, candidate_loss)
        };

        let improvement = current_loss - next_loss;
        flat = next_flat;
        current_loss = next_loss;
        points.push(TrajectoryPoint {
            iteration,
            loss: current_loss,
            fidelity: fidelity_of_flat(&flat),
        });
        if config.line_search && improvement < config.tolerance {
            break;
        }
        if !config.line_search && improvement.abs() < config.tolerance {
            break;
        }
    }

    let final_params = AnsatzParams::from_flat(m, depth, &flat).expect("flat length fixed");
    let final_fidelity = points.last().map(|p| p.fidelity).unwrap_or(0.0);
    RestartOutcome {
        restart,
        points,
        final_params,
        final_loss: current_loss,
        final_fidelity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{loss_1d, GateBackend, LossMode};
    use crate::grid::BoundaryParams;
    use crate::oracle;
    use num_complex::Complex64;

    #[test]
    fn zero_angles_give_plus_state() {
        for m in 2..=4 {
            let state = ansatz_state(&AnsatzParams::zeros(m, 2)).unwrap();
            let plus = StateVector::plus(m);
            assert!((state.inner(&plus).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_count_is_depth_times_2m_plus_1() {
        for m in 2..=4 {
            for depth in 1..=3 {
                let params = AnsatzParams::zeros(m, depth);
                assert_eq!(params.count(), depth * (2 * m + 1));
                assert_eq!(params.to_flat().len(), params.count());
            }
        }
    }

    #[test]
    fn rejects_single_qubit() {
        assert!(ansatz_state(&AnsatzParams::zeros(1, 1)).is_err());
    }

    #[test]
    fn tied_equals_untied_with_equal_angles() {
        let tied = AnsatzParams::tied(3, &[(0.3, 1.1), (2.0, 0.4)]);
        let mut untied = AnsatzParams::zeros(3, 2);
        untied.layers[0] = (vec![0.3; 4], vec![1.1; 3]);
        untied.layers[1] = (vec![2.0; 4], vec![0.4; 3]);
        let a = ansatz_state(&tied).unwrap();
        let b = ansatz_state(&untied).unwrap();
        for (x, y) in a.amps().iter().zip(b.amps()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn two_pi_periodic_in_every_angle() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let params = AnsatzParams::random(3, 2, &mut rng);
        let base = ansatz_state(&params).unwrap();
        let flat = params.to_flat();
        for i in 0..flat.len() {
            let mut shifted = flat.clone();
            shifted[i] += 2.0 * std::f64::consts::PI;
            let state = ansatz_state(&AnsatzParams::from_flat(3, 2, &shifted).unwrap()).unwrap();
            let overlap = base.inner(&state);
            assert!(
                (overlap - Complex64::ONE).norm() < 1e-10,
                "angle {i}: {overlap}"
            );
        }
    }

    #[test]
    fn zero_padding_preserves_state() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let params = AnsatzParams::random(2, 1, &mut rng);
        let padded = params.zero_padded(2);
        assert_eq!(padded.depth(), 3);
        let a = ansatz_state(&params).unwrap();
        let b = ansatz_state(&padded).unwrap();
        for (x, y) in a.amps().iter().zip(b.amps()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn fidelity_endpoints() {
        let a = StateVector::plus(2);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let zero = StateVector::zeros(2);
        let one = {
            let mut s = StateVector::zeros(2);
            s.apply(&Gate::X(0));
            s
        };
        assert!(fidelity(&zero, &one).unwrap() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_quadratic_minimum() {
        let center = [0.4, -1.2, 3.0];
        let f = |x: &[f64]| -> f64 {
            x.iter()
                .zip(&center)
                .map(|(xi, ci)| (xi - ci) * (xi - ci))
                .sum()
        };
        let gradient = loss_gradient(&center, 1e-4, f);
        let norm: f64 = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-10, "gradient norm {norm}");
    }

    #[test]
    fn gradient_richardson_consistency() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let params = AnsatzParams::random(2, 1, &mut rng);
        let boundary = BoundaryParams::dirichlet(4);
        let spec = oracle::dirichlet_uniform(2, 1);
        let (_, b_unit) = crate::grid::build_rhs(&spec).unwrap();
        let b_state = StateVector::inject_real(2, b_unit.as_slice()).unwrap();
        let f = |flat: &[f64]| -> f64 {
            let p = AnsatzParams::from_flat(2, 1, flat).unwrap();
            let psi = ansatz_state(&p).unwrap();
            loss_1d(
                &psi,
                &boundary,
                &b_state,
                LossMode::ExactHt,
                GateBackend::Direct,
            )
            .unwrap()
            .loss
        };
        let flat = params.to_flat();
        let g5 = loss_gradient(&flat, 1e-5, f);
        let g6 = loss_gradient(&flat, 1e-6, f);
        for (a, b) in g5.iter().zip(&g6) {
            let scale = a.abs().max(b.abs()).max(1e-6);
            assert!((a - b).abs() / scale < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_mode_equivalence() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let params = AnsatzParams::random(2, 1, &mut rng);
        let boundary = BoundaryParams::dirichlet(4);
        let spec = oracle::dirichlet_uniform(2, 1);
        let (_, b_unit) = crate::grid::build_rhs(&spec).unwrap();
        let b_state = StateVector::inject_real(2, b_unit.as_slice()).unwrap();
        let loss_in = |mode: LossMode| {
            let b_state = b_state.clone();
            move |flat: &[f64]| -> f64 {
                let p = AnsatzParams::from_flat(2, 1, flat).unwrap();
                let psi = ansatz_state(&p).unwrap();
                loss_1d(&psi, &boundary, &b_state, mode, GateBackend::Direct)
                    .unwrap()
                    .loss
            }
        };
        let flat = params.to_flat();
        let g_dense = loss_gradient(&flat, 1e-4, loss_in(LossMode::Dense));
        let g_exact = loss_gradient(&flat, 1e-4, loss_in(LossMode::ExactHt));
        for (a, b) in g_dense.iter().zip(&g_exact) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    fn m2_problem() -> (BoundaryParams, StateVector, StateVector) {
        let spec = oracle::dirichlet_uniform(2, 1);
        let boundary = BoundaryParams::dirichlet(4);
        let (_, b_unit) = crate::grid::build_rhs(&spec).unwrap();
        let b_state = StateVector::inject_real(2, b_unit.as_slice()).unwrap();
        let reference = oracle::classical_solution(&spec).unwrap();
        (boundary, b_state, reference)
    }

    #[test]
    fn optimize_m2_dirichlet_reaches_high_fidelity() {
        let (boundary, b_state, reference) = m2_problem();
        let config = OptimizerConfig {
            restarts: 10,
            master_seed: 1,
            ..OptimizerConfig::default()
        };
        let report = optimize(
            2,
            2,
            &config,
            |psi| {
                loss_1d(
                    psi,
                    &boundary,
                    &b_state,
                    LossMode::ExactHt,
                    GateBackend::Direct,
                )
                .unwrap()
                .loss
            },
            &reference,
            None,
        )
        .unwrap();
        assert!(
            report.best_fidelity > 0.99,
            "fidelity {}",
            report.best_fidelity
        );
        assert!(report.best_loss < 1e-2, "loss {}", report.best_loss);
    }

    #[test]
    fn optimize_deterministic_under_seed() {
        let (boundary, b_state, reference) = m2_problem();
        let config = OptimizerConfig {
            restarts: 1,
            max_iterations: 25,
            master_seed: 3,
            ..OptimizerConfig::default()
        };
        let run = || {
            optimize(
                2,
                1,
                &config,
                |psi| {
                    loss_1d(
                        psi,
                        &boundary,
                        &b_state,
                        LossMode::ExactHt,
                        GateBackend::Direct,
                    )
                    .unwrap()
                    .loss
                },
                &reference,
                None,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.best_loss, b.best_loss);
        assert_eq!(a.best_params.to_flat(), b.best_params.to_flat());
        let pa: Vec<(usize, f64, f64)> = a.restarts[0]
            .points
            .iter()
            .map(|p| (p.iteration, p.loss, p.fidelity))
            .collect();
        let pb: Vec<(usize, f64, f64)> = b.restarts[0]
            .points
            .iter()
            .map(|p| (p.iteration, p.loss, p.fidelity))
            .collect();
        assert_eq!(pa, pb);
    }

    #[test]
    fn line_search_never_increases_loss() {
        let (boundary, b_state, reference) = m2_problem();
        let config = OptimizerConfig {
            restarts: 3,
            max_iterations: 60,
            master_seed: 5,
            ..OptimizerConfig::default()
        };
        let report = optimize(
            2,
            2,
            &config,
            |psi| {
                loss_1d(
                    psi,
                    &boundary,
                    &b_state,
                    LossMode::ExactHt,
                    GateBackend::Direct,
                )
                .unwrap()
                .loss
            },
            &reference,
            None,
        )
        .unwrap();
        for outcome in &report.restarts {
            for pair in outcome.points.windows(2) {
                assert!(pair[1].loss <= pair[0].loss + 1e-12);
            }
        }
        let min_final = report
            .restarts
            .iter()
            .map(|o| o.final_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_loss, min_final);
    }

    #[test]
    fn warm_start_cannot_regress() {
        let (boundary, b_state, reference) = m2_problem();
        let loss_fn = |psi: &StateVector| {
            loss_1d(
                psi,
                &boundary,
                &b_state,
                LossMode::ExactHt,
                GateBackend::Direct,
            )
            .unwrap()
            .loss
        };
        let config = OptimizerConfig {
            restarts: 4,
            master_seed: 9,
            ..OptimizerConfig::default()
        };
        let shallow = optimize(2, 1, &config, loss_fn, &reference, None).unwrap();
        let deeper = optimize(
            2,
            2,
            &config,
            loss_fn,
            &reference,
            Some(shallow.best_params.clone()),
        )
        .unwrap();
        assert!(deeper.best_loss <= shallow.best_loss + 1e-12);
        assert_eq!(deeper.restarts.len(), config.restarts + 1);
    }
}
