//! Subcommand implementations.

use crate::config::FileConfig;
use crate::output::{fmt_float, resolve_output, CsvWriter};
use anyhow::{bail, Context, Result};
use qpoisson_core::decomp::{
    all_labels, decompose_a2_1d, decompose_a_1d, decompose_a_ddim, expand_a2_ddim, make_term,
    materialize_decomposition, materialize_products, verify_permutation_properties,
    verify_term_properties, MAX_DENSE_WIDTH,
};
use qpoisson_core::estimator::{loss_1d, loss_ddim, GateBackend, LossMode};
use qpoisson_core::grid::{
    build_matrix, build_matrix_1d, build_rhs, BoundaryParams, ProblemSpec, Rhs,
};
use qpoisson_core::oracle::{classical_solution, convergence_study, problem_hamiltonian, spectrum};
use qpoisson_core::simulator::{format_gate_list, synthesize_term_circuit, Gate, StateVector};
use qpoisson_core::vqa::{optimize, AnsatzParams, OptimizerConfig, RunReport};
use std::fmt::Write as _;
use std::path::PathBuf;

/// An invariant violated at runtime; mapped to exit code 1.
#[derive(Debug)]
pub struct InvariantFailure(pub String);

impl std::fmt::Display for InvariantFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invariant failed: {}", self.0)
    }
}

impl std::error::Error for InvariantFailure {}

fn num_complex_fmt(z: qpoisson_core::Complex64) -> String {
    format!(
        "{}{}{}i",
        fmt_float(z.re),
        if z.im < 0.0 { "-" } else { "+" },
        fmt_float(z.im.abs())
    )
}

pub struct ProblemFlags {
    pub m: usize,
    pub dim: usize,
    pub c: f64,
    pub d_r: f64,
}

impl ProblemFlags {
    pub fn resolve(
        cfg: &FileConfig,
        m: Option<usize>,
        dim: Option<usize>,
        c: Option<f64>,
        d_r: Option<f64>,
    ) -> Result<Self> {
        let m = cfg.merge(m, "m", 2)?;
        let dim = cfg.merge(dim, "dim", 1)?;
        let c = cfg.merge(c, "c", 0.0)?;
        let d_r = cfg.merge(d_r, "d", 0.0)?;
        if m == 0 {
            bail!("m must be positive");
        }
        if dim == 0 {
            bail!("dim must be positive");
        }
        if dim >= 2 && (c != 0.0 || d_r != 0.0) {
            bail!("dim >= 2 supports Dirichlet boundaries only (c = d = 0)");
        }
        if !(0.0..=1.0).contains(&c) || !(0.0..=1.0).contains(&d_r) {
            bail!("boundary coefficients must lie in [0, 1]");
        }
        Ok(ProblemFlags { m, dim, c, d_r })
    }

    fn boundary(&self) -> Result<BoundaryParams> {
        Ok(BoundaryParams::from_coefficients(
            self.c,
            self.d_r,
            1 << self.m,
        )?)
    }

    fn spec(&self) -> Result<ProblemSpec> {
        Ok(ProblemSpec::new(
            self.m,
            self.dim,
            self.boundary()?,
            Rhs::Uniform,
        )?)
    }
}

/// Parsed --mode flag: dense | exact-ht | shots:M.
pub fn parse_mode(text: &str, seed: u64) -> Result<LossMode> {
    match text {
        "dense" => Ok(LossMode::Dense),
        "exact-ht" => Ok(LossMode::ExactHt),
        other => match other.strip_prefix("shots:") {
            Some(count) => {
                let shots: u64 = count
                    .parse()
                    .with_context(|| format!("shot count {count:?}"))?;
                if shots == 0 {
                    bail!("shot count must be positive");
                }
                Ok(LossMode::ShotsHt { shots, seed })
            }
            None => bail!("unknown mode {text:?}; use dense, exact-ht, or shots:M"),
        },
    }
}

// ---------------------------------------------------------------------------
// verify

pub struct VerifyArgs {
    pub flags: ProblemFlags,
    pub export_gates: Option<PathBuf>,
    pub inject_fault: bool,
}

pub fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let ProblemFlags { m, dim, c, d_r } = args.flags;
    let labels = all_labels(dim);

    // Term properties, exact over all basis indices.
    for &label in &labels {
        let op = make_term(label, m, dim)?;
        let report = if args.inject_fault && label == labels[labels.len() - 1] {
            // Deliberate corruption for the negative-control path: flip one
            // off-diagonal sign without its involution partner.
            let bad = (0..1usize << op.width())
                .find(|&x| op.perm(x) != x)
                .unwrap_or(0);
            verify_permutation_properties(
                op.width(),
                |x| op.perm(x),
                |x| {
                    if x == bad {
                        -op.sign(bad)
                    } else {
                        op.sign(x)
                    }
                },
            )
        } else {
            verify_term_properties(&op)
        };
        if !report.all_hold() {
            let which = [
                (report.hermitian, "hermitian"),
                (report.self_inverse, "self-inverse"),
                (report.one_sparse, "one-sparse"),
            ]
            .iter()
            .filter(|(ok, _)| !ok)
            .map(|(_, name)| *name)
            .collect::<Vec<_>>()
            .join(", ");
            return Err(
                InvariantFailure(format!("term {} violates: {which}", label.name())).into(),
            );
        }
    }
    println!(
        "term properties: {} labels hermitian, one-sparse, self-inverse",
        labels.len()
    );

    // Decomposition reassembly.
    let width = m * dim + 1;
    if width <= MAX_DENSE_WIDTH {
        let (residual_a, residual_a2) = if dim == 1 {
            let spec = ProblemSpec::one_dim(
                m,
                BoundaryParams::from_coefficients(c, d_r, 1 << m)?,
                Rhs::Uniform,
            )?;
            let a = build_matrix_1d(&spec)?;
            let target = sigma_x_kron(&a);
            let target_sq = sigma_x_kron(&(&a * &a));
            let got = materialize_decomposition(&decompose_a_1d(m, c, d_r))?;
            let got_sq = materialize_decomposition(&decompose_a2_1d(m, c, d_r))?;
            ((got - target).abs().max(), (got_sq - target_sq).abs().max())
        } else {
            let spec = ProblemSpec::dirichlet(m, dim, Rhs::Uniform)?;
            let a = build_matrix(&spec)?;
            let target = sigma_x_kron(&a);
            let got = materialize_decomposition(&decompose_a_ddim(m, dim))?;
            let got_sq = materialize_products(&expand_a2_ddim(m, dim))?;
            (
                (got - &target).abs().max(),
                (got_sq - &target * &target).abs().max(),
            )
        };
        println!(
            "reassembly residual (sigma_x (x) A):  {}",
            fmt_float(residual_a)
        );
        println!(
            "reassembly residual (squared form):   {}",
            fmt_float(residual_a2)
        );
        if residual_a > 1e-12 || residual_a2 > 1e-12 {
            return Err(InvariantFailure(format!(
                "decomposition reassembly residual exceeds 1e-12 ({} / {})",
                fmt_float(residual_a),
                fmt_float(residual_a2)
            ))
            .into());
        }
    } else {
        println!("reassembly: skipped (width {width} exceeds the dense guard)");
    }

    // Circuit/direct equivalence over all basis inputs.
    let circuit_guard = 12usize;
    let mut worst = 0.0f64;
    let mut gate_export = String::new();
    for &label in &labels {
        let op = make_term(label, m, dim)?;
        let circuit = synthesize_term_circuit(&op);
        if args.export_gates.is_some() {
            let _ = writeln!(gate_export, "# {} (m={m}, dim={dim})", label.name());
            gate_export.push_str(&format_gate_list(&circuit.gates()));
            gate_export.push('\n');
        }
        if circuit.layout.total_width > circuit_guard {
            continue;
        }
        for x in 0..(1usize << op.width()) {
            let mut state = StateVector::zeros(circuit.layout.total_width);
            for q in 0..op.width() {
                if x & (1 << q) != 0 {
                    state.apply(&Gate::X(q));
                }
            }
            state.apply_all(&circuit.gates());
            let (y, s) = op.apply_basis(x);
            for (idx, amp) in state.amps().iter().enumerate() {
                let expect = if idx == y {
                    qpoisson_core::Complex64::new(s, 0.0)
                } else {
                    qpoisson_core::Complex64::ZERO
                };
                worst = worst.max((amp - expect).norm());
            }
        }
    }
    println!("circuit/direct equivalence residual:  {}", fmt_float(worst));
    if worst > 1e-10 {
        return Err(InvariantFailure(format!(
            "circuit/direct equivalence residual exceeds 1e-10 ({})",
            fmt_float(worst)
        ))
        .into());
    }

    if let Some(path) = args.export_gates {
        std::fs::write(&path, gate_export)
            .with_context(|| format!("cannot write gate list {}", path.display()))?;
        println!("gate lists written to {}", path.display());
    }
    if m * dim <= 10 {
        print!("{}", loss_item_summary(&ProblemFlags { m, dim, c, d_r })?);
    }
    println!("verify: ok (m={m}, dim={dim}, c={c}, d={d_r})");
    Ok(())
}

fn sigma_x_kron(a: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let n = a.nrows();
    let mut out = nalgebra::DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, n), (n, n)).copy_from(a);
    out.view_mut((n, 0), (n, n)).copy_from(a);
    out
}

// ---------------------------------------------------------------------------
// run and sweep

pub struct RunArgs {
    pub flags: ProblemFlags,
    pub depth: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub mode: LossMode,
    pub fixed_step: bool,
    pub out: Option<PathBuf>,
}

fn optimizer_config(args: &RunArgs) -> OptimizerConfig {
    OptimizerConfig {
        restarts: args.restarts,
        max_iterations: args.iterations,
        learning_rate: args.learning_rate,
        master_seed: args.seed,
        line_search: !args.fixed_step,
        ..OptimizerConfig::default()
    }
}

fn run_once(args: &RunArgs, depth: usize, warm: Option<AnsatzParams>) -> Result<RunReport> {
    let spec = args.flags.spec()?;
    let width = spec.register_width();
    if width < 2 {
        bail!("the ansatz needs at least 2 register qubits; increase m or dim");
    }
    let (_, b_unit) = build_rhs(&spec)?;
    let b_state = StateVector::inject_real(width, b_unit.as_slice())?;
    let reference = classical_solution(&spec)?;
    let boundary = args.flags.boundary()?;
    let mode = args.mode;
    let loss_fn = move |psi: &StateVector| -> f64 {
        let report = if spec.dim == 1 {
            loss_1d(psi, &boundary, &b_state, mode, GateBackend::Direct)
        } else {
            loss_ddim(psi, spec.m, spec.dim, &b_state, mode, GateBackend::Direct)
        };
        report.expect("loss evaluation on validated problem").loss
    };
    let config = optimizer_config(args);
    Ok(optimize(width, depth, &config, loss_fn, &reference, warm)?)
}

pub fn cmd_run(args: RunArgs) -> Result<()> {
    let report = run_once(&args, args.depth, None)?;
    let path = resolve_output(args.out.clone(), "run.csv");
    let mut csv = CsvWriter::create(&path, "restart,iter,loss,fidelity")?;
    for outcome in &report.restarts {
        for point in &outcome.points {
            csv.raw_row(&format!(
                "{},{},{},{}",
                outcome.restart,
                point.iteration,
                fmt_float(point.loss),
                fmt_float(point.fidelity)
            ))?;
        }
    }
    let path = csv.finish()?;
    // Steps where the loss fell but the fidelity fell too; possible when the
    // spectrum above lambda_1 is spread out.
    let worse_case_steps: usize = report
        .restarts
        .iter()
        .flat_map(|o| o.points.windows(2))
        .filter(|pair| pair[1].loss < pair[0].loss && pair[1].fidelity < pair[0].fidelity)
        .count();
    println!(
        "best restart {} | best loss {} | best fidelity {} | wall time {:.2?}",
        report.best_restart,
        fmt_float(report.best_loss),
        fmt_float(report.best_fidelity),
        report.wall_time
    );
    println!("worse-case steps (loss down, fidelity down): {worse_case_steps}");
    println!("trajectories written to {}", path.display());
    Ok(())
}

pub struct SweepArgs {
    pub run: RunArgs,
    pub m_values: Vec<usize>,
    pub depth_values: Vec<usize>,
    pub warm_start: bool,
}

pub fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let path = resolve_output(args.run.out.clone(), "sweep.csv");
    let mut csv = CsvWriter::create(&path, "m,depth,best_loss,best_fidelity")?;
    for &m in &args.m_values {
        let mut point = RunArgs {
            flags: ProblemFlags {
                m,
                dim: args.run.flags.dim,
                c: args.run.flags.c,
                d_r: args.run.flags.d_r,
            },
            depth: args.run.depth,
            restarts: args.run.restarts,
            iterations: args.run.iterations,
            learning_rate: args.run.learning_rate,
            seed: args.run.seed,
            mode: args.run.mode,
            fixed_step: args.run.fixed_step,
            out: None,
        };
        let mut warm: Option<AnsatzParams> = None;
        for &depth in &args.depth_values {
            point.depth = depth;
            let report = run_once(
                &point,
                depth,
                if args.warm_start { warm.take() } else { None },
            )?;
            csv.raw_row(&format!(
                "{m},{depth},{},{}",
                fmt_float(report.best_loss),
                fmt_float(report.best_fidelity)
            ))?;
            println!(
                "m={m} depth={depth}: best loss {} fidelity {}",
                fmt_float(report.best_loss),
                fmt_float(report.best_fidelity)
            );
            warm = Some(report.best_params);
        }
    }
    let path = csv.finish()?;
    println!("sweep written to {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// spectrum and convergence

pub struct SpectrumArgs {
    pub flags: ProblemFlags,
    pub out: Option<PathBuf>,
}

pub fn cmd_spectrum(args: SpectrumArgs) -> Result<()> {
    let spec = args.flags.spec()?;
    let h = problem_hamiltonian(&spec)?;
    let report = spectrum(&h)?;
    let path = resolve_output(args.out, "spectrum.csv");
    let mut csv = CsvWriter::create(&path, "index,eigenvalue")?;
    for (index, ev) in report.eigenvalues.iter().enumerate() {
        csv.raw_row(&format!("{index},{}", fmt_float(*ev)))?;
    }
    let path = csv.finish()?;
    println!(
        "lambda_0 = {} (ground{})",
        fmt_float(report.eigenvalues[0]),
        if report.eigenvalues[0].abs() < 1e-10 {
            ", numerically zero"
        } else {
            ""
        }
    );
    println!("lambda_1 = {}", fmt_float(report.lambda_1));
    println!("lambda_max/lambda_1 ratio = {}", fmt_float(report.ratio));
    println!("spectrum written to {}", path.display());
    Ok(())
}

pub struct ConvergenceArgs {
    pub levels: Vec<usize>,
    pub out: Option<PathBuf>,
}

pub fn cmd_convergence(args: ConvergenceArgs) -> Result<()> {
    use std::f64::consts::PI;
    if args.levels.is_empty() {
        bail!("at least one level required");
    }
    let rows = convergence_study(
        |x| PI * PI * (PI * x).sin(),
        |x| (PI * x).sin(),
        &args.levels,
    )?;
    let path = resolve_output(args.out, "convergence.csv");
    let mut csv = CsvWriter::create(&path, "m,n,max_error,observed_order")?;
    for row in &rows {
        csv.raw_row(&format!(
            "{},{},{},{}",
            row.m,
            row.n,
            fmt_float(row.max_error),
            fmt_float(row.observed_order)
        ))?;
        println!(
            "m={} n={}: max error {} observed order {}",
            row.m,
            row.n,
            fmt_float(row.max_error),
            if row.observed_order.is_nan() {
                "-".to_string()
            } else {
                format!("{:.3}", row.observed_order)
            }
        );
    }
    let path = csv.finish()?;
    println!("convergence written to {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------

/// Report loss items for a (m, dim) point; used by verify's --loss-report
/// debugging output and exercised by the integration tests.
pub fn loss_item_summary(flags: &ProblemFlags) -> Result<String> {
    let spec = flags.spec()?;
    let width = spec.register_width();
    let (_, b_unit) = build_rhs(&spec)?;
    let b_state = StateVector::inject_real(width, b_unit.as_slice())?;
    let psi = StateVector::plus(width);
    let report = if spec.dim == 1 {
        loss_1d(
            &psi,
            &flags.boundary()?,
            &b_state,
            LossMode::ExactHt,
            GateBackend::Direct,
        )?
    } else {
        loss_ddim(
            &psi,
            spec.m,
            spec.dim,
            &b_state,
            LossMode::ExactHt,
            GateBackend::Direct,
        )?
    };
    let mut out = String::new();
    let _ = writeln!(out, "loss = {}", fmt_float(report.loss));
    let _ = writeln!(out, "<psi|A^2|psi> = {}", fmt_float(report.term_a2));
    let _ = writeln!(out, "<b|A|psi> = {}", num_complex_fmt(report.term_b_a));
    let _ = writeln!(
        out,
        "items: {} overlap, {} expectation",
        report.overlap_items.len(),
        report.expectation_items.len()
    );
    Ok(out)
}
