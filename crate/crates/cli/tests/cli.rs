//! End-to-end tests of the qpoisson binary: exit codes, CSV schemas, config
//! merging, and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn qpoisson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpoisson"))
        .args(args)
        .env_remove("QPOISSON_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("output file exists")
}

#[test]
fn verify_mixed_boundary_passes() {
    let out = qpoisson(&["verify", "--m", "3", "--c", "0.4", "--d", "0.25"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("verify: ok (m=3, dim=1, c=0.4, d=0.25)"));
    assert!(text.contains("items: 7 overlap, 15 expectation"));
}

#[test]
fn verify_ddim_passes() {
    let out = qpoisson(&["verify", "--m", "1", "--dim", "2"]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("items: 9 overlap, 72 expectation"));
}

#[test]
fn verify_injected_fault_exits_one_with_named_invariant() {
    let out = qpoisson(&["verify", "--m", "2", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("invariant failed"), "{err}");
    assert!(
        err.contains("hermitian") || err.contains("self-inverse"),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_two() {
    let out = qpoisson(&["run", "--m", "2", "--depth", "1", "--mode", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qpoisson(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_csv_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("a.csv");
    let path_b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "run".to_string(),
            "--m".into(),
            "2".into(),
            "--depth".into(),
            "2".into(),
            "--restarts".into(),
            "2".into(),
            "--iters".into(),
            "40".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
        ]
    };
    let run_a = qpoisson(&args(&path_a).iter().map(String::as_str).collect::<Vec<_>>());
    let run_b = qpoisson(&args(&path_b).iter().map(String::as_str).collect::<Vec<_>>());
    assert!(run_a.status.success());
    assert!(run_b.status.success());
    let (text_a, text_b) = (read(&path_a), read(&path_b));
    assert_eq!(text_a, text_b, "same seed must give identical trajectories");
    assert!(text_a.starts_with("restart,iter,loss,fidelity\n"));
    // Summary line format and the converged fidelity.
    let summary = stdout(&run_a);
    assert!(summary.contains("best restart"));
    let best_fidelity: f64 = summary
        .lines()
        .find(|l| l.starts_with("best restart"))
        .and_then(|l| l.split('|').nth(2))
        .map(|s| {
            s.trim()
                .trim_start_matches("best fidelity ")
                .parse()
                .unwrap()
        })
        .unwrap();
    assert!(best_fidelity > 0.99, "fidelity {best_fidelity}");
}

#[test]
fn single_point_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let run_csv = dir.path().join("run.csv");
    let sweep_csv = dir.path().join("sweep.csv");
    let run = qpoisson(&[
        "run",
        "--m",
        "2",
        "--depth",
        "2",
        "--restarts",
        "2",
        "--iters",
        "30",
        "--seed",
        "11",
        "--out",
        run_csv.to_str().unwrap(),
    ]);
    let sweep = qpoisson(&[
        "sweep",
        "--m",
        "2",
        "--depth",
        "2",
        "--restarts",
        "2",
        "--iters",
        "30",
        "--seed",
        "11",
        "--out",
        sweep_csv.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    assert!(sweep.status.success());
    // The sweep row must repeat the run's best loss exactly.
    let best_loss_in_run = stdout(&run)
        .lines()
        .find(|l| l.starts_with("best restart"))
        .and_then(|l| l.split('|').nth(1))
        .map(|s| s.trim().trim_start_matches("best loss ").to_string())
        .unwrap();
    let sweep_text = read(&sweep_csv);
    assert!(sweep_text.starts_with("m,depth,best_loss,best_fidelity\n"));
    let row = sweep_text.lines().nth(1).unwrap();
    assert!(row.starts_with("2,2,"), "{row}");
    assert!(
        row.contains(&best_loss_in_run),
        "{row} vs {best_loss_in_run}"
    );
}

#[test]
fn sweep_ranges_produce_rows_and_monotone_loss() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = qpoisson(&[
        "sweep",
        "--m-range",
        "2..3",
        "--depth-range",
        "1..3",
        "--restarts",
        "3",
        "--iters",
        "80",
        "--seed",
        "3",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = read(&csv);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for m_rows in rows.chunks(3) {
        let losses: Vec<f64> = m_rows
            .iter()
            .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        for pair in losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "loss must not increase with depth: {losses:?}"
            );
        }
    }
}

#[test]
fn spectrum_m2_flags_ground_and_m6_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spectrum.csv");
    let out = qpoisson(&["spectrum", "--m", "2", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("ground, numerically zero"));
    let text = read(&csv);
    assert!(text.starts_with("index,eigenvalue\n"));
    assert_eq!(text.lines().count(), 5);

    let out = qpoisson(&["spectrum", "--m", "6", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let ratio_line = stdout(&out);
    let ratio: f64 = ratio_line
        .lines()
        .find(|l| l.starts_with("lambda_max/lambda_1"))
        .and_then(|l| l.split('=').nth(1))
        .map(|s| s.trim().parse().unwrap())
        .unwrap();
    assert!(ratio >= 1e5, "ratio {ratio}");
}

#[test]
fn convergence_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("conv.csv");
    let out = qpoisson(&[
        "convergence",
        "--levels",
        "3..6",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = read(&csv);
    assert!(text.starts_with("m,n,max_error,observed_order\n"));
    for line in text.lines().skip(2) {
        let order: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((1.8..=2.2).contains(&order), "{line}");
    }
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("settings.cfg");
    std::fs::write(&cfg, "# defaults\nm=3\nc=0.9\nd=0.25\n").unwrap();
    // Flag --c wins over the config value; m and d come from the file.
    let out = qpoisson(&["verify", "--config", cfg.to_str().unwrap(), "--c", "0.4"]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("verify: ok (m=3, dim=1, c=0.4, d=0.25)"));
}

#[test]
fn output_dir_env_var_sets_default_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qpoisson"))
        .args(["convergence", "--levels", "3..4"])
        .env("QPOISSON_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("convergence.csv").exists());
}

#[test]
fn gate_list_export_writes_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gates.txt");
    let out = qpoisson(&[
        "verify",
        "--m",
        "2",
        "--export-gates",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = read(&path);
    assert!(text.contains("# G0 (m=2, dim=1)"));
    assert!(text.contains("MCX"));
    assert!(text.contains("SWAP"));
}
