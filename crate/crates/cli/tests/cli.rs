use std::path::Path;
use std::process::Command;

use annmoc::{EstimatorKind, ProblemSpec};
use annmoc_cli::output::{self, read_csv, read_summary};
use annmoc_cli::{
    commands, CliError, CommonArgs, FileConfig, RunConfig, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK,
};
use proptest::prelude::*;

const SMALL_ANN: &str = r#"
[solver]
n_quad = 8
n_samples = 11
max_iters = 3

[training]
widths = [1, 8, 4, 1]
max_epochs = 100
"#;

fn mesh_args(out: &Path) -> CommonArgs {
    CommonArgs {
        problem: Some("problem1".into()),
        estimator: Some("mesh".into()),
        n_samples: Some(41),
        seed: Some(7),
        out: Some(out.to_path_buf()),
        ..CommonArgs::default()
    }
}

fn lookup<'a>(summary: &'a [(String, String)], key: &str) -> &'a str {
    summary
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .unwrap_or_else(|| panic!("summary lacks {key}"))
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_args(&mesh_args(dir.path())).unwrap();
    let outcome = commands::run(&cfg, |_| {}).unwrap();
    assert!(outcome.result.converged);
    assert_eq!(outcome.exit_code(), EXIT_OK);
    for name in [
        output::FLUX_FILE,
        output::HISTORY_FILE,
        output::TIMING_FILE,
        output::SUMMARY_FILE,
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    // Only the network estimator has a checkpoint.
    assert!(!dir.path().join(output::CHECKPOINT_FILE).exists());
    let (header, rows) = read_csv(&dir.path().join(output::HISTORY_FILE)).unwrap();
    assert_eq!(
        header,
        ["iter", "metric", "threshold", "train_loss", "epochs"]
    );
    assert_eq!(rows.len(), outcome.result.iterations());
}

#[test]
fn ann_run_writes_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let file = FileConfig::parse(SMALL_ANN).unwrap();
    let args = CommonArgs {
        seed: Some(2),
        out: Some(dir.path().to_path_buf()),
        ..CommonArgs::default()
    };
    let cfg = RunConfig::resolve(&file, &args).unwrap();
    let outcome = commands::run(&cfg, |_| {}).unwrap();
    let text = std::fs::read_to_string(dir.path().join(output::CHECKPOINT_FILE)).unwrap();
    let back = annmoc::AnnEstimator::from_checkpoint(&text, cfg.solver.ann.clone()).unwrap();
    for (&x, &v) in outcome.grid.iter().zip(&outcome.flux) {
        assert_eq!(annmoc::FluxEstimator::estimate(&back, x), v);
    }
}

#[test]
fn unknown_problem_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let args = CommonArgs {
        problem: Some("problem3".into()),
        ..mesh_args(&out)
    };
    let err = RunConfig::from_args(&args).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn benchmark_rejects_manufactured_parameters() {
    let args = CommonArgs {
        problem: Some("problem2".into()),
        kappa: Some(0.2),
        ..CommonArgs::default()
    };
    assert!(matches!(
        RunConfig::from_args(&args),
        Err(CliError::Config(_))
    ));
}

#[test]
fn unknown_config_keys_are_rejected() {
    assert!(matches!(
        FileConfig::parse("[solver]\nnquad = 4\n"),
        Err(CliError::Config(_))
    ));
}

#[test]
fn flux_file_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_args(&mesh_args(dir.path())).unwrap();
    let outcome = commands::run(&cfg, |_| {}).unwrap();
    let (header, rows) = read_csv(&dir.path().join(output::FLUX_FILE)).unwrap();
    assert_eq!(header, ["x", "psi_estimate", "psi_reference", "abs_error"]);
    assert_eq!(rows.len(), cfg.grid);
    let reference = outcome.reference.as_ref().unwrap();
    for (k, row) in rows.iter().enumerate() {
        let parsed: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed[0].to_bits(), outcome.grid[k].to_bits());
        assert_eq!(parsed[1].to_bits(), outcome.flux[k].to_bits());
        assert_eq!(parsed[2].to_bits(), reference[k].to_bits());
        assert_eq!(
            parsed[3].to_bits(),
            (outcome.flux[k] - reference[k]).abs().to_bits()
        );
    }
}

#[test]
fn summary_records_the_resolved_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_args(&mesh_args(dir.path())).unwrap();
    commands::run(&cfg, |_| {}).unwrap();
    let summary = read_summary(&dir.path().join(output::SUMMARY_FILE)).unwrap();
    assert_eq!(lookup(&summary, "seed"), "7");
    assert_eq!(lookup(&summary, "seed_generated"), "false");
    assert_eq!(lookup(&summary, "estimator"), "mesh");
    assert_eq!(lookup(&summary, "n_samples"), "41");
    assert_eq!(lookup(&summary, "sigma_s"), "0.5");
    for key in [
        "kappa",
        "alpha",
        "sigma_t",
        "n_quad",
        "epsilon",
        "max_iters",
        "sweep_tol",
        "resample",
        "layout",
        "initial",
        "stop",
        "widths",
        "learning_rate",
        "max_epochs",
        "loss_target",
        "lr_decay",
        "l2_error",
        "converged",
        "iterations",
    ] {
        lookup(&summary, key);
    }
}

#[test]
fn missing_seed_is_generated_and_recorded() {
    let args = CommonArgs {
        seed: None,
        ..CommonArgs::default()
    };
    let cfg = RunConfig::from_args(&args).unwrap();
    assert!(cfg.seed_generated);
}

#[test]
fn compare_needs_two_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_args(&mesh_args(dir.path())).unwrap();
    let err = commands::compare(&cfg, &[EstimatorKind::Mesh], |_, _| {}).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
}

#[test]
fn compare_tabulates_each_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_args(&mesh_args(dir.path())).unwrap();
    let outcome = commands::compare(
        &cfg,
        &[EstimatorKind::Mesh, EstimatorKind::Exact],
        |_, _| {},
    )
    .unwrap();
    assert_eq!(outcome.rows.len(), 2);
    assert_eq!(outcome.rows[0].kind, "mesh");
    assert!(outcome.rows[0].l2_error < 1e-2);
    assert!(outcome.rows[1].l2_error < 1e-6);
    let (_, rows) = read_csv(&dir.path().join(output::COMPARE_FILE)).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn oracle_applies_to_the_benchmark_only() {
    let dir = tempfile::tempdir().unwrap();
    let args = CommonArgs {
        problem: Some("problem2-0.5".into()),
        grid: Some(11),
        out: Some(dir.path().to_path_buf()),
        ..CommonArgs::default()
    };
    let cfg = RunConfig::from_args(&args).unwrap();
    let outcome = commands::oracle(&cfg).unwrap();
    assert_eq!(outcome.flux.len(), 11);
    // Symmetric about the midpoint, zero-free in the interior.
    for k in 0..11 {
        assert!((outcome.flux[k] - outcome.flux[10 - k]).abs() < 1e-9);
    }
    assert!(outcome.flux[5] > outcome.flux[0]);
    let (header, _) = read_csv(&dir.path().join(output::FLUX_FILE)).unwrap();
    assert_eq!(header, ["x", "psi_estimate"]);

    let cfg = RunConfig::from_args(&mesh_args(dir.path())).unwrap();
    assert!(matches!(commands::oracle(&cfg), Err(CliError::Config(_))));
}

#[test]
fn stronger_scattering_takes_more_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let iterations = |name: &str| {
        let args = CommonArgs {
            problem: Some(name.into()),
            no_resample: true,
            ..mesh_args(dir.path())
        };
        let cfg = RunConfig::from_args(&args).unwrap();
        assert!(matches!(cfg.problem, ProblemSpec::Benchmark(_)));
        let outcome = commands::run(&cfg, |_| {}).unwrap();
        assert!(outcome.result.converged);
        outcome.result.iterations()
    };
    assert!(iterations("problem2-0.999") > iterations("problem2-0.9"));
}

fn binary(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_annmoc"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        binary(&["run", "--problem", "nope", "--out", out]),
        EXIT_CONFIG
    );
    assert_eq!(binary(&["run", "--n-quad", "3", "--out", out]), EXIT_CONFIG);
    let base = ["run", "--estimator", "mesh", "--seed", "1", "--out", out];
    assert_eq!(binary(&base), EXIT_OK);
    assert_eq!(
        binary(&[&base[..], &["--max-iters", "1"]].concat()),
        EXIT_NOT_CONVERGED
    );
    assert_eq!(
        binary(&["compare", "--kinds", "mesh", "--out", out]),
        EXIT_CONFIG
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flags_override_the_file(file_n in 1usize..50, flag_n in 1usize..50, samples in 2usize..500) {
        let file = FileConfig::parse(&format!("[solver]\nn_quad = {}\nn_samples = {samples}\n", 2 * file_n)).unwrap();
        let args = CommonArgs { n_quad: Some(2 * flag_n), seed: Some(0), ..CommonArgs::default() };
        let cfg = RunConfig::resolve(&file, &args).unwrap();
        prop_assert_eq!(cfg.solver.n_quad, 2 * flag_n);
        prop_assert_eq!(cfg.solver.n_samples, samples);
    }
}
