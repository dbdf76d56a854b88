use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dualrail_cli::commands::{self, AnalysisInput};
use dualrail_cli::formats::{matrix_to_text, Report};
use dualrail_cli::ExperimentConfig;
use dualrail_core::fock::{Cutoff, PureState};

const SMALL: &str = "seed = 11\ncutoff = 2\nbases_per_lo = 3\nsamples_per_basis = 300\nsigma = 0.2\nt2 = 2e-7\ndetuning_hz = 3e5\n";

fn small_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig::parse(SMALL)
        .unwrap()
        .set("out_dir", dir.to_str().unwrap())
        .unwrap()
}

fn report(path: &Path) -> Report {
    Report::parse(path, &fs::read_to_string(path).unwrap()).unwrap()
}

fn number(r: &Report, key: &str) -> f64 {
    r.get(key).unwrap_or_else(|| panic!("missing {key}")).parse().unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dualrail"))
}

/// Every file in `dir` except timings, sorted by name.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_none_or(|e| e != "timings"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn default_generate_is_mostly_one_photon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::with_seed(1).set("out_dir", dir.path().to_str().unwrap()).unwrap();
    let state = commands::generate(&cfg).unwrap();
    let rho = commands::load_matrix(&state).unwrap();
    assert!(rho.population(0, 1) + rho.population(1, 0) > 0.9);
    let r = report(&dir.path().join(commands::SOURCE_REPORT));
    assert_eq!(number(&r, "herald_rate_duty_corrected_per_s"), 760.0);
    dualrail_cli::manifest::verify(&dir.path().join("generate.manifest")).unwrap();
}

#[test]
fn idler_phase_reaches_the_coherence() {
    let dir = tempfile::tempdir().unwrap();
    let theta = 5.0 * std::f64::consts::PI / 6.0;
    let status = bin()
        .args(["--seed", "2", "--theta", &theta.to_string(), "--out"])
        .arg(dir.path())
        .arg("generate")
        .status()
        .unwrap();
    assert!(status.success());
    let rho = commands::load_matrix(&dir.path().join(commands::STATE_FILE)).unwrap();
    assert!((rho.element(1, 0, 0, 1).arg() - theta).abs() < 1e-9);
}

#[test]
fn exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "seed = 1\nq1 = 0.1\nlifetime = 3\n").unwrap();
    let code = |args: &[&str]| bin().args(args).current_dir(dir.path()).status().unwrap().code();
    assert_eq!(code(&["--config", bad.to_str().unwrap(), "generate"]), Some(2));
    assert_eq!(code(&["generate"]), Some(2));
    assert_eq!(code(&["--seed", "1", "--out", "o", "frobnicate"]), Some(2));
    fs::write(&bad, "seed = 1\nq1 = 0\nq2 = 0\n").unwrap();
    assert_eq!(code(&["--config", bad.to_str().unwrap(), "--out", "o", "generate"]), Some(3));
    assert_eq!(code(&["--seed", "1", "--out", "o", "store", "--state", "missing.txt"]), Some(1));
}

#[test]
fn identity_storage_leaves_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::with_seed(3).set("out_dir", dir.path().to_str().unwrap()).unwrap();
    let state = commands::generate(&cfg).unwrap();
    let stored = commands::store(&cfg, &state, &[(0.0, 0.0)]).unwrap();
    let (a, b) = (commands::load_matrix(&state).unwrap(), commands::load_matrix(&stored[0]).unwrap());
    let diff = (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff <= 1e-12);
}

#[test]
fn manifest_records_delay_and_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::with_seed(3)
        .set("out_dir", dir.path().to_str().unwrap())
        .unwrap()
        .set("detuning_hz", "3e5")
        .unwrap();
    let state = commands::generate(&cfg).unwrap();
    commands::store(&cfg, &state, &[(0.0, 400e-9)]).unwrap();
    let m = report(&dir.path().join("store.manifest"));
    assert!((number(&m, "stored.delay_s") + 400e-9).abs() < 1e-20);
    let rotation = number(&m, "stored.rotation_rad");
    assert!((rotation + std::f64::consts::TAU * 3e5 * 400e-9).abs() < 1e-12);
    let rho = commands::load_matrix(&dir.path().join(commands::STORED_FILE)).unwrap();
    assert!((rho.element(1, 0, 0, 1).arg() - rotation).abs() < 1e-12);
}

#[test]
fn timing_pairs_run_as_a_batch_and_feed_series_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("in.txt");
    let pairs = ["0,0", "0,4e-7", "2e-7,2e-7", "4e-7,4e-7"];
    let run = |args: &[&str]| {
        let out = bin().args(["--seed", "4", "--out"]).arg(dir.path()).args(args).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    run(&["generate"]);
    fs::rename(dir.path().join(commands::STATE_FILE), &state).unwrap();
    let mut args = vec!["store", "--state", state.to_str().unwrap()];
    for p in &pairs {
        args.extend(["--pair", p]);
    }
    let listed = run(&args);
    assert_eq!(listed.lines().count(), 4);
    for name in ["stored_0_0.txt", "stored_0_400.txt", "stored_200_200.txt", "stored_400_400.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let series = dir.path().join(commands::SERIES_FILE);
    run(&["analyze", "--series", series.to_str().unwrap()]);
    let table = commands::load_table(&dir.path().join(commands::SERIES_METRICS_FILE)).unwrap();
    assert_eq!(table.len(), 4);
    // equal delays, longer storage: less entanglement
    assert!(table[0][3] > table[2][3] && table[2][3] > table[3][3]);
}

#[test]
fn bell_state_analyzes_to_one_ebit() {
    let dir = tempfile::tempdir().unwrap();
    let bell = PureState::dual_rail(Cutoff::new(3).unwrap(), 1.0, 1.0, 0.0)
        .unwrap()
        .to_density();
    let path = dir.path().join("bell.txt");
    fs::write(&path, matrix_to_text(&bell)).unwrap();
    let cfg = ExperimentConfig::with_seed(1).set("out_dir", dir.path().to_str().unwrap()).unwrap();
    let r = commands::analyze(&cfg, AnalysisInput::State(&path), None).unwrap();
    assert!((r.log_negativity.value - 1.0).abs() < 1e-12);
    let written = report(&dir.path().join(commands::ANALYSIS_REPORT));
    assert!((number(&written, "log_negativity") - 1.0).abs() < 1e-12);
    assert!((number(&written, "wigner_origin") + 1.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
}

#[test]
fn pipeline_is_reproducible_across_runs_and_threads() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("small.txt");
    fs::write(&config, SMALL).unwrap();
    let run = |name: &str, threads: &str| -> PathBuf {
        let out = root.path().join(name);
        let status = bin()
            .args(["--config", config.to_str().unwrap(), "--threads", threads, "--out"])
            .arg(&out)
            .arg("pipeline")
            .status()
            .unwrap();
        assert!(status.success());
        out
    };
    let a = outputs(&run("a", "1"));
    assert_eq!(a, outputs(&run("b", "1")));
    assert_eq!(a, outputs(&run("c", "3")));
    assert!(a.iter().any(|(n, _)| n == commands::RECONSTRUCTED_FILE));
}

#[test]
fn stages_compose_to_the_pipeline() {
    let full = tempfile::tempdir().unwrap();
    let staged = tempfile::tempdir().unwrap();
    let cfg_full = small_config(full.path());
    commands::pipeline(&cfg_full).unwrap();

    let cfg = small_config(staged.path());
    let state = commands::generate(&cfg).unwrap();
    let stored = commands::store(&cfg, &state, &[(cfg.schedule.t1, cfg.schedule.t2)]).unwrap();
    let samples = commands::measure(&cfg, &stored[0]).unwrap();
    let rec = commands::reconstruct(&cfg, &samples).unwrap().require_converged().unwrap();
    commands::analyze(&cfg, AnalysisInput::State(&rec), Some(&samples)).unwrap();
    assert_eq!(outputs(full.path()), outputs(staged.path()));
    for m in ["generate", "store", "measure", "reconstruct", "analyze"] {
        dualrail_cli::manifest::verify(&staged.path().join(format!("{m}.manifest"))).unwrap();
    }
}

#[test]
fn seed_changes_the_samples() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = small_config(a.path());
    let cb = small_config(b.path()).set("seed", "12").unwrap();
    for c in [&ca, &cb] {
        let s = commands::generate(c).unwrap();
        commands::measure(c, &s).unwrap();
    }
    let read = |d: &Path| fs::read(d.join(commands::SAMPLES_FILE)).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
    assert_ne!(ca.hash(), cb.hash());
}

#[test]
fn bootstrap_attaches_error_bars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path()).set("bootstrap_resamples", "50").unwrap();
    let r = commands::pipeline(&cfg).unwrap();
    let e = r.log_negativity.error.unwrap();
    assert!(e > 0.0 && e < 0.3, "{e}");
    assert!(report(&dir.path().join(commands::ANALYSIS_REPORT)).get("log_negativity_stderr").is_some());
    let none = small_config(dir.path()).set("bootstrap_resamples", "50").unwrap();
    let state = dir.path().join(commands::RECONSTRUCTED_FILE);
    assert!(commands::analyze(&none, AnalysisInput::State(&state), None).is_err());
}

#[test]
fn reproduction_tables_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::with_seed(1).set("out_dir", dir.path().to_str().unwrap()).unwrap();
    let t = commands::reproduce(&cfg).unwrap();
    assert_eq!(t.series.len(), 5);
    assert!(t.series.windows(2).all(|w| w[1].1 < w[0].1));
    let table = commands::load_table(&dir.path().join("negativity_series.txt")).unwrap();
    assert_eq!(table.len(), 5);
    assert!(table.windows(2).all(|w| w[1][1] < w[0][1]));
    assert_eq!(t.pairs.len(), 4);
    // simultaneous release keeps the idler phase
    assert!(t.pairs.iter().filter(|p| p.t1 == p.t2).all(|p| p.coherence_phase.abs() < 1e-12));
    assert!((t.phase.frequency - 3e5).abs() < 1e-3);
    let w = commands::load_table(&dir.path().join("wigner_0_400.txt")).unwrap();
    assert_eq!(w.len(), 41 * 41);
}
