//! Pipeline stages. Each stage reads its inputs from files, writes its
//! outputs into the configured output directory and records a manifest, so
//! running the stages one by one gives the same files as `pipeline`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dualrail_core::analysis::{
    fit_phase_rotation, log_negativity_subspace, wigner_cross_section, wigner_origin, AnalysisReport,
    Estimate, NegativityCalibration, NegativitySeriesModel, PhaseFit, PhaseSpaceGrid, SeriesPoint,
    StateMetrics,
};
use dualrail_core::channels::{
    storage_losses, store as store_state, DecayModel, DephasingParams, LossParams, ReleaseSchedule,
};
use dualrail_core::fock::DensityMatrix;
use dualrail_core::homodyne::{
    cross_correlation_lag, extract_envelope_pca, extract_quadratures, sample_bases, simulate_traces,
};
use dualrail_core::source::{herald_single_click, mix_fake_counts};
use dualrail_core::tomography::{bootstrap, mle_reconstruct};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::formats::{
    float, matrix_from_text, matrix_to_text, read_text, samples_from_text, samples_to_text,
    table_from_text, table_to_text, write_atomic, Report,
};
use crate::manifest::RunManifest;

pub const STATE_FILE: &str = "state.txt";
pub const SOURCE_REPORT: &str = "source.txt";
pub const STORED_FILE: &str = "stored.txt";
pub const STORAGE_REPORT: &str = "storage.txt";
pub const SERIES_FILE: &str = "series.txt";
pub const SAMPLES_FILE: &str = "samples.txt";
pub const ENVELOPES_FILE: &str = "envelopes.txt";
pub const MEASUREMENT_REPORT: &str = "measurement.txt";
pub const RECONSTRUCTED_FILE: &str = "reconstructed.txt";
pub const RECONSTRUCTION_REPORT: &str = "reconstruction.txt";
pub const LIKELIHOOD_FILE: &str = "likelihood.txt";
pub const ANALYSIS_REPORT: &str = "analysis.txt";
pub const SERIES_METRICS_FILE: &str = "series_metrics.txt";
pub const WIGNER_FILE: &str = "wigner_cross_section.txt";

/// Cross-section grid: 41 points per axis over `[-3, 3]`.
const WIGNER_HALF_WIDTH: f64 = 3.0;
const WIGNER_POINTS: usize = 41;

pub fn load_matrix(path: &Path) -> Result<DensityMatrix> {
    matrix_from_text(path, &read_text(path)?)
}

fn write_matrix(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_atomic(path, matrix_to_text(rho).as_bytes())
}

fn write_report(path: &Path, report: &Report) -> Result<()> {
    write_atomic(path, report.to_text().as_bytes())
}

fn coherence_phase(rho: &DensityMatrix) -> f64 {
    rho.element(1, 0, 0, 1).arg()
}

fn one_photon_weight(rho: &DensityMatrix) -> f64 {
    rho.population(0, 1) + rho.population(1, 0)
}

fn nanoseconds(t: f64) -> String {
    let ns = t * 1e9;
    if (ns - ns.round()).abs() < 1e-6 {
        format!("{}", ns.round() as i64)
    } else {
        format!("{ns:.3}")
    }
}

/// Heralds the source, mixes in fake counts and writes `state.txt`.
pub fn generate(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let start = Instant::now();
    let dir = &cfg.out_dir;
    let outcome = herald_single_click(&cfg.source)?;
    let rho = mix_fake_counts(&outcome.state.to_density(), &cfg.fake);
    let state_path = dir.join(STATE_FILE);
    write_matrix(&state_path, &rho)?;

    if cfg.source.strong_pump_warning() {
        eprintln!("warning: pump amplitude outside the weak-pump regime; multi-pair terms are significant");
    }
    let rates = cfg.rates;
    let mut r = Report::new();
    r.num("herald_probability", outcome.herald_prob)
        .num("fake_count_fraction", cfg.fake.l_fake())
        .num("duty_cycle", rates.duty_cycle)
        .num("herald_rate_raw_per_s", rates.herald)
        .num("herald_rate_duty_corrected_per_s", rates.duty_corrected(rates.herald))
        .num("fake_rate_raw_per_s", rates.fake)
        .num("fake_rate_duty_corrected_per_s", rates.duty_corrected(rates.fake))
        .num("one_photon_weight", one_photon_weight(&rho))
        .num("coherence_phase_rad", coherence_phase(&rho))
        .text("strong_pump_warning", cfg.source.strong_pump_warning());
    let report_path = dir.join(SOURCE_REPORT);
    write_report(&report_path, &r)?;

    let mut m = RunManifest::new("generate", cfg);
    m.output("state", &state_path, dir)?
        .output("report", &report_path, dir)?;
    m.time("total", start.elapsed());
    m.write(dir)?;
    Ok(state_path)
}

/// Output name for a stored state; a single pair keeps the plain name.
pub fn stored_name(t1: f64, t2: f64, batch: bool) -> String {
    if batch {
        format!("stored_{}_{}.txt", nanoseconds(t1), nanoseconds(t2))
    } else {
        STORED_FILE.to_string()
    }
}

/// Applies storage for every `(t1, t2)` pair. A batch also writes
/// `series.txt`, which `analyze --series` reads.
pub fn store(cfg: &ExperimentConfig, input: &Path, pairs: &[(f64, f64)]) -> Result<Vec<PathBuf>> {
    if pairs.is_empty() {
        return Err(CliError::Config("no release times given".into()));
    }
    let start = Instant::now();
    let dir = &cfg.out_dir;
    let rho = load_matrix(input)?;
    let batch = pairs.len() > 1;
    let mut m = RunManifest::new("store", cfg);
    m.input("state", input, dir)?;
    let mut report = Report::new();
    let mut series = String::from("# t1_s t2_s file\n");
    let mut outputs = Vec::with_capacity(pairs.len());

    for &(t1, t2) in pairs {
        let schedule = ReleaseSchedule::new(t1, t2, cfg.schedule.delta_omega).map_err(|e| CliError::Config(e.to_string()))?;
        let losses = storage_losses(&cfg.memory1, &cfg.memory2, &schedule)?;
        let stored = store_state(&rho, &losses, &cfg.dephasing, &schedule);
        let name = stored_name(t1, t2, batch);
        let path = dir.join(&name);
        write_matrix(&path, &stored)?;

        let stem = name.trim_end_matches(".txt");
        report
            .num(&format!("{stem}.t1_s"), t1)
            .num(&format!("{stem}.t2_s"), t2)
            .num(&format!("{stem}.delay_s"), schedule.delay())
            .num(&format!("{stem}.loss1"), losses.l1)
            .num(&format!("{stem}.loss2"), losses.l2)
            .num(&format!("{stem}.sigma_rad"), cfg.dephasing.sigma)
            .num(&format!("{stem}.rotation_rad"), schedule.relative_phase())
            .num(&format!("{stem}.coherence_phase_rad"), coherence_phase(&stored));
        m.notes
            .num(&format!("{stem}.delay_s"), schedule.delay())
            .num(&format!("{stem}.rotation_rad"), schedule.relative_phase());
        series.push_str(&format!("{} {} {name}\n", float(t1), float(t2)));
        m.output(stem, &path, dir)?;
        outputs.push(path);
    }
    let report_path = dir.join(STORAGE_REPORT);
    write_report(&report_path, &report)?;
    m.output("report", &report_path, dir)?;
    if batch {
        let series_path = dir.join(SERIES_FILE);
        write_atomic(&series_path, series.as_bytes())?;
        m.output("series", &series_path, dir)?;
    }
    m.time("total", start.elapsed());
    m.write(dir)?;
    Ok(outputs)
}

/// Samples quadratures of the stored state in every basis of the plan,
/// either directly or through simulated detector traces.
pub fn measure(cfg: &ExperimentConfig, input: &Path) -> Result<PathBuf> {
    let start = Instant::now();
    let dir = &cfg.out_dir;
    let rho = load_matrix(input)?;
    let plan = &cfg.plan;
    let mut report = Report::new();
    let mut m = RunManifest::new("measure", cfg);
    m.input("state", input, dir)?;

    let batches = if cfg.measure_via_traces {
        let true_env = [
            cfg.envelope.envelope(cfg.grid, cfg.schedule.t1)?,
            cfg.envelope.envelope(cfg.grid, cfg.schedule.t2)?,
        ];
        let [e1, e2] = simulate_traces(&rho, [&true_env[0], &true_env[1]], &plan.bases, plan.samples_per_basis, cfg.seed)?;
        let est = [extract_envelope_pca(&e1)?, extract_envelope_pca(&e2)?];
        let rows: Vec<Vec<f64>> = cfg
            .grid
            .times()
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                vec![t, true_env[0].values()[k], est[0].values()[k], true_env[1].values()[k], est[1].values()[k]]
            })
            .collect();
        let env_path = dir.join(ENVELOPES_FILE);
        write_atomic(
            &env_path,
            table_to_text(&["t_s", "true1", "extracted1", "true2", "extracted2"], &rows).as_bytes(),
        )?;
        m.output("envelopes", &env_path, dir)?;
        report
            .text("mode", "traces")
            .num("envelope1_overlap", est[0].overlap(&true_env[0])?)
            .num("envelope2_overlap", est[1].overlap(&true_env[1])?)
            .text("envelope_lag_steps", cross_correlation_lag(&est[0], &est[1])?);
        extract_quadratures([&e1, &e2], [&est[0], &est[1]])?
    } else {
        report.text("mode", "direct");
        sample_bases(&rho, &plan.bases, plan.samples_per_basis, cfg.seed)?
    };
    report
        .text("bases", batches.len())
        .text("samples_per_basis", plan.samples_per_basis);

    let samples_path = dir.join(SAMPLES_FILE);
    write_atomic(&samples_path, samples_to_text(&batches).as_bytes())?;
    let report_path = dir.join(MEASUREMENT_REPORT);
    write_report(&report_path, &report)?;
    m.output("samples", &samples_path, dir)?
        .output("report", &report_path, dir)?;
    m.time("total", start.elapsed());
    m.write(dir)?;
    Ok(samples_path)
}

pub struct ReconstructOutcome {
    pub path: PathBuf,
    pub converged: bool,
    pub iterations: usize,
    pub final_update_norm: f64,
}

impl ReconstructOutcome {
    /// Turns a non-converged run into an error; the files are already written.
    pub fn require_converged(self) -> Result<PathBuf> {
        if self.converged {
            Ok(self.path)
        } else {
            Err(CliError::NotConverged {
                iterations: self.iterations,
                update: self.final_update_norm,
            })
        }
    }
}

/// Maximum-likelihood reconstruction of a samples file.
pub fn reconstruct(cfg: &ExperimentConfig, input: &Path) -> Result<ReconstructOutcome> {
    let start = Instant::now();
    let dir = &cfg.out_dir;
    let data = samples_from_text(input, &read_text(input)?)?;
    let rec = mle_reconstruct(&data, &cfg.plan)?;
    let diag = &rec.diagnostics;
    if diag.low_sample_warning {
        eprintln!("warning: few samples for the reconstruction dimension");
    }

    let path = dir.join(RECONSTRUCTED_FILE);
    write_matrix(&path, &rec.state)?;
    let mut r = Report::new();
    r.text("bases", data.len())
        .text("samples", data.iter().map(|b| b.len()).sum::<usize>())
        .text("iterations", diag.iterations)
        .text("converged", diag.converged)
        .num("final_update_norm", diag.final_update_norm)
        .text("damped_steps", diag.damped_steps)
        .text("low_sample_warning", diag.low_sample_warning)
        .num(
            "log_likelihood_per_sample",
            diag.log_likelihood.last().copied().unwrap_or(f64::NAN),
        );
    let report_path = dir.join(RECONSTRUCTION_REPORT);
    write_report(&report_path, &r)?;
    let rows: Vec<Vec<f64>> = diag
        .log_likelihood
        .iter()
        .enumerate()
        .map(|(i, &l)| vec![i as f64, l])
        .collect();
    let lik_path = dir.join(LIKELIHOOD_FILE);
    write_atomic(&lik_path, table_to_text(&["iteration", "log_likelihood_per_sample"], &rows).as_bytes())?;

    let mut m = RunManifest::new("reconstruct", cfg);
    m.input("samples", input, dir)?
        .output("state", &path, dir)?
        .output("report", &report_path, dir)?
        .output("likelihood", &lik_path, dir)?;
    m.time("total", start.elapsed());
    m.write(dir)?;
    Ok(ReconstructOutcome {
        path,
        converged: diag.converged,
        iterations: diag.iterations,
        final_update_norm: diag.final_update_norm,
    })
}

pub enum AnalysisInput<'a> {
    State(&'a Path),
    /// File of `t1 t2 path` rows; paths are relative to the file.
    Series(&'a Path),
}

fn read_series(path: &Path) -> Result<Vec<(f64, f64, PathBuf)>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| CliError::Format {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected `t1 t2 path`, found {} columns", fields.len())));
        }
        let t1: f64 = fields[0].parse().map_err(|_| bad(format!("cannot parse `{}`", fields[0])))?;
        let t2: f64 = fields[1].parse().map_err(|_| bad(format!("cannot parse `{}`", fields[1])))?;
        out.push((t1, t2, base.join(fields[2])));
    }
    if out.is_empty() {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            line: 1,
            message: "empty series".into(),
        });
    }
    Ok(out)
}

fn losses_at(cfg: &ExperimentConfig, t1: f64, t2: f64) -> Result<LossParams> {
    let schedule = ReleaseSchedule::new(t1, t2, cfg.schedule.delta_omega).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(storage_losses(&cfg.memory1, &cfg.memory2, &schedule)?)
}

fn fill_report(r: &mut Report, a: &AnalysisReport) {
    r.num("log_negativity", a.log_negativity.value);
    if let Some(e) = a.log_negativity.error {
        r.num("log_negativity_stderr", e);
    }
    r.num("log_negativity_raw", a.log_negativity_raw)
        .num("wigner_origin", a.wigner_origin.value);
    if let Some(e) = a.wigner_origin.error {
        r.num("wigner_origin_stderr", e);
    }
    if let Some(s) = a.sigma {
        r.num("sigma_rad", s).num("sigma_deg", s.to_degrees());
    }
    if let Some(amp) = a.amplitudes {
        r.num("alpha_raw", amp.alpha_raw)
            .num("beta_raw", amp.beta_raw)
            .num("alpha", amp.alpha)
            .num("beta", amp.beta)
            .num("alpha_beta_squared_ratio", amp.squared_ratio());
    }
    if let Some(f) = a.rotation_frequency {
        r.num("rotation_frequency_hz", f);
    }
}

fn cross_section_rows(rho: &DensityMatrix) -> Result<Vec<Vec<f64>>> {
    let grid = PhaseSpaceGrid::symmetric(WIGNER_HALF_WIDTH, WIGNER_POINTS)?;
    let w = wigner_cross_section(rho, &grid);
    Ok(grid
        .x
        .iter()
        .enumerate()
        .flat_map(|(i, &x)| grid.p.iter().enumerate().map(move |(j, &p)| (i, j, x, p)))
        .map(|(i, j, x, p)| vec![x, p, w[(i, j)]])
        .collect())
}

/// Entanglement, Wigner and estimator report for one state or a series.
/// With `samples` and `bootstrap_resamples > 0`, error bars come from
/// resampling the measurement.
pub fn analyze(cfg: &ExperimentConfig, input: AnalysisInput, samples: Option<&Path>) -> Result<AnalysisReport> {
    let start = Instant::now();
    let dir = &cfg.out_dir;
    let mut m = RunManifest::new("analyze", cfg);
    let mut extra = Report::new();

    let report = match input {
        AnalysisInput::State(path) => {
            let rho = load_matrix(path)?;
            m.input("state", path, dir)?;
            let losses = losses_at(cfg, cfg.schedule.t1, cfg.schedule.t2)?;
            let mut report = AnalysisReport::from_metrics(&StateMetrics::evaluate(&rho, &losses)?);
            if cfg.bootstrap_resamples > 0 {
                let samples = samples.ok_or_else(|| {
                    CliError::Config("bootstrap_resamples needs a samples file (--samples)".into())
                })?;
                m.input("samples", samples, dir)?;
                let data = samples_from_text(samples, &read_text(samples)?)?;
                let summary = bootstrap(&data, &cfg.plan, cfg.bootstrap_resamples, cfg.seed, |r| {
                    Ok(vec![log_negativity_subspace(r)?.value, wigner_origin(r)])
                })?;
                report.log_negativity = Estimate {
                    value: report.log_negativity.value,
                    error: Some(summary.std_dev[0]),
                };
                report.wigner_origin = Estimate {
                    value: report.wigner_origin.value,
                    error: Some(summary.std_dev[1]),
                };
                extra.text("bootstrap_resamples", summary.resamples);
            }
            let w_path = dir.join(WIGNER_FILE);
            write_atomic(&w_path, table_to_text(&["x", "p", "W"], &cross_section_rows(&rho)?).as_bytes())?;
            m.output("wigner", &w_path, dir)?;
            report
        }
        AnalysisInput::Series(path) => {
            m.input("series", path, dir)?;
            let mut points = Vec::new();
            let mut states = Vec::new();
            for (t1, t2, file) in read_series(path)? {
                let rho = load_matrix(&file)?;
                m.input(&format!("series.{}", points.len()), &file, dir)?;
                let metrics = StateMetrics::evaluate(&rho, &losses_at(cfg, t1, t2)?)?;
                points.push(SeriesPoint { t1, t2, metrics });
                states.push((t1 - t2, rho));
            }
            let mut report = AnalysisReport::from_metrics(&points[0].metrics);
            let mut delays: Vec<f64> = states.iter().map(|s| s.0).collect();
            delays.sort_by(f64::total_cmp);
            delays.dedup();
            if delays.len() >= 3 {
                let fit = fit_phase_rotation(&states)?;
                report.rotation_frequency = Some(fit.frequency);
                extra.num("rotation_offset_rad", fit.offset);
            }
            let rows: Vec<Vec<f64>> = points
                .iter()
                .zip(&states)
                .map(|(p, (_, rho))| {
                    vec![
                        p.t1,
                        p.t2,
                        p.t1 - p.t2,
                        p.metrics.log_negativity.value,
                        p.metrics.log_negativity.raw,
                        p.metrics.wigner_origin,
                        p.metrics.sigma.unwrap_or(f64::NAN),
                        coherence_phase(rho),
                    ]
                })
                .collect();
            let table_path = dir.join(SERIES_METRICS_FILE);
            write_atomic(
                &table_path,
                table_to_text(
                    &["t1_s", "t2_s", "delay_s", "log_negativity", "log_negativity_raw", "wigner_origin", "sigma_rad", "coherence_phase_rad"],
                    &rows,
                )
                .as_bytes(),
            )?;
            m.output("series_metrics", &table_path, dir)?;
            report.series = points;
            report
        }
    };

    let mut r = Report::new();
    fill_report(&mut r, &report);
    for (k, v) in extra.entries() {
        r.text(k, v);
    }
    r.text("series_points", report.series.len());
    let report_path = dir.join(ANALYSIS_REPORT);
    write_report(&report_path, &r)?;
    m.output("report", &report_path, dir)?;
    m.time("total", start.elapsed());
    m.write(dir)?;
    Ok(report)
}

/// generate, store, measure, reconstruct and analyze in one go.
pub fn pipeline(cfg: &ExperimentConfig) -> Result<AnalysisReport> {
    let state = generate(cfg)?;
    let stored = store(cfg, &state, &[(cfg.schedule.t1, cfg.schedule.t2)])?;
    let samples = measure(cfg, &stored[0])?;
    let outcome = reconstruct(cfg, &samples)?;
    let report = analyze(cfg, AnalysisInput::State(&outcome.path), Some(&samples))?;
    outcome.require_converged()?;
    Ok(report)
}

/// Measured negativity versus common storage time, `(t, E)`.
pub const REFERENCE_SERIES: [(f64, f64); 5] = [
    (0.0, 0.386),
    (100e-9, 0.333),
    (200e-9, 0.265),
    (300e-9, 0.209),
    (400e-9, 0.150),
];
/// Leading points of the reference series used for calibration.
pub const CALIBRATION_POINTS: usize = 2;
pub const TIMING_PAIRS: [(f64, f64); 4] = [(0.0, 0.0), (0.0, 400e-9), (200e-9, 200e-9), (400e-9, 400e-9)];
pub const PHASE_DETUNING_HZ: f64 = 300e3;
pub const PHASE_DELAYS: [f64; 5] = [0.0, 100e-9, 200e-9, 300e-9, 400e-9];

pub fn series_model(cfg: &ExperimentConfig) -> NegativitySeriesModel {
    NegativitySeriesModel {
        tau1: cfg.memory1.tau,
        tau2: cfg.memory2.tau,
        fake: cfg.fake,
    }
}

/// Fits `(eta0, sigma)` to the calibration points of the reference series.
pub fn calibrate_series(cfg: &ExperimentConfig) -> Result<NegativityCalibration> {
    Ok(series_model(cfg).calibrate(&REFERENCE_SERIES[..CALIBRATION_POINTS])?)
}

pub struct PairRow {
    pub t1: f64,
    pub t2: f64,
    pub log_negativity: f64,
    pub wigner_origin: f64,
    pub coherence_phase: f64,
}

pub struct ReproductionTables {
    pub calibration: NegativityCalibration,
    /// `(t, model E, reference E)`
    pub series: Vec<(f64, f64, f64)>,
    pub pairs: Vec<PairRow>,
    pub phase: PhaseFit,
}

/// Noiseless heralded state stored with calibrated memories and a 300 kHz detuning.
fn calibrated_state(cfg: &ExperimentConfig, cal: &NegativityCalibration, t1: f64, t2: f64) -> Result<DensityMatrix> {
    let heralded = herald_single_click(&cfg.source)?.state.to_density();
    let rho = mix_fake_counts(&heralded, &cfg.fake);
    let schedule = ReleaseSchedule::new(t1, t2, std::f64::consts::TAU * PHASE_DETUNING_HZ)?;
    let losses = storage_losses(
        &DecayModel::new(cal.eta0, cfg.memory1.tau)?,
        &DecayModel::new(cal.eta0, cfg.memory2.tau)?,
        &schedule,
    )?;
    Ok(store_state(&rho, &losses, &DephasingParams::new(cal.sigma)?, &schedule))
}

/// Calibrated negativity series, timing-pair table with Wigner cross
/// sections, and the phase-rotation fit, written as plot-ready columns.
pub fn reproduce(cfg: &ExperimentConfig) -> Result<ReproductionTables> {
    let start = Instant::now();
    let dir = &cfg.out_dir;
    let mut m = RunManifest::new("reproduce", cfg);

    let calibration = calibrate_series(cfg)?;
    let model = series_model(cfg);
    let series = REFERENCE_SERIES
        .iter()
        .map(|&(t, e)| Ok((t, model.negativity_at(calibration.eta0, calibration.sigma, t)?, e)))
        .collect::<Result<Vec<_>>>()?;
    let series_path = dir.join("negativity_series.txt");
    let rows: Vec<Vec<f64>> = series.iter().map(|&(t, e, r)| vec![t * 1e9, e, r]).collect();
    write_atomic(&series_path, table_to_text(&["t_ns", "log_negativity_model", "log_negativity_reference"], &rows).as_bytes())?;
    m.output("negativity_series", &series_path, dir)?;

    let mut pairs = Vec::new();
    for &(t1, t2) in &TIMING_PAIRS {
        let rho = calibrated_state(cfg, &calibration, t1, t2)?;
        let name = format!("wigner_{}_{}.txt", nanoseconds(t1), nanoseconds(t2));
        let path = dir.join(&name);
        write_atomic(&path, table_to_text(&["x", "p", "W"], &cross_section_rows(&rho)?).as_bytes())?;
        m.output(name.trim_end_matches(".txt"), &path, dir)?;
        pairs.push(PairRow {
            t1,
            t2,
            log_negativity: log_negativity_subspace(&rho)?.value,
            wigner_origin: wigner_origin(&rho),
            coherence_phase: coherence_phase(&rho),
        });
    }
    let pairs_path = dir.join("timing_pairs.txt");
    let rows: Vec<Vec<f64>> = pairs
        .iter()
        .map(|p| vec![p.t1 * 1e9, p.t2 * 1e9, (p.t1 - p.t2) * 1e9, p.log_negativity, p.wigner_origin, p.coherence_phase])
        .collect();
    write_atomic(
        &pairs_path,
        table_to_text(&["t1_ns", "t2_ns", "delay_ns", "log_negativity", "wigner_origin", "coherence_phase_rad"], &rows).as_bytes(),
    )?;
    m.output("timing_pairs", &pairs_path, dir)?;

    let states = PHASE_DELAYS
        .iter()
        .map(|&d| Ok((d, calibrated_state(cfg, &calibration, d, 0.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let phase = fit_phase_rotation(&states)?;
    let phase_path = dir.join("phase_rotation.txt");
    let rows: Vec<Vec<f64>> = phase.phases.iter().map(|&(d, p)| vec![d * 1e9, p]).collect();
    write_atomic(&phase_path, table_to_text(&["delay_ns", "phase_rad"], &rows).as_bytes())?;
    m.output("phase_rotation", &phase_path, dir)?;

    let mut r = Report::new();
    r.num("eta0", calibration.eta0)
        .num("sigma_rad", calibration.sigma)
        .num("sigma_deg", calibration.sigma.to_degrees())
        .num("calibration_residual", calibration.residual)
        .text("series_strictly_decreasing", series.windows(2).all(|w| w[1].1 < w[0].1))
        .num("rotation_frequency_hz", phase.frequency)
        .num("rotation_offset_rad", phase.offset);
    let report_path = dir.join("reproduction.txt");
    write_report(&report_path, &r)?;
    m.output("report", &report_path, dir)?;
    m.time("total", start.elapsed());
    m.write(dir)?;
    Ok(ReproductionTables {
        calibration,
        series,
        pairs,
        phase,
    })
}

/// Reads a columnar table written by this crate.
pub fn load_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    table_from_text(path, &read_text(path)?)
}
