//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` are comments. Every key has a default except
//! `seed`, which must come from the file or the command line. Unknown keys
//! are rejected.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;

use dualrail_core::channels::{DecayModel, DephasingParams, ReleaseSchedule};
use dualrail_core::fock::{BeamSplitterParams, Cutoff};
use dualrail_core::homodyne::{default_bases, EnvelopeShape, TimeGrid};
use dualrail_core::source::{FakeCountParams, SourceParams};
use dualrail_core::tomography::TomographyPlan;

use crate::error::CliError;
use crate::formats::sha256_hex;

/// `(key, default, description)`; an empty default means required.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "", "master random seed (required)"),
    ("out_dir", "run", "output directory"),
    ("cutoff", "3", "photon-number cutoff per mode"),
    ("q1", "0.1", "pump amplitude of source 1"),
    ("q2", "0.1", "pump amplitude of source 2"),
    ("theta", "0", "idler-path phase, rad"),
    ("bs_transmissivity", "0.5", "power transmissivity of the idler beamsplitter"),
    ("herald_rate", "380", "genuine heralding rate, counts/s, duty cycle not compensated"),
    ("fake_rate", "20", "stray-light heralding rate, counts/s, duty cycle not compensated"),
    ("duty_cycle", "0.5", "fraction of time the probe beams are off"),
    ("eta0_1", "1", "base efficiency of memory 1"),
    ("tau1", "1.42e-6", "lifetime of memory 1, s"),
    ("eta0_2", "1", "base efficiency of memory 2"),
    ("tau2", "1.29e-6", "lifetime of memory 2, s"),
    ("sigma", "0", "relative-phase noise, rad"),
    ("t1", "0", "release time of memory 1, s"),
    ("t2", "0", "release time of memory 2, s"),
    ("detuning_hz", "0", "memory detuning from the local oscillator, Hz"),
    ("bases_per_lo", "7", "local-oscillator phases per detector, equally spaced in [0, pi)"),
    ("samples_per_basis", "3000", "quadrature pairs per basis"),
    ("max_iterations", "2000", "iteration limit of the likelihood maximization"),
    ("convergence_tol", "1e-6", "trace-norm update at which iteration stops"),
    ("measure_via_traces", "false", "simulate raw traces and extract quadratures by mode analysis"),
    ("envelope_gamma", "1.1512925464970229e7", "wave-packet energy decay rate, 1/s"),
    ("envelope_latency", "40e-9", "trigger latency before the wave packet, s"),
    ("grid_start", "0", "first trace sample, s"),
    ("grid_dt", "20e-9", "trace sampling interval, s"),
    ("grid_points", "51", "samples per trace"),
    ("bootstrap_resamples", "0", "bootstrap resamples for error bars, 0 to skip"),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountRates {
    pub herald: f64,
    pub fake: f64,
    pub duty_cycle: f64,
}

impl CountRates {
    pub fn duty_corrected(&self, raw: f64) -> f64 {
        raw / self.duty_cycle
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub source: SourceParams,
    pub fake: FakeCountParams,
    pub rates: CountRates,
    pub memory1: DecayModel,
    pub memory2: DecayModel,
    pub dephasing: DephasingParams,
    pub schedule: ReleaseSchedule,
    pub plan: TomographyPlan,
    pub envelope: EnvelopeShape,
    pub grid: TimeGrid,
    pub measure_via_traces: bool,
    pub bootstrap_resamples: usize,
}

fn parse_value<T: std::str::FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    let raw = values
        .get(key)
        .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))?;
    raw.parse()
        .map_err(|_| CliError::Config(format!("cannot parse `{key} = {raw}`")))
}

fn config_err(e: dualrail_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    /// Defaults plus the given text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::parse_with_overrides(text, &[])
    }

    /// Defaults, then the file text, then command-line `(key, value)` pairs.
    pub fn parse_with_overrides(text: &str, overrides: &[(&str, String)]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if !KEYS.iter().any(|(k, _, _)| *k == key) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", n + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        for (key, value) in overrides {
            if !KEYS.iter().any(|(k, _, _)| k == key) {
                return Err(CliError::Config(format!("unknown key `{key}`")));
            }
            values.insert(key.to_string(), value.clone());
        }
        Self::from_values(values)
    }

    /// Config with every key at its default and the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self::parse(&format!("seed = {seed}")).expect("defaults are valid")
    }

    /// Replaces one key and revalidates.
    pub fn set(&self, key: &str, value: &str) -> Result<Self, CliError> {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        let mut values = self.values.clone();
        values.insert(key.to_string(), value.to_string());
        Self::from_values(values)
    }

    fn from_values(mut values: BTreeMap<String, String>) -> Result<Self, CliError> {
        for (key, default, _) in KEYS {
            if !default.is_empty() {
                values.entry(key.to_string()).or_insert_with(|| default.to_string());
            }
        }
        let get_f = |k: &str| parse_value::<f64>(&values, k);
        let get_u = |k: &str| parse_value::<usize>(&values, k);

        let cutoff = Cutoff::new(get_u("cutoff")?).map_err(config_err)?;
        let bs = BeamSplitterParams::from_transmissivity(get_f("bs_transmissivity")?).map_err(config_err)?;
        let source = SourceParams::new(get_f("q1")?, get_f("q2")?, get_f("theta")?, bs, cutoff).map_err(config_err)?;
        let rates = CountRates {
            herald: get_f("herald_rate")?,
            fake: get_f("fake_rate")?,
            duty_cycle: get_f("duty_cycle")?,
        };
        if !(rates.duty_cycle > 0.0 && rates.duty_cycle <= 1.0) {
            return Err(CliError::Config(format!(
                "duty_cycle must lie in (0,1], got {}",
                rates.duty_cycle
            )));
        }
        let fake = FakeCountParams::from_rates(rates.herald, rates.fake).map_err(config_err)?;
        let memory1 = DecayModel::new(get_f("eta0_1")?, get_f("tau1")?).map_err(config_err)?;
        let memory2 = DecayModel::new(get_f("eta0_2")?, get_f("tau2")?).map_err(config_err)?;
        let dephasing = DephasingParams::new(get_f("sigma")?).map_err(config_err)?;
        let schedule =
            ReleaseSchedule::new(get_f("t1")?, get_f("t2")?, TAU * get_f("detuning_hz")?).map_err(config_err)?;
        let per_lo = get_u("bases_per_lo")?;
        if per_lo < 2 {
            return Err(CliError::Config("bases_per_lo must be at least 2".into()));
        }
        let plan = TomographyPlan {
            bases: default_bases(per_lo),
            samples_per_basis: get_u("samples_per_basis")?,
            cutoff,
            max_iterations: get_u("max_iterations")?,
            convergence_tol: get_f("convergence_tol")?,
        };
        plan.validate().map_err(config_err)?;
        let envelope = EnvelopeShape {
            gamma: get_f("envelope_gamma")?,
            latency: get_f("envelope_latency")?,
        };
        if !(envelope.gamma > 0.0) || !(envelope.latency >= 0.0) {
            return Err(CliError::Config(
                "envelope_gamma must be positive and envelope_latency nonnegative".into(),
            ));
        }
        let grid = TimeGrid::new(get_f("grid_start")?, get_f("grid_dt")?, get_u("grid_points")?).map_err(config_err)?;

        Ok(ExperimentConfig {
            seed: parse_value(&values, "seed")?,
            out_dir: PathBuf::from(&values["out_dir"]),
            source,
            fake,
            rates,
            memory1,
            memory2,
            dephasing,
            schedule,
            plan,
            envelope,
            grid,
            measure_via_traces: parse_value(&values, "measure_via_traces")?,
            bootstrap_resamples: get_u("bootstrap_resamples")?,
            values,
        })
    }

    /// Effective settings, one sorted `key = value` per line.
    pub fn canonical_text(&self) -> String {
        self.values
            .iter()
            .filter(|(k, _)| k.as_str() != "out_dir")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Hash of the effective settings; the output directory does not count.
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_text().as_bytes())
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}
