//! Continuous homodyne traces, temporal-mode projection and principal
//! component extraction of the wave-packet envelope.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{HomodyneBasis, QuadratureBatch, QuadratureSampler};
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::seeds::substream;

pub const ENVELOPE_NORM_TOL: f64 = 1e-9;
/// Vacuum variance of one orthonormal discrete mode.
pub const VACUUM_VARIANCE: f64 = 0.5;
pub const MIN_PCA_TRACES: usize = 100;

/// Uniform sampling grid `start + k * dt`, `k < len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0) || len < 2 || !start.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time grid needs dt > 0 and at least two points, got dt={dt}, len={len}"
            )));
        }
        Ok(TimeGrid { start, dt, len })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + self.dt * k as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.time(k)).collect()
    }

    pub fn compatible(&self, other: &TimeGrid) -> bool {
        self.len == other.len
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.start - other.start).abs() <= 1e-9 * self.dt
    }
}

/// Discretized wave packet with `sum psi^2 dt = 1`, largest sample positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Envelope {
    /// Checks normalization and sign convention without modifying `values`.
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::DimensionMismatch {
                expected: grid.len,
                found: values.len(),
            });
        }
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>() * grid.dt;
        if (norm - 1.0).abs() > ENVELOPE_NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "envelope is not normalized: sum psi^2 dt = {norm}"
            )));
        }
        if peak(&values) < 0.0 {
            return Err(Error::InvalidParameter(
                "envelope sign convention violated: largest sample is negative".into(),
            ));
        }
        Ok(Envelope { grid, values })
    }

    /// Rescales to unit norm and flips the sign so the largest sample is positive.
    pub fn normalized(grid: TimeGrid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::DimensionMismatch {
                expected: grid.len,
                found: values.len(),
            });
        }
        let norm = (values.iter().map(|v| v * v).sum::<f64>() * grid.dt).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let sign = if peak(&values) < 0.0 { -1.0 } else { 1.0 };
        values.iter_mut().for_each(|v| *v *= sign / norm);
        Ok(Envelope { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `sum a b dt`
    pub fn overlap(&self, other: &Envelope) -> Result<f64> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.dt)
    }
}

/// Signed value of the largest-magnitude sample.
fn peak(values: &[f64]) -> f64 {
    values
        .iter()
        .copied()
        .fold(0.0, |best, v| if v.abs() > best.abs() { v } else { best })
}

/// One-sided exponential wave packet `theta(t - t0) exp(-gamma (t - t0) / 2)`
/// starting `latency` after the release time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeShape {
    /// Energy decay rate, 1/s.
    pub gamma: f64,
    /// Electronic trigger delay, s.
    pub latency: f64,
}

impl Default for EnvelopeShape {
    /// 99% of the energy within 400 ns, 40 ns trigger latency.
    fn default() -> Self {
        EnvelopeShape {
            gamma: 100f64.ln() / 400e-9,
            latency: 40e-9,
        }
    }
}

impl EnvelopeShape {
    pub fn envelope(&self, grid: TimeGrid, release: f64) -> Result<Envelope> {
        let onset = release + self.latency;
        // half a step of slack so onsets that land on a grid node are included
        let values = grid
            .times()
            .into_iter()
            .map(|t| {
                if t >= onset - 0.5 * grid.dt * 1e-6 {
                    (-self.gamma * (t - onset).max(0.0) / 2.0).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Envelope::normalized(grid, values)
    }
}

/// Raw traces from one detector, one row per heralding event.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEnsemble {
    grid: TimeGrid,
    traces: Vec<Vec<f64>>,
    bases: Vec<HomodyneBasis>,
}

impl TraceEnsemble {
    pub fn new(grid: TimeGrid, traces: Vec<Vec<f64>>, bases: Vec<HomodyneBasis>) -> Result<Self> {
        if traces.len() != bases.len() {
            return Err(Error::DimensionMismatch {
                expected: traces.len(),
                found: bases.len(),
            });
        }
        if let Some(bad) = traces.iter().find(|t| t.len() != grid.len) {
            return Err(Error::DimensionMismatch {
                expected: grid.len,
                found: bad.len(),
            });
        }
        Ok(TraceEnsemble { grid, traces, bases })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn traces(&self) -> &[Vec<f64>] {
        &self.traces
    }

    pub fn bases(&self) -> &[HomodyneBasis] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

/// Discrete weighted integral `sum psi(t) x(t) dt`.
pub fn project_trace(trace: &[f64], grid: &TimeGrid, envelope: &Envelope) -> Result<f64> {
    if !grid.compatible(&envelope.grid) || trace.len() != envelope.values.len() {
        return Err(Error::GridMismatch);
    }
    Ok(trace
        .iter()
        .zip(&envelope.values)
        .map(|(x, p)| x * p)
        .sum::<f64>()
        * grid.dt)
}

fn check_envelope(e: &Envelope) -> Result<()> {
    let norm: f64 = e.values.iter().map(|v| v * v).sum::<f64>() * e.grid.dt;
    if (norm - 1.0).abs() > ENVELOPE_NORM_TOL {
        return Err(Error::InvalidParameter(format!(
            "envelope is not normalized: sum psi^2 dt = {norm}"
        )));
    }
    Ok(())
}

/// White vacuum noise with the component along `envelope` removed.
fn complement_noise<R: rand::Rng + ?Sized>(envelope: &Envelope, rng: &mut R) -> Vec<f64> {
    let dt = envelope.grid.dt;
    let normal = Normal::new(0.0, (VACUUM_VARIANCE / dt).sqrt()).expect("positive std");
    let mut w: Vec<f64> = (0..envelope.grid.len).map(|_| normal.sample(rng)).collect();
    let along: f64 = w.iter().zip(&envelope.values).map(|(a, b)| a * b).sum::<f64>() * dt;
    w.iter_mut()
        .zip(&envelope.values)
        .for_each(|(x, p)| *x -= along * p);
    w
}

/// Simulates both detectors' traces for `n_per_basis` events in every basis.
///
/// Each trace is `psi(t) x + v(t)` where `x` is the mode quadrature drawn
/// from the state and `v` is vacuum noise orthogonal to `psi`, so projecting
/// onto `psi` returns `x` up to round-off. Basis `i` draws from the substream
/// `(seed, "traces", i)`.
pub fn simulate_traces(
    rho: &DensityMatrix,
    envelopes: [&Envelope; 2],
    bases: &[HomodyneBasis],
    n_per_basis: usize,
    seed: u64,
) -> Result<[TraceEnsemble; 2]> {
    for e in envelopes {
        check_envelope(e)?;
    }
    if n_per_basis == 0 {
        return Err(Error::InvalidParameter("trace count must be positive".into()));
    }
    let per_basis: Vec<[Vec<Vec<f64>>; 2]> = bases
        .par_iter()
        .enumerate()
        .map(|(i, &basis)| {
            let sampler = QuadratureSampler::new(rho, basis);
            let mut rng = substream(seed, "traces", i as u64);
            let mut t1 = Vec::with_capacity(n_per_basis);
            let mut t2 = Vec::with_capacity(n_per_basis);
            for _ in 0..n_per_basis {
                let (x1, x2) = sampler.draw(&mut rng);
                for (x, env, out) in [(x1, envelopes[0], &mut t1), (x2, envelopes[1], &mut t2)] {
                    let mut trace = complement_noise(env, &mut rng);
                    trace
                        .iter_mut()
                        .zip(&env.values)
                        .for_each(|(v, p)| *v += x * p);
                    out.push(trace);
                }
            }
            [t1, t2]
        })
        .collect();

    let labels: Vec<HomodyneBasis> = bases
        .iter()
        .flat_map(|&b| std::iter::repeat_n(b, n_per_basis))
        .collect();
    let (mut all1, mut all2) = (Vec::new(), Vec::new());
    for [a, b] in per_basis {
        all1.extend(a);
        all2.extend(b);
    }
    Ok([
        TraceEnsemble::new(envelopes[0].grid, all1, labels.clone())?,
        TraceEnsemble::new(envelopes[1].grid, all2, labels)?,
    ])
}

/// Projects paired traces onto their envelopes and groups them by basis in
/// order of first appearance.
pub fn extract_quadratures(
    ensembles: [&TraceEnsemble; 2],
    envelopes: [&Envelope; 2],
) -> Result<Vec<QuadratureBatch>> {
    let [e1, e2] = ensembles;
    if e1.len() != e2.len() || e1.bases != e2.bases {
        return Err(Error::InvalidParameter(
            "detector ensembles do not describe the same events".into(),
        ));
    }
    let mut groups: Vec<(HomodyneBasis, Vec<(f64, f64)>)> = Vec::new();
    for ((a, b), basis) in e1.traces.iter().zip(&e2.traces).zip(&e1.bases) {
        let x1 = project_trace(a, &e1.grid, envelopes[0])?;
        let x2 = project_trace(b, &e2.grid, envelopes[1])?;
        match groups.iter_mut().find(|(g, _)| g == basis) {
            Some((_, v)) => v.push((x1, x2)),
            None => groups.push((*basis, vec![(x1, x2)])),
        }
    }
    groups
        .into_iter()
        .map(|(b, s)| QuadratureBatch::new(b, s))
        .collect()
}

/// Leading temporal mode of an ensemble.
///
/// Builds the empirical autocorrelation `<x(t) x(t')>`, removes the vacuum
/// contribution `(1/2) / dt` on the diagonal and returns the eigenvector with
/// the largest-magnitude eigenvalue. Fails when that eigenvalue is within 1%
/// of the runner-up, or when it does not clear twice the largest excess that
/// pure vacuum noise produces for this many traces.
pub fn extract_envelope_pca(ensemble: &TraceEnsemble) -> Result<Envelope> {
    let n = ensemble.len();
    if n < MIN_PCA_TRACES {
        return Err(Error::InvalidParameter(format!(
            "principal component analysis needs at least {MIN_PCA_TRACES} traces, got {n}"
        )));
    }
    let grid = ensemble.grid;
    let t = grid.len;
    let mut cov = DMatrix::<f64>::zeros(t, t);
    for trace in &ensemble.traces {
        for i in 0..t {
            let xi = trace[i];
            for j in i..t {
                cov[(i, j)] += xi * trace[j];
            }
        }
    }
    for i in 0..t {
        for j in i..t {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let vacuum = VACUUM_VARIANCE / grid.dt;
    for i in 0..t {
        cov[(i, i)] -= vacuum;
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let lead = eig.eigenvalues[order[0]].abs();
    let second = eig.eigenvalues[order[1]].abs();
    if lead - second < 0.01 * lead {
        return Err(Error::AmbiguousMode(format!(
            "leading eigenvalues {lead:.4e} and {second:.4e} differ by less than 1%"
        )));
    }
    // Largest vacuum-only excess (Marchenko-Pastur edge) for t modes and n traces.
    let ratio = t as f64 / n as f64;
    let noise_edge = vacuum * ((1.0 + ratio.sqrt()).powi(2) - 1.0);
    if lead < 2.0 * noise_edge {
        return Err(Error::AmbiguousMode(format!(
            "no mode above the vacuum noise floor (leading excess {lead:.4e}, floor {noise_edge:.4e})"
        )));
    }
    let v = eig.eigenvectors.column(order[0]).iter().copied().collect();
    Envelope::normalized(grid, v)
}

/// Lag in grid steps maximizing `sum a(t) b(t + lag)`; positive when `b` is later.
pub fn cross_correlation_lag(a: &Envelope, b: &Envelope) -> Result<isize> {
    if !a.grid.compatible(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let n = a.values.len() as isize;
    let mut best = (0isize, f64::NEG_INFINITY);
    for lag in -(n - 1)..n {
        let s: f64 = (0..n)
            .filter(|&i| (0..n).contains(&(i + lag)))
            .map(|i| a.values[i as usize] * b.values[(i + lag) as usize])
            .sum();
        if s > best.1 {
            best = (lag, s);
        }
    }
    Ok(best.0)
}
