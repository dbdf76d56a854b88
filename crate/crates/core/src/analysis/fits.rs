//! Fits over storage-time series: rotation frequency, memory decay and the
//! two-parameter negativity calibration.

use std::f64::consts::{PI, TAU};

use crate::channels::{dephasing_channel, loss_channel, storage_losses, DecayModel, DephasingParams, ReleaseSchedule};
use crate::error::{Error, Result};
use crate::fock::{Cutoff, DensityMatrix, PureState};
use crate::source::{mix_fake_counts, FakeCountParams};

use super::negativity::log_negativity_subspace;

/// Wrapped steps larger than this between neighbouring delays are refused.
pub const UNWRAP_LIMIT: f64 = 0.75 * PI;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseFit {
    /// Hz; positive when `|1,0>` gains phase as `t1 - t2` grows.
    pub frequency: f64,
    /// Phase at zero delay, rad.
    pub offset: f64,
    /// `(delay, unwrapped phase)` sorted by delay.
    pub phases: Vec<(f64, f64)>,
}

fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateInput("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fits `phase = 2 pi f delay + c` to wrapped phases.
pub fn fit_phase_series(points: &[(f64, f64)]) -> Result<PhaseFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "phase fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut unwrapped = vec![sorted[0]];
    for pair in sorted.windows(2) {
        let (prev_t, prev_raw) = pair[0];
        let (t, raw) = pair[1];
        let step = (raw - prev_raw + PI).rem_euclid(TAU) - PI;
        if step.abs() > UNWRAP_LIMIT {
            return Err(Error::UnwrapAmbiguity {
                from: prev_t,
                to: t,
                gap: step,
            });
        }
        let last = unwrapped.last().expect("nonempty").1;
        unwrapped.push((t, last + step));
    }
    let (slope, offset) = linear_fit(&unwrapped)?;
    Ok(PhaseFit {
        frequency: slope / TAU,
        offset,
        phases: unwrapped,
    })
}

/// Rotation frequency from `arg <1,0|rho|0,1>` over a series of `(t1 - t2, rho)`.
pub fn fit_phase_rotation(series: &[(f64, DensityMatrix)]) -> Result<PhaseFit> {
    let points = series
        .iter()
        .map(|(delay, rho)| {
            let z = rho.element(1, 0, 0, 1);
            if z.norm() == 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "no one-photon coherence at delay {delay:e} s"
                )));
            }
            Ok((*delay, z.arg()))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_phase_series(&points)
}

/// Log-linear least squares for `fraction = eta0 exp(-t / tau)`.
pub fn fit_exponential_decay(points: &[(f64, f64)]) -> Result<DecayModel> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "decay fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(bad) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "fractions must be positive, got {} at t = {:e}",
            bad.1, bad.0
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, f)| (t, f.ln())).collect();
    let (slope, intercept) = linear_fit(&logs)?;
    if slope >= 0.0 {
        return Err(Error::DegenerateInput("data show no decay".into()));
    }
    Ok(DecayModel {
        eta0: intercept.exp(),
        tau: -1.0 / slope,
    })
}

/// Storage model for a negativity-versus-storage-time series: the ideal
/// balanced state with fake-count vacuum, stored in both memories for the
/// same time `t`, with efficiencies `eta0 exp(-t / tau_i)` and Gaussian
/// phase noise `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativitySeriesModel {
    pub tau1: f64,
    pub tau2: f64,
    pub fake: FakeCountParams,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativityCalibration {
    pub eta0: f64,
    pub sigma: f64,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
}

impl NegativitySeriesModel {
    pub fn state_at(&self, eta0: f64, sigma: f64, t: f64) -> Result<DensityMatrix> {
        let cutoff = Cutoff::new(1)?;
        let ideal = PureState::dual_rail(cutoff, 1.0, 1.0, 0.0)?.to_density();
        let mixed = mix_fake_counts(&ideal, &self.fake);
        let losses = storage_losses(
            &DecayModel::new(eta0, self.tau1)?,
            &DecayModel::new(eta0, self.tau2)?,
            &ReleaseSchedule::new(t, t, 0.0)?,
        )?;
        let lossy = loss_channel(&mixed, &losses);
        Ok(dephasing_channel(&lossy, &DephasingParams::new(sigma)?))
    }

    pub fn negativity_at(&self, eta0: f64, sigma: f64, t: f64) -> Result<f64> {
        Ok(log_negativity_subspace(&self.state_at(eta0, sigma, t)?)?.value)
    }

    fn residual(&self, points: &[(f64, f64)], eta0: f64, sigma: f64) -> f64 {
        points
            .iter()
            .map(|&(t, e)| match self.negativity_at(eta0, sigma, t) {
                Ok(m) => (m - e).powi(2),
                Err(_) => f64::INFINITY,
            })
            .sum()
    }

    /// Least-squares `(eta0, sigma)` with `eta0` in `(0, 1]` and `sigma` in `[0, pi]`.
    pub fn calibrate(&self, points: &[(f64, f64)]) -> Result<NegativityCalibration> {
        if points.is_empty() {
            return Err(Error::EmptyData);
        }
        let best_eta = |sigma: f64| minimize_bounded(|eta| self.residual(points, eta, sigma), 1e-6, 1.0);
        let (sigma, residual) = minimize_bounded(|s| best_eta(s).1, 0.0, PI);
        let (eta0, _) = best_eta(sigma);
        Ok(NegativityCalibration {
            eta0,
            sigma,
            residual,
        })
    }
}

/// Grid scan followed by golden-section refinement around the best node.
fn minimize_bounded(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const NODES: usize = 41;
    let step = (hi - lo) / (NODES - 1) as f64;
    let (best, _) = (0..NODES)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 * (1.0 + a.abs() + b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    // the bounds themselves may be optimal
    [(a, f(a)), ((a + b) / 2.0, f((a + b) / 2.0)), (b, f(b))]
        .into_iter()
        .fold((a, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc })
}
