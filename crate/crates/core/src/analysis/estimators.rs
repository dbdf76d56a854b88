//! Amplitude and dephasing estimates read off the one-photon block.

use crate::channels::LossParams;
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;

pub const COHERENCE_RATIO_TOL: f64 = 1e-6;

/// Amplitudes of `alpha |0,1> + beta e^{i theta} |1,0>` before storage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeEstimate {
    /// `sqrt(population / transmission)`; their squares need not sum to 1
    /// when vacuum is mixed in.
    pub alpha_raw: f64,
    pub beta_raw: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl AmplitudeEstimate {
    /// `|alpha / beta|^2`
    pub fn squared_ratio(&self) -> f64 {
        (self.alpha / self.beta).powi(2)
    }
}

/// Undoes the per-mode loss on the one-photon populations. The photon of
/// `|0,1>` sits in mode 2, so its population is divided by `1 - l2`, and
/// the `|1,0>` population by `1 - l1`.
pub fn estimate_amplitudes(rho: &DensityMatrix, losses: &LossParams) -> Result<AmplitudeEstimate> {
    let p01 = rho.population(0, 1);
    let p10 = rho.population(1, 0);
    if p01 < 0.0 || p10 < 0.0 || p01 + p10 <= 0.0 {
        return Err(Error::DegenerateInput(
            "one-photon populations must be nonnegative and not both zero".into(),
        ));
    }
    if losses.l1 >= 1.0 || losses.l2 >= 1.0 {
        return Err(Error::DegenerateInput("total loss leaves nothing to estimate".into()));
    }
    let alpha_raw = (p01 / (1.0 - losses.l2)).sqrt();
    let beta_raw = (p10 / (1.0 - losses.l1)).sqrt();
    let norm = alpha_raw.hypot(beta_raw);
    Ok(AmplitudeEstimate {
        alpha_raw,
        beta_raw,
        alpha: alpha_raw / norm,
        beta: beta_raw / norm,
    })
}

/// Width of the Gaussian relative-phase noise implied by the one-photon
/// coherence, `sqrt(-2 ln(|rho_{01,10}| / sqrt(rho_{01,01} rho_{10,10})))`.
///
/// Returns `f64::INFINITY` when the coherence vanishes and an error when the
/// ratio exceeds 1 by more than [`COHERENCE_RATIO_TOL`].
pub fn estimate_dephasing(rho: &DensityMatrix) -> Result<f64> {
    let p01 = rho.population(0, 1);
    let p10 = rho.population(1, 0);
    if !(p01 > 0.0 && p10 > 0.0) {
        return Err(Error::DegenerateInput(
            "both one-photon populations must be positive".into(),
        ));
    }
    let ratio = rho.element(0, 1, 1, 0).norm() / (p01 * p10).sqrt();
    if ratio > 1.0 + COHERENCE_RATIO_TOL {
        return Err(Error::Unphysical(format!(
            "coherence exceeds the geometric mean of the populations (ratio {ratio})"
        )));
    }
    if ratio <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-2.0 * ratio.min(1.0).ln()).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephasing_channel, loss_channel, DephasingParams};
    use crate::fock::{Cutoff, PureState, C64};
    use crate::source::{mix_fake_counts, FakeCountParams};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn c1() -> Cutoff {
        Cutoff::new(1).unwrap()
    }

    /// Cutoff-1 state with the given populations and `|0,1><1,0|` coherence.
    fn block(p00: f64, p01: f64, p10: f64, coh: C64) -> DensityMatrix {
        let c = c1();
        let mut m = DMatrix::zeros(4, 4);
        m[(c.index(0, 0), c.index(0, 0))] = C64::new(p00, 0.0);
        m[(c.index(0, 1), c.index(0, 1))] = C64::new(p01, 0.0);
        m[(c.index(1, 0), c.index(1, 0))] = C64::new(p10, 0.0);
        m[(c.index(0, 1), c.index(1, 0))] = coh;
        m[(c.index(1, 0), c.index(0, 1))] = coh.conj();
        DensityMatrix::from_matrix_unchecked(c, m).unwrap()
    }

    #[test]
    fn ideal_amplitudes() {
        let bell = PureState::dual_rail(c1(), 1.0, 1.0, 0.0).unwrap().to_density();
        let a = estimate_amplitudes(&bell, &LossParams::none()).unwrap();
        assert_abs_diff_eq!(a.alpha, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.beta, 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn recovers_raw_amplitudes_through_loss_and_vacuum() {
        // populations implied by raw amplitudes 0.71 / 0.64 after loss
        let losses = LossParams::new(0.45, 0.35).unwrap();
        let (a, b) = (0.71f64, 0.64f64);
        let p01 = a * a * (1.0 - losses.l2);
        let p10 = b * b * (1.0 - losses.l1);
        let rho = block(1.0 - p01 - p10, p01, p10, C64::new(0.1, 0.0));
        let est = estimate_amplitudes(&rho, &losses).unwrap();
        assert_abs_diff_eq!(est.alpha_raw, 0.71, epsilon = 1e-12);
        assert_abs_diff_eq!(est.beta_raw, 0.64, epsilon = 1e-12);
        assert_abs_diff_eq!(est.alpha.hypot(est.beta), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unequal_splitter_ratio() {
        // normalized |alpha|^2 of 0.4 puts |beta/alpha| near 1.22
        let rho = block(0.2, 0.4 * 0.8, 0.6 * 0.8, C64::new(0.0, 0.0));
        let est = estimate_amplitudes(&rho, &LossParams::none()).unwrap();
        assert_abs_diff_eq!(est.alpha.powi(2), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(est.beta / est.alpha, 1.22, epsilon = 0.01);
    }

    #[test]
    fn amplitudes_need_population() {
        let vac = DensityMatrix::vacuum(c1());
        assert!(estimate_amplitudes(&vac, &LossParams::none()).is_err());
    }

    #[test]
    fn dephasing_examples() {
        let bell = PureState::dual_rail(c1(), 1.0, 1.0, 0.0).unwrap().to_density();
        assert_abs_diff_eq!(estimate_dephasing(&bell).unwrap(), 0.0, epsilon = 1e-7);
        let rho = block(0.0, 0.5, 0.5, C64::new(0.45, 0.0));
        let sigma = estimate_dephasing(&rho).unwrap();
        assert_abs_diff_eq!(sigma, 0.459, epsilon = 1e-3);
        assert_abs_diff_eq!(sigma.to_degrees(), 26.3, epsilon = 0.05);
        let none = block(0.0, 0.5, 0.5, C64::new(0.0, 0.0));
        assert_eq!(estimate_dephasing(&none).unwrap(), f64::INFINITY);
        let bad = block(0.0, 0.5, 0.5, C64::new(0.0, 0.6));
        assert!(matches!(estimate_dephasing(&bad), Err(Error::Unphysical(_))));
    }

    #[test]
    fn dephasing_is_invariant_under_loss_and_fake_counts() {
        let bell = PureState::dual_rail(Cutoff::new(2).unwrap(), 0.8, 0.6, 0.3)
            .unwrap()
            .to_density();
        let rho = dephasing_channel(&bell, &DephasingParams::new(0.5).unwrap());
        let rho = loss_channel(&rho, &LossParams::new(0.3, 0.6).unwrap());
        let rho = mix_fake_counts(&rho, &FakeCountParams::new(0.05).unwrap());
        assert_abs_diff_eq!(estimate_dephasing(&rho).unwrap(), 0.5, epsilon = 1e-9);
    }
}
