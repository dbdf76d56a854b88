//! Entanglement, phase-space and storage metrics.

mod estimators;
mod fits;
mod negativity;
mod wigner;

pub use estimators::{estimate_amplitudes, estimate_dephasing, AmplitudeEstimate, COHERENCE_RATIO_TOL};
pub use fits::{
    fit_exponential_decay, fit_phase_rotation, fit_phase_series, NegativityCalibration,
    NegativitySeriesModel, PhaseFit, UNWRAP_LIMIT,
};
pub use negativity::{
    log_negativity, log_negativity_subspace, negativity, qubit_block, Negativity, EIGENVALUE_ZERO_TOL,
    QUBIT_SUBSPACE,
};
pub use wigner::{
    element_wigner, wigner, wigner_at, wigner_cross_section, wigner_origin, PhaseSpaceGrid, WignerGrid,
    PHASE_SPACE_LIMIT,
};

use crate::channels::LossParams;
use crate::error::Result;
use crate::fock::DensityMatrix;

/// Metrics of one reconstructed state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateMetrics {
    pub log_negativity: Negativity,
    pub wigner_origin: f64,
    /// rad; infinite when the coherence vanishes, `None` without one-photon population.
    pub sigma: Option<f64>,
    pub amplitudes: Option<AmplitudeEstimate>,
}

impl StateMetrics {
    pub fn evaluate(rho: &DensityMatrix, losses: &LossParams) -> Result<Self> {
        Ok(StateMetrics {
            log_negativity: log_negativity_subspace(rho)?,
            wigner_origin: wigner_origin(rho),
            sigma: estimate_dephasing(rho).ok(),
            amplitudes: estimate_amplitudes(rho, losses).ok(),
        })
    }
}

/// Value with an optional bootstrap standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub t1: f64,
    pub t2: f64,
    pub metrics: StateMetrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub log_negativity: Estimate,
    /// Unclamped negativity of the main state.
    pub log_negativity_raw: f64,
    pub wigner_origin: Estimate,
    pub sigma: Option<f64>,
    pub amplitudes: Option<AmplitudeEstimate>,
    /// Hz, when a delay series is analyzed.
    pub rotation_frequency: Option<f64>,
    pub series: Vec<SeriesPoint>,
}

impl AnalysisReport {
    pub fn from_metrics(m: &StateMetrics) -> Self {
        AnalysisReport {
            log_negativity: Estimate {
                value: m.log_negativity.value,
                error: None,
            },
            log_negativity_raw: m.log_negativity.raw,
            wigner_origin: Estimate {
                value: m.wigner_origin,
                error: None,
            },
            sigma: m.sigma,
            amplitudes: m.amplitudes,
            rotation_frequency: None,
            series: Vec::new(),
        }
    }
}
