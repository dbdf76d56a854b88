//! Two-mode balanced homodyne detection.
//!
//! Quadratures follow `x = (a + a^dagger)/sqrt(2)` with vacuum variance 1/2.
//! A local-oscillator phase pair `(phi1, phi2)` measures the state
//! `R rho R^dagger` in the position basis, with
//! `R = exp(i (phi1 n1 + phi2 n2))`.

mod sampling;
mod traces;

pub use sampling::{sample_bases, sample_quadratures, QuadratureSampler, SAMPLING_GRID_POINTS, SAMPLING_RANGE};
pub use traces::{
    cross_correlation_lag, extract_envelope_pca, extract_quadratures, project_trace,
    simulate_traces, Envelope, EnvelopeShape, TimeGrid, TraceEnsemble,
};

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, C64};
use crate::special::hermite_functions;

pub const PDF_NORMALIZATION_TOL: f64 = 1e-6;

/// Local-oscillator phases of the two detectors, reduced to `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomodyneBasis {
    phi1: f64,
    phi2: f64,
}

impl HomodyneBasis {
    pub fn new(phi1: f64, phi2: f64) -> Self {
        HomodyneBasis {
            phi1: phi1.rem_euclid(TAU),
            phi2: phi2.rem_euclid(TAU),
        }
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }
}

/// Cartesian grid of `per_lo` equally spaced phases in `[0, pi)` per detector.
pub fn default_bases(per_lo: usize) -> Vec<HomodyneBasis> {
    let phases: Vec<f64> = (0..per_lo).map(|k| PI * k as f64 / per_lo as f64).collect();
    phases
        .iter()
        .flat_map(|&p1| phases.iter().map(move |&p2| HomodyneBasis::new(p1, p2)))
        .collect()
}

/// Quadrature pairs recorded in one basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureBatch {
    basis: HomodyneBasis,
    samples: Vec<(f64, f64)>,
}

impl QuadratureBatch {
    pub fn new(basis: HomodyneBasis, samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyData);
        }
        if samples.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter("non-finite quadrature sample".into()));
        }
        Ok(QuadratureBatch { basis, samples })
    }

    pub fn basis(&self) -> HomodyneBasis {
        self.basis
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Rectangular lattice of `(x1, x2)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl QuadratureGrid {
    /// Same uniform axis `[-half_width, half_width]` with `points` nodes for both modes.
    pub fn symmetric(half_width: f64, points: usize) -> Self {
        let axis = uniform_axis(-half_width, half_width, points);
        QuadratureGrid {
            x1: axis.clone(),
            x2: axis,
        }
    }
}

pub(crate) fn uniform_axis(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Trapezoid weights for a (possibly non-uniform) axis.
pub(crate) fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (axis[i + 1] - axis[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Real value of `sum_{l,n} m_{ln} e^{i phi (l - n)} psi_l psi_n`.
pub(crate) fn rotated_quadratic_form(m: &DMatrix<C64>, phi: f64, psi: &[f64]) -> f64 {
    let d = m.nrows();
    let mut acc = 0.0;
    for l in 0..d {
        acc += m[(l, l)].re * psi[l] * psi[l];
        for n in (l + 1)..d {
            let z = m[(l, n)] * C64::from_polar(1.0, phi * (l as f64 - n as f64));
            acc += 2.0 * z.re * psi[l] * psi[n];
        }
    }
    acc
}

/// Unnormalized mode-2 operator left after detecting `x1` on mode 1:
/// `M_{ln} = sum_{k,m} rho_{(k,l),(m,n)} e^{i phi1 (k-m)} psi_k(x1) psi_m(x1)`.
pub(crate) fn conditional_operator(rho: &DensityMatrix, phi1: f64, psi1: &[f64]) -> DMatrix<C64> {
    let cutoff = rho.cutoff();
    let d = cutoff.mode_dim();
    let data = rho.matrix();
    let weights: Vec<C64> = (0..d * d)
        .map(|km| {
            let (k, m) = (km / d, km % d);
            C64::from_polar(psi1[k] * psi1[m], phi1 * (k as f64 - m as f64))
        })
        .collect();
    let mut out = DMatrix::zeros(d, d);
    for l in 0..d {
        for n in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                for m in 0..d {
                    acc += data[(cutoff.index(k, l), cutoff.index(m, n))] * weights[k * d + m];
                }
            }
            out[(l, n)] = acc;
        }
    }
    out
}

/// Joint density `p(x1, x2)` at a single point.
pub fn pdf_at(rho: &DensityMatrix, basis: &HomodyneBasis, x1: f64, x2: f64) -> f64 {
    let n = rho.cutoff().n_max();
    let m = conditional_operator(rho, basis.phi1, &hermite_functions(x1, n));
    rotated_quadratic_form(&m, basis.phi2, &hermite_functions(x2, n))
}

/// Joint quadrature density on a lattice (rows follow `x1`, columns `x2`).
///
/// Fails if the trapezoid integral over the lattice differs from 1 by more
/// than [`PDF_NORMALIZATION_TOL`], which signals a grid that is too narrow or
/// too coarse.
pub fn quadrature_pdf(
    rho: &DensityMatrix,
    basis: &HomodyneBasis,
    grid: &QuadratureGrid,
) -> Result<DMatrix<f64>> {
    let n = rho.cutoff().n_max();
    let psi2: Vec<Vec<f64>> = grid.x2.iter().map(|&x| hermite_functions(x, n)).collect();
    let mut out = DMatrix::zeros(grid.x1.len(), grid.x2.len());
    for (i, &x1) in grid.x1.iter().enumerate() {
        let m = conditional_operator(rho, basis.phi1, &hermite_functions(x1, n));
        for (j, p2) in psi2.iter().enumerate() {
            out[(i, j)] = rotated_quadratic_form(&m, basis.phi2, p2);
        }
    }
    let w1 = trapezoid_weights(&grid.x1);
    let w2 = trapezoid_weights(&grid.x2);
    let mut integral = 0.0;
    for (i, a) in w1.iter().enumerate() {
        for (j, b) in w2.iter().enumerate() {
            integral += a * b * out[(i, j)];
        }
    }
    if (integral - 1.0).abs() > PDF_NORMALIZATION_TOL {
        return Err(Error::GridNormalization { integral });
    }
    Ok(out)
}

/// Quadrature density of a single-mode state at LO phase `phi`.
pub fn single_mode_pdf(rho: &DMatrix<C64>, phi: f64, x: f64) -> f64 {
    let psi = hermite_functions(x, rho.nrows() - 1);
    rotated_quadratic_form(rho, phi, &psi)
}
