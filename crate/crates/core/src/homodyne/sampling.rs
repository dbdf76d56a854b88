//! Inverse-CDF sampling of joint quadratures.
//!
//! `x1` is drawn from its exact marginal and `x2` from the conditional
//! density given `x1`. Both CDFs are linear combinations of the cumulative
//! integrals of the products `psi_l psi_n`, which are tabulated once on a
//! fine grid; a draw then costs one binary search over that table.

use rand::Rng;
use rayon::prelude::*;

use super::{conditional_operator, uniform_axis, HomodyneBasis, QuadratureBatch};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Mode, C64};
use crate::seeds::substream;
use crate::special::hermite_functions;

pub const SAMPLING_RANGE: f64 = 6.0;
pub const SAMPLING_GRID_POINTS: usize = 4001;

/// Sampler for one state in one basis.
pub struct QuadratureSampler<'a> {
    rho: &'a DensityMatrix,
    basis: HomodyneBasis,
    axis: Vec<f64>,
    /// Cumulative trapezoid integrals of `psi_l psi_n` for `l <= n`, one table per pair.
    product_cdfs: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
    marginal_cdf: Vec<f64>,
}

impl<'a> QuadratureSampler<'a> {
    pub fn new(rho: &'a DensityMatrix, basis: HomodyneBasis) -> Self {
        let n = rho.cutoff().n_max();
        let axis = uniform_axis(-SAMPLING_RANGE, SAMPLING_RANGE, SAMPLING_GRID_POINTS);
        let psi: Vec<Vec<f64>> = axis.iter().map(|&x| hermite_functions(x, n)).collect();
        let pairs: Vec<(usize, usize)> = (0..=n)
            .flat_map(|l| (l..=n).map(move |m| (l, m)))
            .collect();
        let dx = axis[1] - axis[0];
        let product_cdfs: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(l, m)| {
                let mut acc = 0.0;
                let mut cdf = Vec::with_capacity(axis.len());
                cdf.push(0.0);
                for j in 1..axis.len() {
                    acc += 0.5 * dx * (psi[j - 1][l] * psi[j - 1][m] + psi[j][l] * psi[j][m]);
                    cdf.push(acc);
                }
                cdf
            })
            .collect();
        let mut sampler = QuadratureSampler {
            rho,
            basis,
            axis,
            product_cdfs,
            pairs,
            marginal_cdf: Vec::new(),
        };
        let coeffs = sampler.pair_coefficients(&rho.reduced(Mode::One), basis.phi1());
        sampler.marginal_cdf = (0..sampler.axis.len())
            .map(|j| sampler.cdf_value(&coeffs, j))
            .collect();
        sampler
    }

    /// Real weights `c_{ln}` with density `sum_{l<=n} c_{ln} psi_l psi_n`.
    fn pair_coefficients(&self, m: &nalgebra::DMatrix<C64>, phi: f64) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|&(l, n)| {
                if l == n {
                    m[(l, l)].re
                } else {
                    2.0 * (m[(l, n)] * C64::from_polar(1.0, phi * (l as f64 - n as f64))).re
                }
            })
            .collect()
    }

    fn cdf_value(&self, coeffs: &[f64], j: usize) -> f64 {
        coeffs
            .iter()
            .zip(&self.product_cdfs)
            .map(|(c, t)| c * t[j])
            .sum()
    }

    /// Inverts a piecewise-linear CDF given through `cdf(j)`.
    fn invert(&self, u: f64, cdf: impl Fn(usize) -> f64) -> f64 {
        let last = self.axis.len() - 1;
        let target = u * cdf(last);
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (c_lo, c_hi) = (cdf(lo), cdf(hi));
        let frac = if c_hi > c_lo {
            ((target - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        self.axis[lo] + frac * (self.axis[hi] - self.axis[lo])
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let x1 = self.invert(u1, |j| self.marginal_cdf[j]);
        let psi1 = hermite_functions(x1, self.rho.cutoff().n_max());
        let m = conditional_operator(self.rho, self.basis.phi1(), &psi1);
        let coeffs = self.pair_coefficients(&m, self.basis.phi2());
        let x2 = self.invert(u2, |j| self.cdf_value(&coeffs, j));
        (x1, x2)
    }
}

/// `n` independent quadrature pairs; identical for identical `(rho, basis, n, seed)`.
pub fn sample_quadratures(
    rho: &DensityMatrix,
    basis: HomodyneBasis,
    n: usize,
    seed: u64,
) -> Result<QuadratureBatch> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let sampler = QuadratureSampler::new(rho, basis);
    let mut rng = substream(seed, "quadratures", 0);
    let samples = (0..n).map(|_| sampler.draw(&mut rng)).collect();
    QuadratureBatch::new(basis, samples)
}

/// Samples every basis in parallel. Basis `i` uses the substream
/// `(seed, "quadratures", i)`, so output is independent of thread count.
pub fn sample_bases(
    rho: &DensityMatrix,
    bases: &[HomodyneBasis],
    n_per_basis: usize,
    seed: u64,
) -> Result<Vec<QuadratureBatch>> {
    if n_per_basis == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    bases
        .par_iter()
        .enumerate()
        .map(|(i, &basis)| {
            let sampler = QuadratureSampler::new(rho, basis);
            let mut rng = substream(seed, "quadratures", i as u64);
            let samples = (0..n_per_basis).map(|_| sampler.draw(&mut rng)).collect();
            QuadratureBatch::new(basis, samples)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Cutoff, PureState};
    use approx::assert_abs_diff_eq;

    fn moments(batch: &QuadratureBatch) -> (f64, f64, f64, f64) {
        let n = batch.len() as f64;
        let s = batch.samples();
        let m1 = s.iter().map(|p| p.0).sum::<f64>() / n;
        let m2 = s.iter().map(|p| p.1).sum::<f64>() / n;
        let v1 = s.iter().map(|p| (p.0 - m1).powi(2)).sum::<f64>() / n;
        let v2 = s.iter().map(|p| (p.1 - m2).powi(2)).sum::<f64>() / n;
        let cov = s.iter().map(|p| (p.0 - m1) * (p.1 - m2)).sum::<f64>() / n;
        (v1, v2, cov / (v1 * v2).sqrt(), s.iter().map(|p| p.0 * p.0).sum::<f64>() / n)
    }

    #[test]
    fn vacuum_variance() {
        let vac = DensityMatrix::vacuum(Cutoff::new(2).unwrap());
        let b = sample_quadratures(&vac, HomodyneBasis::new(0.4, 0.0), 100_000, 11).unwrap();
        let (v1, v2, _, _) = moments(&b);
        assert_abs_diff_eq!(v1, 0.5, epsilon = 0.01);
        assert_abs_diff_eq!(v2, 0.5, epsilon = 0.01);
    }

    #[test]
    fn single_photon_second_moment() {
        let one = PureState::fock(Cutoff::new(2).unwrap(), 1, 0).unwrap().to_density();
        let b = sample_quadratures(&one, HomodyneBasis::new(1.0, 0.0), 100_000, 5).unwrap();
        let (_, _, _, m2) = moments(&b);
        assert_abs_diff_eq!(m2, 1.5, epsilon = 0.02);
    }

    #[test]
    fn bell_correlation() {
        let bell = PureState::dual_rail(Cutoff::new(2).unwrap(), 1.0, 1.0, 0.0)
            .unwrap()
            .to_density();
        let b = sample_quadratures(&bell, HomodyneBasis::new(0.0, 0.0), 100_000, 3).unwrap();
        let (_, _, corr, _) = moments(&b);
        assert_abs_diff_eq!(corr, 0.5, epsilon = 0.02);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let bell = PureState::dual_rail(Cutoff::new(2).unwrap(), 1.0, 1.0, 0.0)
            .unwrap()
            .to_density();
        let bases = crate::homodyne::default_bases(3);
        let a = sample_bases(&bell, &bases, 50, 9).unwrap();
        let b = sample_bases(&bell, &bases, 50, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_bases(&bell, &bases, 50, 10).unwrap();
        assert_ne!(a, c);
        assert!(sample_quadratures(&bell, bases[0], 0, 1).is_err());
    }
}
