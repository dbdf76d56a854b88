//! Storage degradations: photon loss, relative-phase dephasing and the
//! detuning-induced rotation accumulated between releases.
//!
//! A storage leg applies loss, then dephasing, then rotation. The three maps
//! commute with each other on states of fixed total photon number.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{phase_rotation, Cutoff, DensityMatrix, Mode, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParams {
    pub l1: f64,
    pub l2: f64,
}

impl LossParams {
    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        for (name, l) in [("l1", l1), ("l2", l2)] {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::InvalidParameter(format!(
                    "loss {name} must lie in [0,1], got {l}"
                )));
            }
        }
        Ok(LossParams { l1, l2 })
    }

    pub fn none() -> Self {
        LossParams { l1: 0.0, l2: 0.0 }
    }

    pub fn from_efficiencies(eta1: f64, eta2: f64) -> Result<Self> {
        Self::new(1.0 - eta1, 1.0 - eta2)
    }
}

/// Exponential memory efficiency `eta(t) = eta0 exp(-t / tau)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayModel {
    pub eta0: f64,
    pub tau: f64,
}

impl DecayModel {
    pub fn new(eta0: f64, tau: f64) -> Result<Self> {
        if !(eta0 > 0.0 && eta0 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "base efficiency must lie in (0,1], got {eta0}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "memory lifetime must be positive, got {tau}"
            )));
        }
        Ok(DecayModel { eta0, tau })
    }
}

pub fn efficiency_at(d: &DecayModel, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "storage time must be nonnegative, got {t}"
        )));
    }
    Ok(d.eta0 * (-t / d.tau).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasingParams {
    pub sigma: f64,
}

impl DephasingParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dephasing sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(DephasingParams { sigma })
    }
}

/// Release times of both modes and the memory-to-LO detuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReleaseSchedule {
    pub t1: f64,
    pub t2: f64,
    /// rad/s
    pub delta_omega: f64,
}

impl ReleaseSchedule {
    pub fn new(t1: f64, t2: f64, delta_omega: f64) -> Result<Self> {
        if !(t1 >= 0.0 && t2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "release times must be nonnegative, got {t1} and {t2}"
            )));
        }
        if !delta_omega.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        Ok(ReleaseSchedule { t1, t2, delta_omega })
    }

    /// `t1 - t2`
    pub fn delay(&self) -> f64 {
        self.t1 - self.t2
    }

    /// Phase gained by `|1,0>` relative to `|0,1>`, `delta_omega * (t1 - t2)`.
    pub fn relative_phase(&self) -> f64 {
        self.delta_omega * self.delay()
    }
}

/// Single-mode pure-loss Kraus operators `K_j |n> = sqrt(C(n,j) eta^(n-j) L^j) |n-j>`.
fn loss_kraus_single(cutoff: Cutoff, loss: f64) -> Vec<DMatrix<f64>> {
    let d = cutoff.mode_dim();
    let eta = 1.0 - loss;
    (0..d)
        .map(|j| {
            let mut k = DMatrix::zeros(d, d);
            for n in j..d {
                let binom = binomial(n, j);
                k[(n - j, n)] = (binom * eta.powi((n - j) as i32) * loss.powi(j as i32)).sqrt();
            }
            k
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Lifts a single-mode operator onto the two-mode space.
fn lift(op: &DMatrix<f64>, cutoff: Cutoff, mode: Mode) -> DMatrix<C64> {
    let id = DMatrix::<f64>::identity(cutoff.mode_dim(), cutoff.mode_dim());
    let full = match mode {
        Mode::One => op.kronecker(&id),
        Mode::Two => id.kronecker(op),
    };
    full.map(|x| C64::new(x, 0.0))
}

fn apply_single_mode_loss(rho: &DMatrix<C64>, cutoff: Cutoff, mode: Mode, loss: f64) -> DMatrix<C64> {
    if loss == 0.0 {
        return rho.clone();
    }
    let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
    for k in loss_kraus_single(cutoff, loss) {
        let kk = lift(&k, cutoff, mode);
        out += &kk * rho * kk.adjoint();
    }
    out
}

/// Independent pure loss on each mode.
pub fn loss_channel(rho: &DensityMatrix, p: &LossParams) -> DensityMatrix {
    let cutoff = rho.cutoff();
    let m = apply_single_mode_loss(rho.matrix(), cutoff, Mode::One, p.l1);
    let m = apply_single_mode_loss(&m, cutoff, Mode::Two, p.l2);
    DensityMatrix::from_matrix_unchecked(cutoff, m).expect("same dimension")
}

/// Gaussian diffusion of the relative phase, generated by `(n1 - n2)/2`.
///
/// Element `<k,l|rho|m,n>` is damped by `exp(-sigma^2 D^2 / 8)` with
/// `D = (k - l) - (m - n)`, so the `|0,1><1,0|` coherence picks up
/// `exp(-sigma^2 / 2)`.
pub fn dephasing_channel(rho: &DensityMatrix, p: &DephasingParams) -> DensityMatrix {
    let cutoff = rho.cutoff();
    let s2 = p.sigma * p.sigma;
    let mut data = rho.matrix().clone();
    for (i, (k, l)) in cutoff.basis().enumerate() {
        for (j, (m, n)) in cutoff.basis().enumerate() {
            let d = (k as f64 - l as f64) - (m as f64 - n as f64);
            if d != 0.0 {
                data[(i, j)] *= (-s2 * d * d / 8.0).exp();
            }
        }
    }
    DensityMatrix::from_matrix_unchecked(cutoff, data).expect("same dimension")
}

/// Free evolution `exp(i delta_omega (t1 n1 + t2 n2))`.
pub fn detuning_rotation(rho: &DensityMatrix, s: &ReleaseSchedule) -> DensityMatrix {
    phase_rotation(rho, s.delta_omega * s.t1, s.delta_omega * s.t2)
}

/// Full storage leg: loss, dephasing, then rotation.
pub fn store(
    rho: &DensityMatrix,
    loss: &LossParams,
    dephasing: &DephasingParams,
    schedule: &ReleaseSchedule,
) -> DensityMatrix {
    let rho = loss_channel(rho, loss);
    let rho = dephasing_channel(&rho, dephasing);
    detuning_rotation(&rho, schedule)
}

/// Loss parameters for the given schedule under per-mode decay models.
pub fn storage_losses(m1: &DecayModel, m2: &DecayModel, s: &ReleaseSchedule) -> Result<LossParams> {
    LossParams::from_efficiencies(efficiency_at(m1, s.t1)?, efficiency_at(m2, s.t2)?)
}
