//! Logarithmic negativity `log2 ||rho^{T_2}||_1`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{hermitian_eigenvalues, partial_transpose, subspace_renormalize, Cutoff, DensityMatrix, Mode, C64};

/// Eigenvalues this close to zero are treated as zero in the trace norm.
pub const EIGENVALUE_ZERO_TOL: f64 = 1e-12;

pub const QUBIT_SUBSPACE: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// Clamped value and the unclamped `log2` of the trace norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Negativity {
    pub value: f64,
    pub raw: f64,
}

fn pt_trace_norm(m: &DMatrix<C64>, cutoff: Cutoff) -> f64 {
    hermitian_eigenvalues(&partial_transpose(m, cutoff, Mode::Two))
        .into_iter()
        .filter(|l| l.abs() > EIGENVALUE_ZERO_TOL)
        .map(f64::abs)
        .sum()
}

fn from_norm(norm: f64) -> Negativity {
    let raw = norm.log2();
    Negativity {
        value: raw.max(0.0),
        raw,
    }
}

/// Negativity of the state projected onto `{|0,0>,|1,0>,|0,1>,|1,1>}` and renormalized.
pub fn log_negativity_subspace(rho: &DensityMatrix) -> Result<Negativity> {
    let sub = qubit_block(rho)?;
    Ok(from_norm(pt_trace_norm(sub.matrix(), sub.cutoff())))
}

/// Renormalized restriction to at most one photon per mode, as a cutoff-1 state.
pub fn qubit_block(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let projected = subspace_renormalize(rho, &QUBIT_SUBSPACE).map_err(|_| {
        Error::DegenerateInput("state has no weight in the one-photon-per-mode subspace".into())
    })?;
    projected.truncate(Cutoff::new(1)?)
}

/// Negativity over the whole truncated space.
pub fn log_negativity(rho: &DensityMatrix) -> Negativity {
    from_norm(pt_trace_norm(rho.matrix(), rho.cutoff()))
}

/// `(||rho^{T_2}||_1 - 1) / 2`
pub fn negativity(rho: &DensityMatrix) -> f64 {
    (pt_trace_norm(rho.matrix(), rho.cutoff()) - 1.0) / 2.0
}
