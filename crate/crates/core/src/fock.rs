//! Truncated two-mode Fock space.
//!
//! Basis states `|n1, n2>` are stored row-major in `(n1, n2)`: mode 1 is the
//! slow index, so the flat index is `n1 * (n_max + 1) + n2`. Every matrix in
//! this crate uses that ordering.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = -1e-9;

/// Photon-number cutoff applied to each mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cutoff(usize);

impl Cutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter(format!(
                "photon-number cutoff must be at least 1, got {n_max}"
            )));
        }
        Ok(Cutoff(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    /// Dimension of one mode, `n_max + 1`.
    pub fn mode_dim(self) -> usize {
        self.0 + 1
    }

    /// Dimension of the two-mode space, `(n_max + 1)^2`.
    pub fn dim(self) -> usize {
        self.mode_dim() * self.mode_dim()
    }

    pub fn index(self, n1: usize, n2: usize) -> usize {
        debug_assert!(n1 <= self.0 && n2 <= self.0);
        n1 * self.mode_dim() + n2
    }

    pub fn levels(self, index: usize) -> (usize, usize) {
        (index / self.mode_dim(), index % self.mode_dim())
    }

    /// All basis labels in storage order.
    pub fn basis(self) -> impl Iterator<Item = (usize, usize)> {
        let d = self.mode_dim();
        (0..d * d).map(move |i| (i / d, i % d))
    }
}

/// One of the two stored modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            other => Err(Error::InvalidMode(other)),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }

    fn level(self, (n1, n2): (usize, usize)) -> usize {
        match self {
            Mode::One => n1,
            Mode::Two => n2,
        }
    }
}

/// Ladder operator `a` on the selected mode, identity on the other.
pub fn annihilation_matrix(cutoff: Cutoff, mode: Mode) -> DMatrix<C64> {
    let dim = cutoff.dim();
    let mut a = DMatrix::zeros(dim, dim);
    for (n1, n2) in cutoff.basis() {
        let col = cutoff.index(n1, n2);
        match mode {
            Mode::One if n1 > 0 => {
                a[(cutoff.index(n1 - 1, n2), col)] = C64::new((n1 as f64).sqrt(), 0.0);
            }
            Mode::Two if n2 > 0 => {
                a[(cutoff.index(n1, n2 - 1), col)] = C64::new((n2 as f64).sqrt(), 0.0);
            }
            _ => {}
        }
    }
    a
}

pub fn number_operator(cutoff: Cutoff, mode: Mode) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        cutoff.dim(),
        cutoff.basis().map(|b| C64::new(mode.level(b) as f64, 0.0)),
    ))
}

/// Normalized two-mode pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    cutoff: Cutoff,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(cutoff: Cutoff, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != cutoff.dim() {
            return Err(Error::DimensionMismatch {
                expected: cutoff.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(PureState {
            cutoff,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Builds `sum c |n1,n2>` from labelled components, then normalizes.
    pub fn from_components(cutoff: Cutoff, components: &[((usize, usize), C64)]) -> Result<Self> {
        let mut amps = DVector::zeros(cutoff.dim());
        for &((n1, n2), c) in components {
            if n1 > cutoff.n_max() || n2 > cutoff.n_max() {
                return Err(Error::InvalidParameter(format!(
                    "basis state |{n1},{n2}> exceeds cutoff {}",
                    cutoff.n_max()
                )));
            }
            amps[cutoff.index(n1, n2)] += c;
        }
        Self::new(cutoff, amps)
    }

    pub fn fock(cutoff: Cutoff, n1: usize, n2: usize) -> Result<Self> {
        Self::from_components(cutoff, &[((n1, n2), C64::new(1.0, 0.0))])
    }

    /// `alpha |0,1> + beta e^{i theta} |1,0>`, normalized.
    pub fn dual_rail(cutoff: Cutoff, alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        Self::from_components(
            cutoff,
            &[
                ((0, 1), C64::new(alpha, 0.0)),
                ((1, 0), C64::from_polar(beta, theta)),
            ],
        )
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> C64 {
        self.amplitudes[self.cutoff.index(n1, n2)]
    }

    /// `<self|other>`
    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.cutoff
            .basis()
            .zip(self.amplitudes.iter())
            .map(|((n1, n2), a)| (n1 + n2) as f64 * a.norm_sqr())
            .sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            cutoff: self.cutoff,
            data: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Two-mode mixed state. Hermitian, unit trace and positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    cutoff: Cutoff,
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wraps a matrix after checking the density-matrix invariants.
    pub fn new(cutoff: Cutoff, data: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(cutoff, data)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(cutoff: Cutoff, data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != cutoff.dim() || data.ncols() != cutoff.dim() {
            return Err(Error::DimensionMismatch {
                expected: cutoff.dim(),
                found: data.nrows().max(data.ncols()),
            });
        }
        Ok(DensityMatrix { cutoff, data })
    }

    pub fn vacuum(cutoff: Cutoff) -> Self {
        let mut data = DMatrix::zeros(cutoff.dim(), cutoff.dim());
        data[(0, 0)] = C64::new(1.0, 0.0);
        DensityMatrix { cutoff, data }
    }

    /// Incoherent mixture `sum w_i rho_i`; weights must be nonnegative and sum to 1.
    pub fn mixture(components: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = components.first().ok_or(Error::EmptyData)?;
        let cutoff = first.1.cutoff;
        let mut total = 0.0;
        let mut data = DMatrix::zeros(cutoff.dim(), cutoff.dim());
        for &(w, rho) in components {
            if rho.cutoff != cutoff {
                return Err(Error::DimensionMismatch {
                    expected: cutoff.dim(),
                    found: rho.cutoff.dim(),
                });
            }
            if w < 0.0 {
                return Err(Error::InvalidParameter(format!("negative mixture weight {w}")));
            }
            total += w;
            data += rho.data.scale(w);
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(DensityMatrix { cutoff, data })
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    /// `<k,l| rho |m,n>`
    pub fn element(&self, k: usize, l: usize, m: usize, n: usize) -> C64 {
        self.data[(self.cutoff.index(k, l), self.cutoff.index(m, n))]
    }

    pub fn population(&self, n1: usize, n2: usize) -> f64 {
        self.element(n1, n2, n1, n2).re
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.cutoff
            .basis()
            .enumerate()
            .map(|(i, (n1, n2))| (n1 + n2) as f64 * self.data[(i, i)].re)
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let dev = hermitian_deviation(&self.data);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotUnity(tr));
        }
        let min = self.min_eigenvalue();
        if min < PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    /// Population outside the per-mode cutoff `n_max`.
    pub fn weight_above(&self, n_max: usize) -> f64 {
        self.cutoff
            .basis()
            .enumerate()
            .filter(|(_, (n1, n2))| *n1 > n_max || *n2 > n_max)
            .map(|(i, _)| self.data[(i, i)].re)
            .sum()
    }

    /// Copies the block with both photon numbers `<= target.n_max()` into a
    /// smaller space without renormalizing. Returns the raw matrix.
    pub fn truncated_block(&self, target: Cutoff) -> DMatrix<C64> {
        let t = target.n_max().min(self.cutoff.n_max());
        let dim = target.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for (k, l) in target.basis().filter(|(a, b)| *a <= t && *b <= t) {
            for (m, n) in target.basis().filter(|(a, b)| *a <= t && *b <= t) {
                out[(target.index(k, l), target.index(m, n))] = self.element(k, l, m, n);
            }
        }
        out
    }

    /// Projects onto photon numbers `<= target.n_max()` per mode and renormalizes.
    pub fn truncate(&self, target: Cutoff) -> Result<DensityMatrix> {
        let block = self.truncated_block(target);
        let tr = block.trace().re;
        if tr <= 0.0 {
            return Err(Error::DegenerateInput(
                "zero weight inside truncated subspace".into(),
            ));
        }
        Ok(DensityMatrix {
            cutoff: target,
            data: block.unscale(tr),
        })
    }

    /// Embeds into a larger cutoff (zero padding).
    pub fn embed(&self, target: Cutoff) -> Result<DensityMatrix> {
        if target.n_max() < self.cutoff.n_max() {
            return Err(Error::InvalidParameter(format!(
                "cannot embed cutoff {} into smaller cutoff {}",
                self.cutoff.n_max(),
                target.n_max()
            )));
        }
        Ok(DensityMatrix {
            cutoff: target,
            data: self.truncated_block(target),
        })
    }

    /// Single-mode reduced state of `mode` (partial trace over the other one).
    pub fn reduced(&self, mode: Mode) -> DMatrix<C64> {
        let d = self.cutoff.mode_dim();
        let mut out = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                out[(a, b)] = (0..d)
                    .map(|j| match mode {
                        Mode::One => self.element(a, j, b, j),
                        Mode::Two => self.element(j, a, j, b),
                    })
                    .sum();
            }
        }
        out
    }
}

/// Hermitian part `(m + m^dagger)/2`.
pub fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues from round-off are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(hermitize(m));
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// Coefficients of a beamsplitter with Heisenberg action
/// `a -> t a + r b`, `b -> -r* a + t* b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitterParams {
    t: C64,
    r: C64,
}

impl BeamSplitterParams {
    pub fn new(t: C64, r: C64) -> Result<Self> {
        let s = t.norm_sqr() + r.norm_sqr();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "beamsplitter requires |t|^2 + |r|^2 = 1, got {s}"
            )));
        }
        Ok(BeamSplitterParams { t, r })
    }

    /// Real coefficients with power transmissivity `transmissivity = |t|^2`.
    pub fn from_transmissivity(transmissivity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::InvalidParameter(format!(
                "transmissivity must lie in [0,1], got {transmissivity}"
            )));
        }
        Self::new(
            C64::new(transmissivity.sqrt(), 0.0),
            C64::new((1.0 - transmissivity).sqrt(), 0.0),
        )
    }

    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        BeamSplitterParams {
            t: C64::new(h, 0.0),
            r: C64::new(h, 0.0),
        }
    }

    pub fn identity() -> Self {
        BeamSplitterParams {
            t: C64::new(1.0, 0.0),
            r: C64::new(0.0, 0.0),
        }
    }

    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn r(&self) -> C64 {
        self.r
    }

    /// Same splitter with an extra phase `e^{i phase}` on the reflection.
    pub fn with_reflection_phase(&self, phase: f64) -> Self {
        BeamSplitterParams {
            t: self.t,
            r: self.r * C64::from_polar(1.0, phase),
        }
    }

    pub fn inverse(&self) -> Self {
        BeamSplitterParams {
            t: self.t.conj(),
            r: -self.r,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Matrix of the beamsplitter on the two-mode space with `a` = mode 1 and
/// `b` = mode 2.
///
/// Built block by block in total photon number from the creation-operator
/// transformation `a^+ -> t a^+ - r* b^+`, `b^+ -> r a^+ + t* b^+`. Blocks with
/// total photon number `<= n_max` are exactly unitary; higher blocks are the
/// truncation of the exact transformation.
pub fn beamsplitter_unitary(cutoff: Cutoff, bs: &BeamSplitterParams) -> DMatrix<C64> {
    let (t, r) = (bs.t, bs.r);
    let dim = cutoff.dim();
    let nmax = cutoff.n_max();
    let mut u = DMatrix::zeros(dim, dim);
    for (m, n) in cutoff.basis() {
        let total = m + n;
        let col = cutoff.index(m, n);
        let norm_in = (factorial(m) * factorial(n)).sqrt();
        for k in total.saturating_sub(nmax)..=total.min(nmax) {
            let mut coeff = C64::new(0.0, 0.0);
            // i photons of the first factor and j of the second go to mode a.
            for i in 0..=m {
                if i > k || k - i > n {
                    continue;
                }
                let j = k - i;
                coeff += t.powu(i as u32)
                    * (-r.conj()).powu((m - i) as u32)
                    * r.powu(j as u32)
                    * t.conj().powu((n - j) as u32)
                    * (binomial(m, i) * binomial(n, j));
            }
            let norm_out = (factorial(k) * factorial(total - k)).sqrt();
            u[(cutoff.index(k, total - k), col)] = coeff * (norm_out / norm_in);
        }
    }
    u
}

/// Exchange of the two modes, `|n1,n2> -> |n2,n1>`.
pub fn swap_matrix(cutoff: Cutoff) -> DMatrix<C64> {
    let dim = cutoff.dim();
    let mut s = DMatrix::zeros(dim, dim);
    for (n1, n2) in cutoff.basis() {
        s[(cutoff.index(n2, n1), cutoff.index(n1, n2))] = C64::new(1.0, 0.0);
    }
    s
}

/// Operations shared by pure and mixed two-mode states.
pub trait TwoModeState: Sized {
    fn cutoff(&self) -> Cutoff;

    /// `U psi` or `U rho U^dagger`.
    fn transform(&self, u: &DMatrix<C64>) -> Self;

    /// Multiplies basis state `i` by `phases[i]` (ket side).
    fn apply_phases(&self, phases: &[C64]) -> Self;
}

impl TwoModeState for PureState {
    fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    fn transform(&self, u: &DMatrix<C64>) -> Self {
        PureState {
            cutoff: self.cutoff,
            amplitudes: u * &self.amplitudes,
        }
    }

    fn apply_phases(&self, phases: &[C64]) -> Self {
        PureState {
            cutoff: self.cutoff,
            amplitudes: DVector::from_iterator(
                phases.len(),
                self.amplitudes.iter().zip(phases).map(|(a, p)| a * p),
            ),
        }
    }
}

impl TwoModeState for DensityMatrix {
    fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    fn transform(&self, u: &DMatrix<C64>) -> Self {
        DensityMatrix {
            cutoff: self.cutoff,
            data: u * &self.data * u.adjoint(),
        }
    }

    fn apply_phases(&self, phases: &[C64]) -> Self {
        let mut data = self.data.clone();
        for i in 0..data.nrows() {
            for j in 0..data.ncols() {
                data[(i, j)] *= phases[i] * phases[j].conj();
            }
        }
        DensityMatrix {
            cutoff: self.cutoff,
            data,
        }
    }
}

/// Applies the beamsplitter with `modes.0` playing the role of `a`.
pub fn apply_beamsplitter<S: TwoModeState>(
    state: &S,
    bs: &BeamSplitterParams,
    modes: (Mode, Mode),
) -> Result<S> {
    let cutoff = state.cutoff();
    let u = match modes {
        (Mode::One, Mode::Two) => beamsplitter_unitary(cutoff, bs),
        (Mode::Two, Mode::One) => {
            let s = swap_matrix(cutoff);
            &s * beamsplitter_unitary(cutoff, bs) * &s
        }
        _ => {
            return Err(Error::InvalidParameter(
                "beamsplitter needs two distinct modes".into(),
            ))
        }
    };
    Ok(state.transform(&u))
}

/// `exp(i (phi1 n1 + phi2 n2))`
pub fn phase_rotation<S: TwoModeState>(state: &S, phi1: f64, phi2: f64) -> S {
    let phases: Vec<C64> = state
        .cutoff()
        .basis()
        .map(|(n1, n2)| C64::from_polar(1.0, phi1 * n1 as f64 + phi2 * n2 as f64))
        .collect();
    state.apply_phases(&phases)
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_cutoff(a, b)?;
    let sa = psd_sqrt(&a.data);
    let inner = &sa * &b.data * &sa;
    let root_sum: f64 = hermitian_eigenvalues(&inner)
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok(root_sum * root_sum)
}

/// `||a - b||_1 / 2`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_cutoff(a, b)?;
    Ok(0.5 * trace_norm(&(&a.data - &b.data)))
}

fn check_same_cutoff(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.cutoff != b.cutoff {
        return Err(Error::DimensionMismatch {
            expected: a.cutoff.dim(),
            found: b.cutoff.dim(),
        });
    }
    Ok(())
}

/// Transposes the indices of `mode`: `<k,l|M^T|m,n> = <k,n|M|m,l>` for mode 2.
pub fn partial_transpose(m: &DMatrix<C64>, cutoff: Cutoff, mode: Mode) -> DMatrix<C64> {
    let dim = cutoff.dim();
    let mut out = DMatrix::zeros(dim, dim);
    for (k, l) in cutoff.basis() {
        for (mm, n) in cutoff.basis() {
            let src = match mode {
                Mode::One => (cutoff.index(mm, l), cutoff.index(k, n)),
                Mode::Two => (cutoff.index(k, n), cutoff.index(mm, l)),
            };
            out[(cutoff.index(k, l), cutoff.index(mm, n))] = m[src];
        }
    }
    out
}

/// Projects onto the span of `basis` and rescales to unit trace.
pub fn subspace_renormalize(rho: &DensityMatrix, basis: &[(usize, usize)]) -> Result<DensityMatrix> {
    if basis.is_empty() {
        return Err(Error::InvalidParameter("empty basis set".into()));
    }
    let cutoff = rho.cutoff;
    let mut keep = vec![false; cutoff.dim()];
    for &(n1, n2) in basis {
        if n1 > cutoff.n_max() || n2 > cutoff.n_max() {
            return Err(Error::InvalidParameter(format!(
                "basis state |{n1},{n2}> exceeds cutoff {}",
                cutoff.n_max()
            )));
        }
        keep[cutoff.index(n1, n2)] = true;
    }
    let mut data = rho.data.clone();
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            if !(keep[i] && keep[j]) {
                data[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    let tr = data.trace().re;
    if tr <= 1e-15 {
        return Err(Error::DegenerateInput(
            "projected trace is zero".into(),
        ));
    }
    Ok(DensityMatrix {
        cutoff,
        data: data.unscale(tr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn cutoff_rejects_zero() {
        assert!(Cutoff::new(0).is_err());
        let c = Cutoff::new(3).unwrap();
        assert_eq!(c.mode_dim(), 4);
        assert_eq!(c.dim(), 16);
        assert_eq!(c.levels(c.index(2, 3)), (2, 3));
    }

    #[test]
    fn ladder_elements() {
        let c1 = Cutoff::new(1).unwrap();
        let a = annihilation_matrix(c1, Mode::One);
        for n2 in 0..=1 {
            assert_abs_diff_eq!(a[(c1.index(0, n2), c1.index(1, n2))].re, 1.0);
        }
        let c2 = Cutoff::new(2).unwrap();
        let a2 = annihilation_matrix(c2, Mode::Two);
        for n1 in 0..=2 {
            assert_abs_diff_eq!(
                a2[(c2.index(n1, 1), c2.index(n1, 2))].re,
                2f64.sqrt(),
                epsilon = 1e-15
            );
        }
        let vac = PureState::fock(c2, 0, 0).unwrap();
        assert!((&a2 * vac.amplitudes()).norm() == 0.0);
        assert!(Mode::from_index(3).is_err());
    }

    #[test]
    fn identity_beamsplitter() {
        let cut = Cutoff::new(2).unwrap();
        let psi = PureState::from_components(cut, &[((1, 1), c(0.6)), ((2, 0), c(0.8))]).unwrap();
        let out = apply_beamsplitter(&psi, &BeamSplitterParams::identity(), (Mode::One, Mode::Two))
            .unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn balanced_single_photon() {
        let cut = Cutoff::new(2).unwrap();
        let psi = PureState::fock(cut, 1, 0).unwrap();
        let out = apply_beamsplitter(&psi, &BeamSplitterParams::balanced(), (Mode::One, Mode::Two))
            .unwrap();
        assert_abs_diff_eq!(out.amplitude(1, 0).re, FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(out.amplitude(0, 1).re, -FRAC_1_SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn beamsplitter_rejects_non_unitary_coefficients() {
        assert!(BeamSplitterParams::new(c(0.5), c(0.5)).is_err());
        assert!(BeamSplitterParams::from_transmissivity(1.5).is_err());
    }

    #[test]
    fn swapped_modes_match_swapped_state() {
        let cut = Cutoff::new(2).unwrap();
        let bs = BeamSplitterParams::new(C64::new(0.6, 0.0), C64::from_polar(0.8, 0.3)).unwrap();
        let psi = PureState::fock(cut, 0, 1).unwrap();
        let out = apply_beamsplitter(&psi, &bs, (Mode::Two, Mode::One)).unwrap();
        // photon in mode 2 acts as `a`: a^+ -> t a^+ - r* b^+
        assert_abs_diff_eq!((out.amplitude(0, 1) - bs.t()).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((out.amplitude(1, 0) + bs.r().conj()).norm(), 0.0, epsilon = 1e-14);
        assert!(apply_beamsplitter(&psi, &bs, (Mode::One, Mode::One)).is_err());
    }

    #[test]
    fn phase_rotation_examples() {
        let cut = Cutoff::new(1).unwrap();
        let psi = PureState::from_components(cut, &[((0, 1), c(1.0)), ((1, 0), c(1.0))]).unwrap();
        assert_eq!(phase_rotation(&psi, 0.0, 0.0), psi);
        let rotated = phase_rotation(&psi, PI, 0.0);
        let expected =
            PureState::from_components(cut, &[((0, 1), c(1.0)), ((1, 0), c(-1.0))]).unwrap();
        assert_abs_diff_eq!(rotated.fidelity(&expected), 1.0, epsilon = 1e-15);
        let common = phase_rotation(&psi, 0.77, 0.77);
        assert_abs_diff_eq!(common.fidelity(&psi), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn metrics_examples() {
        let cut = Cutoff::new(2).unwrap();
        let bell = PureState::dual_rail(cut, 1.0, 1.0, 0.0).unwrap().to_density();
        assert_abs_diff_eq!(trace_distance(&bell, &bell).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fidelity(&bell, &bell).unwrap(), 1.0, epsilon = 1e-9);
        let same = subspace_renormalize(&bell, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert!((same.matrix() - bell.matrix()).norm() < 1e-15);

        let pt = partial_transpose(bell.matrix(), cut, Mode::Two);
        let min = hermitian_eigenvalues(&pt)[0];
        assert_abs_diff_eq!(min, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn subspace_with_zero_weight_is_degenerate() {
        let cut = Cutoff::new(2).unwrap();
        let rho = PureState::fock(cut, 2, 2).unwrap().to_density();
        assert!(matches!(
            subspace_renormalize(&rho, &[(0, 0), (0, 1)]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(subspace_renormalize(&rho, &[]).is_err());
    }

    #[test]
    fn validation_catches_bad_matrices() {
        let cut = Cutoff::new(1).unwrap();
        let mut m = DMatrix::<C64>::identity(4, 4).scale(0.25);
        assert!(DensityMatrix::new(cut, m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(matches!(DensityMatrix::new(cut, m.clone()), Err(Error::NotHermitian(_))));
        let mut n = DMatrix::<C64>::zeros(4, 4);
        n[(0, 0)] = c(1.5);
        n[(1, 1)] = c(-0.5);
        assert!(matches!(DensityMatrix::new(cut, n), Err(Error::NotPositive(_))));
        assert!(matches!(
            DensityMatrix::new(cut, DMatrix::identity(4, 4)),
            Err(Error::TraceNotUnity(_))
        ));
    }

    #[test]
    fn reduced_state_of_bell_is_mixed() {
        let cut = Cutoff::new(1).unwrap();
        let bell = PureState::dual_rail(cut, 1.0, 1.0, 0.0).unwrap().to_density();
        let r = bell.reduced(Mode::One);
        assert_abs_diff_eq!(r[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(0, 1)].norm(), 0.0, epsilon = 1e-15);
    }
}
