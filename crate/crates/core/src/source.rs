//! Photon-pair sources, single-click heralding and fake-count contamination.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fock::{beamsplitter_unitary, BeamSplitterParams, Cutoff, DensityMatrix, PureState, C64};

/// Pump amplitudes above this value leave the weak-pump regime.
pub const WEAK_PUMP_LIMIT: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceParams {
    pub q1: f64,
    pub q2: f64,
    /// Phase between the two idler paths, applied to the reflection coefficient.
    pub theta: f64,
    pub bs: BeamSplitterParams,
    pub cutoff: Cutoff,
}

impl SourceParams {
    pub fn new(q1: f64, q2: f64, theta: f64, bs: BeamSplitterParams, cutoff: Cutoff) -> Result<Self> {
        let p = SourceParams { q1, q2, theta, bs, cutoff };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, q) in [("q1", self.q1), ("q2", self.q2)] {
            if !q.is_finite() || q.abs() >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "pump amplitude {name} must lie in (-1,1), got {q}"
                )));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta must be finite".into()));
        }
        Ok(())
    }

    /// True when either pump leaves the weak-pump regime.
    pub fn strong_pump_warning(&self) -> bool {
        self.q1.abs().max(self.q2.abs()) > WEAK_PUMP_LIMIT
    }

    /// Beamsplitter with the idler phase folded into `r`.
    pub fn effective_bs(&self) -> BeamSplitterParams {
        self.bs.with_reflection_phase(self.theta)
    }
}

/// Four-mode pure state over `(s1, i1, s2, i2)`, each truncated at `n_max`.
#[derive(Clone, Debug)]
pub struct FourModeState {
    cutoff: Cutoff,
    amplitudes: Vec<C64>,
}

impl FourModeState {
    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn index(&self, s1: usize, i1: usize, s2: usize, i2: usize) -> usize {
        let d = self.cutoff.mode_dim();
        ((s1 * d + i1) * d + s2) * d + i2
    }

    pub fn amplitude(&self, s1: usize, i1: usize, s2: usize, i2: usize) -> C64 {
        self.amplitudes[self.index(s1, i1, s2, i2)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Unnormalized amplitudes `q^n` of one pair source up to the cutoff.
pub fn pair_source_amplitudes(q: f64, cutoff: Cutoff) -> Vec<f64> {
    (0..=cutoff.n_max()).map(|n| q.powi(n as i32)).collect()
}

/// Product of two pair sources, `sum q1^n1 q2^n2 |n1,n1,n2,n2>`, normalized.
pub fn initial_state(p: &SourceParams) -> FourModeState {
    let cutoff = p.cutoff;
    let d = cutoff.mode_dim();
    let c1 = pair_source_amplitudes(p.q1, cutoff);
    let c2 = pair_source_amplitudes(p.q2, cutoff);
    let norm = (c1.iter().map(|x| x * x).sum::<f64>() * c2.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let mut state = FourModeState {
        cutoff,
        amplitudes: vec![C64::new(0.0, 0.0); d * d * d * d],
    };
    for (n1, a1) in c1.iter().enumerate() {
        for (n2, a2) in c2.iter().enumerate() {
            let idx = state.index(n1, n1, n2, n2);
            state.amplitudes[idx] = C64::new(a1 * a2 / norm, 0.0);
        }
    }
    state
}

/// Heralded signal state and the probability of the heralding click.
#[derive(Clone, Debug)]
pub struct HeraldOutcome {
    pub state: PureState,
    pub herald_prob: f64,
}

/// Combines the idlers on the beamsplitter, projects `i2` onto one photon
/// and `i1` onto vacuum, and returns the normalized `(s1, s2)` state.
///
/// The splitter acts with `i2` as its first port, so the idler from source 2
/// is transmitted to the detector with amplitude `t` and the idler from
/// source 1 is reflected onto it with amplitude `r e^{i theta}`.
pub fn herald_single_click(p: &SourceParams) -> Result<HeraldOutcome> {
    p.validate()?;
    let cutoff = p.cutoff;
    let d = cutoff.mode_dim();
    let psi = initial_state(p);
    // Two-mode ordering (a, b) = (i2, i1).
    let u = beamsplitter_unitary(cutoff, &p.effective_bs());
    let click = cutoff.index(1, 0);

    let mut signal = DVector::<C64>::zeros(cutoff.dim());
    for s1 in 0..d {
        for s2 in 0..d {
            let mut amp = C64::new(0.0, 0.0);
            for i2 in 0..d {
                for i1 in 0..d {
                    let a = psi.amplitude(s1, i1, s2, i2);
                    if a.norm_sqr() == 0.0 {
                        continue;
                    }
                    amp += u[(click, cutoff.index(i2, i1))] * a;
                }
            }
            signal[cutoff.index(s1, s2)] = amp;
        }
    }
    let herald_prob = signal.norm_squared();
    if herald_prob <= f64::MIN_POSITIVE {
        return Err(Error::HeraldImpossible);
    }
    Ok(HeraldOutcome {
        state: PureState::new(cutoff, signal)?,
        herald_prob,
    })
}

/// The lowest-order heralded state `t q2 |0,1> + r e^{i theta} q1 |1,0>`.
pub fn leading_order_state(p: &SourceParams) -> Result<PureState> {
    let bs = p.effective_bs();
    PureState::from_components(
        p.cutoff,
        &[((0, 1), bs.t() * p.q2), ((1, 0), bs.r() * p.q1)],
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FakeCountParams {
    l_fake: f64,
}

impl FakeCountParams {
    pub fn new(l_fake: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&l_fake) {
            return Err(Error::InvalidParameter(format!(
                "fake-count weight must lie in [0,1], got {l_fake}"
            )));
        }
        Ok(FakeCountParams { l_fake })
    }

    /// Fraction of heralds caused by stray light.
    pub fn from_rates(herald_rate: f64, fake_rate: f64) -> Result<Self> {
        if herald_rate < 0.0 || fake_rate < 0.0 || herald_rate + fake_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "count rates must be nonnegative with positive sum, got {herald_rate} and {fake_rate}"
            )));
        }
        Self::new(fake_rate / (herald_rate + fake_rate))
    }

    pub fn l_fake(&self) -> f64 {
        self.l_fake
    }
}

/// `(1 - L) rho + L |0,0><0,0|`
pub fn mix_fake_counts(rho: &DensityMatrix, f: &FakeCountParams) -> DensityMatrix {
    let l = f.l_fake;
    let mut data = rho.matrix().scale(1.0 - l);
    data[(0, 0)] += C64::new(l, 0.0);
    DensityMatrix::from_matrix_unchecked(rho.cutoff(), data).expect("same dimension")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn params(q1: f64, q2: f64, theta: f64, transmissivity: f64, n_max: usize) -> SourceParams {
        SourceParams::new(
            q1,
            q2,
            theta,
            BeamSplitterParams::from_transmissivity(transmissivity).unwrap(),
            Cutoff::new(n_max).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn no_pump_gives_vacuum() {
        let s = initial_state(&params(0.0, 0.0, 0.0, 0.5, 2));
        assert_abs_diff_eq!(s.amplitude(0, 0, 0, 0).re, 1.0);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pair_source_ratios() {
        let amps = pair_source_amplitudes(0.1, Cutoff::new(2).unwrap());
        assert_abs_diff_eq!(amps[1] / amps[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(amps[2] / amps[0], 0.01, epsilon = 1e-15);
        let s = initial_state(&params(0.1, 0.2, 0.0, 0.5, 2));
        assert_abs_diff_eq!(
            s.amplitude(1, 1, 0, 0).re / s.amplitude(0, 0, 0, 0).re,
            0.1,
            epsilon = 1e-14
        );
        for s1 in 0..3 {
            for i1 in 0..3 {
                for s2 in 0..3 {
                    for i2 in 0..3 {
                        if s1 != i1 || s2 != i2 {
                            assert_eq!(s.amplitude(s1, i1, s2, i2).norm(), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn balanced_herald_is_bell_like() {
        let out = herald_single_click(&params(0.1, 0.1, 0.0, 0.5, 3)).unwrap();
        let target = PureState::dual_rail(out.state.cutoff(), 1.0, 1.0, 0.0).unwrap();
        assert!(out.state.fidelity(&target) > 0.99);
        assert_abs_diff_eq!(
            out.state.amplitude(0, 1).norm(),
            out.state.amplitude(1, 0).norm(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_reflection_heralds_mode_two() {
        let out = herald_single_click(&params(0.1, 0.1, 0.0, 1.0, 2)).unwrap();
        let target = PureState::fock(out.state.cutoff(), 0, 1).unwrap();
        assert_abs_diff_eq!(out.state.fidelity(&target), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unbalanced_splitter_with_pi_phase() {
        let out = herald_single_click(&params(0.1, 0.1, PI, 1.0 / 3.0, 2)).unwrap();
        let a = out.state.amplitude(0, 1);
        let b = out.state.amplitude(1, 0);
        assert_abs_diff_eq!(a.norm_sqr() / b.norm_sqr(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!((b / a).arg().abs(), PI, epsilon = 1e-12);
    }

    #[test]
    fn no_pump_cannot_herald() {
        assert!(matches!(
            herald_single_click(&params(0.0, 0.0, 0.0, 0.5, 2)),
            Err(Error::HeraldImpossible)
        ));
    }

    #[test]
    fn pump_range_and_warning() {
        let bs = BeamSplitterParams::balanced();
        let c = Cutoff::new(2).unwrap();
        assert!(SourceParams::new(1.0, 0.1, 0.0, bs, c).is_err());
        assert!(SourceParams::new(0.1, -1.2, 0.0, bs, c).is_err());
        assert!(SourceParams::new(0.5, 0.1, 0.0, bs, c).unwrap().strong_pump_warning());
        assert!(!SourceParams::new(0.2, 0.1, 0.0, bs, c).unwrap().strong_pump_warning());
    }

    #[test]
    fn herald_probability_grows_with_pump() {
        let grid: Vec<f64> = (1..=30).map(|k| 0.01 * k as f64).collect();
        for &q2 in &grid {
            let mut last = 0.0;
            for &q1 in &grid {
                let p = herald_single_click(&params(q1, q2, 0.0, 0.5, 3)).unwrap().herald_prob;
                assert!(p > 0.0 && p <= 1.0);
                assert!(p > last, "q1={q1} q2={q2}: {p} <= {last}");
                last = p;
            }
        }
        for &q1 in &grid {
            let mut last = 0.0;
            for &q2 in &grid {
                let p = herald_single_click(&params(q1, q2, 0.0, 0.5, 3)).unwrap().herald_prob;
                assert!(p > last);
                last = p;
            }
        }
    }

    #[test]
    fn leading_order_limit() {
        for &q in &[0.01, 0.02, 0.05] {
            for &(tr, th) in &[(0.5, 0.0), (0.3, 1.0), (0.8, -2.0)] {
                let p = params(q, 0.7 * q, th, tr, 3);
                let exact = herald_single_click(&p).unwrap().state;
                let lead = leading_order_state(&p).unwrap();
                assert!(exact.fidelity(&lead) > 1.0 - q * q);
            }
        }
    }

    #[test]
    fn fake_count_mixing() {
        let cut = Cutoff::new(2).unwrap();
        let bell = PureState::dual_rail(cut, 1.0, 1.0, 0.0).unwrap().to_density();
        let same = mix_fake_counts(&bell, &FakeCountParams::new(0.0).unwrap());
        assert_eq!(same, bell);
        let vac = mix_fake_counts(&bell, &FakeCountParams::new(1.0).unwrap());
        assert!((vac.matrix() - DensityMatrix::vacuum(cut).matrix()).norm() < 1e-15);
        let mixed = mix_fake_counts(&bell, &FakeCountParams::new(0.05).unwrap());
        assert_abs_diff_eq!(mixed.population(0, 0), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(mixed.element(0, 1, 1, 0).re, 0.475, epsilon = 1e-15);
        assert_abs_diff_eq!(mixed.trace(), 1.0, epsilon = 1e-15);
        assert!(mixed.validate().is_ok());
        assert!(FakeCountParams::new(1.1).is_err());
        let f = FakeCountParams::from_rates(400.0, 10.0).unwrap();
        assert_abs_diff_eq!(f.l_fake(), 10.0 / 410.0, epsilon = 1e-15);
    }
}
