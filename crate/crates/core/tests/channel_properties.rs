use approx::assert_abs_diff_eq;
use dualrail_core::channels::*;
use dualrail_core::fock::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_density(cutoff: Cutoff, parts: &[f64]) -> DensityMatrix {
    let d = cutoff.dim();
    let g = DMatrix::from_fn(d, d, |i, j| C64::new(parts[2 * (i * d + j)], parts[2 * (i * d + j) + 1]));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(cutoff, m.unscale(tr)).unwrap()
}

fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}

/// Image of `|i><j|` under a linear channel, assembled from pure states.
fn unit_image(
    cutoff: Cutoff,
    i: usize,
    j: usize,
    channel: &impl Fn(&DensityMatrix) -> DensityMatrix,
) -> DMatrix<C64> {
    let (a, b) = (cutoff.levels(i), cutoff.levels(j));
    let apply = |ci: C64, cj: C64| {
        let comps: Vec<((usize, usize), C64)> = if i == j {
            vec![(a, ci)]
        } else {
            vec![(a, ci), (b, cj)]
        };
        channel(&PureState::from_components(cutoff, &comps).unwrap().to_density()).into_matrix()
    };
    let one = C64::new(1.0, 0.0);
    if i == j {
        return apply(one, one);
    }
    let im = C64::new(0.0, 1.0);
    // |i><j| = (P+ - P-)/2 + i (P+i - P-i)/2
    (apply(one, one) - apply(one, -one)).scale(0.5)
        + (apply(one, im) - apply(one, -im)) * (im * 0.5)
}

/// Choi matrix of a channel on the two-mode space.
fn choi(cutoff: Cutoff, channel: impl Fn(&DensityMatrix) -> DensityMatrix) -> DMatrix<C64> {
    let d = cutoff.dim();
    let mut out = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let image = unit_image(cutoff, i, j, &channel);
            for a in 0..d {
                for b in 0..d {
                    out[(i * d + a, j * d + b)] = image[(a, b)];
                }
            }
        }
    }
    out
}

#[test]
fn choi_matrices_are_positive() {
    let cutoff = Cutoff::new(2).unwrap();
    let loss = LossParams::new(0.3, 0.7).unwrap();
    let deph = DephasingParams::new(0.8).unwrap();
    let sched = ReleaseSchedule::new(1e-7, 3e-7, 2e6).unwrap();
    for c in [
        choi(cutoff, |r| loss_channel(r, &loss)),
        choi(cutoff, |r| dephasing_channel(r, &deph)),
        choi(cutoff, |r| store(r, &loss, &deph, &sched)),
    ] {
        let ev = hermitian_eigenvalues(&c);
        assert!(ev[0] > -1e-12, "min Choi eigenvalue {}", ev[0]);
        assert!(hermitian_deviation(&c) < 1e-14);
    }
}

/// One-photon-block transformation rules written out element by element,
/// with the loss of each memory acting on the population whose photon it holds.
#[test]
fn one_photon_block_transcription() {
    let cutoff = Cutoff::new(1).unwrap();
    let parts: Vec<f64> = (0..32).map(|k| ((k * 37 % 19) as f64 / 19.0) - 0.4).collect();
    let rho = random_density(cutoff, &parts);
    let (l1, l2, sigma) = (0.35, 0.55, 0.6);
    let out = dephasing_channel(
        &loss_channel(&rho, &LossParams::new(l1, l2).unwrap()),
        &DephasingParams::new(sigma).unwrap(),
    );
    let e = |k, l, m, n| rho.element(k, l, m, n);
    let p00 = e(0, 0, 0, 0).re + l2 * e(0, 1, 0, 1).re + l1 * e(1, 0, 1, 0).re + l1 * l2 * e(1, 1, 1, 1).re;
    assert_abs_diff_eq!(out.population(0, 0), p00, epsilon = 1e-14);
    assert_abs_diff_eq!(
        out.population(0, 1),
        (1.0 - l2) * e(0, 1, 0, 1).re + (1.0 - l2) * l1 * e(1, 1, 1, 1).re,
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        out.population(1, 0),
        (1.0 - l1) * e(1, 0, 1, 0).re + (1.0 - l1) * l2 * e(1, 1, 1, 1).re,
        epsilon = 1e-14
    );
    let coh = out.element(0, 1, 1, 0);
    let expected = e(0, 1, 1, 0) * ((1.0 - l1) * (1.0 - l2)).sqrt() * (-sigma * sigma / 2.0).exp();
    assert_abs_diff_eq!((coh - expected).norm(), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(
        (out.element(1, 0, 0, 1) - expected.conj()).norm(),
        0.0,
        epsilon = 1e-14
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loss_composes_multiplicatively(
        parts in prop::collection::vec(-1.0f64..1.0, 2 * 81),
        a1 in 0.0f64..1.0, a2 in 0.0f64..1.0, b1 in 0.0f64..1.0, b2 in 0.0f64..1.0,
    ) {
        let cutoff = Cutoff::new(2).unwrap();
        let rho = random_density(cutoff, &parts);
        let twice = loss_channel(&loss_channel(&rho, &LossParams::new(a1, a2).unwrap()), &LossParams::new(b1, b2).unwrap());
        let once = loss_channel(&rho, &LossParams::new(1.0 - (1.0 - a1) * (1.0 - b1), 1.0 - (1.0 - a2) * (1.0 - b2)).unwrap());
        prop_assert!(max_diff(&twice, &once) < 1e-12);
        prop_assert!((twice.trace() - 1.0).abs() < 1e-12);
        prop_assert!(twice.validate().is_ok());
    }

    #[test]
    fn dephasing_variances_add(
        parts in prop::collection::vec(-1.0f64..1.0, 2 * 81),
        s in 0.0f64..1.5, u in 0.0f64..1.5,
    ) {
        let cutoff = Cutoff::new(2).unwrap();
        let rho = random_density(cutoff, &parts);
        let twice = dephasing_channel(&dephasing_channel(&rho, &DephasingParams::new(s).unwrap()), &DephasingParams::new(u).unwrap());
        let once = dephasing_channel(&rho, &DephasingParams::new(s.hypot(u)).unwrap());
        prop_assert!(max_diff(&twice, &once) < 1e-12);
    }

    #[test]
    fn storage_maps_commute(
        parts in prop::collection::vec(-1.0f64..1.0, 2 * 81),
        l1 in 0.0f64..1.0, l2 in 0.0f64..1.0, sigma in 0.0f64..1.5,
        t1 in 0.0f64..5e-7, t2 in 0.0f64..5e-7,
    ) {
        let cutoff = Cutoff::new(2).unwrap();
        let rho = random_density(cutoff, &parts);
        let loss = LossParams::new(l1, l2).unwrap();
        let deph = DephasingParams::new(sigma).unwrap();
        let sched = ReleaseSchedule::new(t1, t2, 2.0 * std::f64::consts::PI * 3e5).unwrap();
        let a = store(&rho, &loss, &deph, &sched);
        let b = loss_channel(&dephasing_channel(&detuning_rotation(&rho, &sched), &deph), &loss);
        let c = dephasing_channel(&loss_channel(&detuning_rotation(&rho, &sched), &loss), &deph);
        prop_assert!(max_diff(&a, &b) < 1e-12);
        prop_assert!(max_diff(&a, &c) < 1e-12);
    }

    #[test]
    fn efficiency_is_monotone(eta0 in 0.01f64..=1.0, tau in 1e-7f64..1e-5, t in 0.0f64..1e-6, dt in 0.0f64..1e-6) {
        let m = DecayModel::new(eta0, tau).unwrap();
        prop_assert!(efficiency_at(&m, t + dt).unwrap() <= efficiency_at(&m, t).unwrap());
        prop_assert!((efficiency_at(&m, 0.0).unwrap() - eta0).abs() < 1e-15);
    }
}
