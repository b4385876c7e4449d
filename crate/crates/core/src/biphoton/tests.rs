use super::*;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn pump() -> PumpSpec {
    PumpSpec::new(3.0, 0.5).unwrap()
}

fn symmetric_crystal() -> CrystalSpec {
    CrystalSpec::new(1.5, 1.5, 10.0, -10.0).unwrap()
}

fn grid(n: usize, dt: f64) -> FrequencyGrid {
    let ax = FrequencyAxis::for_time_step(1.5, dt, n).unwrap();
    FrequencyGrid { a: ax, b: ax }
}

#[test]
fn pump_and_crystal_validation() {
    assert!(PumpSpec::new(3.0, 0.0).is_err());
    assert!(PumpSpec::new(-1.0, 0.1).is_err());
    assert!(CrystalSpec::new(1.0, f64::NAN, 1.0, 1.0).is_err());
    assert!(!CrystalSpec::new(1.5, 1.5, 5.0, 5.0).unwrap().is_exchange_asymmetric());
}

#[test]
fn degenerate_peak_value() {
    let p = pump();
    let c = CrystalSpec::new(1.5, 1.5, 50.0, 30.0).unwrap();
    let raw = (c.phi(&p, 1.5, 1.5) + c.phi(&p, 1.5, 1.5)) * FRAC_1_SQRT_2;
    assert_abs_diff_eq!(raw, 2f64.sqrt() * p.envelope(3.0), epsilon = 1e-15);
}

#[test]
fn nondegenerate_point_value() {
    let c = CrystalSpec::new(1.5, 1.5, 50.0, 30.0).unwrap();
    assert_abs_diff_eq!(c.phi(&pump(), 1.6, 1.3), 0.808_476_435_556_534, epsilon = 1e-14);
}

#[test]
fn exchange_symmetry_is_exact() {
    let g = grid(96, 0.25);
    let c = CrystalSpec::new(1.5, 1.5, 4.0, -1.0)
        .unwrap()
        .with_phase_matching(PhaseMatching::Gaussian);
    let sym = BiphotonAmplitude::from_jsa_fn(&g, 0.0, |a, b| Complex64::new(c.phi(&pump(), a, b), 0.0)).unwrap();
    let anti = BiphotonAmplitude::from_jsa_fn(&g, PI, |a, b| Complex64::new(c.phi(&pump(), a, b), 0.0)).unwrap();
    for i in 0..96 {
        assert_eq!(anti.value(i, i), Complex64::new(0.0, 0.0));
        for j in 0..96 {
            assert_eq!(sym.value(i, j), sym.value(j, i));
            assert_eq!(anti.value(i, j), -anti.value(j, i));
        }
    }
}

#[test]
fn coverage_refuses_small_grid() {
    let g = FrequencyGrid::square(1.5, 0.05, 64).unwrap();
    let e = build_jsa(&pump(), &symmetric_crystal(), 0.0, &g).unwrap_err();
    assert!(matches!(e, BiphotonError::Coverage { .. } | BiphotonError::Grid(_)));
    let narrow = FrequencyGrid::square(1.5, 0.01, 64).unwrap();
    assert!(matches!(
        build_jsa(&pump(), &symmetric_crystal(), 0.0, &narrow),
        Err(BiphotonError::Grid(_))
    ));
}

#[test]
fn normalization_in_both_domains() {
    let g = grid(512, 0.1);
    let amp = build_jsa(&pump(), &symmetric_crystal(), 0.0, &g).unwrap();
    assert_abs_diff_eq!(amp.norm_sqr(), 1.0, epsilon = 1e-12);
    let td = amp.to_time_domain();
    assert_abs_diff_eq!(td.time_domain().unwrap().norm_sqr(), 1.0, epsilon = 1e-9);
}

#[test]
fn delay_is_an_exact_translation() {
    let g = grid(128, 0.25);
    let c = symmetric_crystal().with_phase_matching(PhaseMatching::Gaussian);
    let base = build_jsa(&pump(), &c, 0.0, &g).unwrap();
    let zero = base.to_time_domain();
    let direct = base.with_delay(10.0, DelayArm::A).to_time_domain();
    let (t0, t10) = (zero.time_domain().unwrap(), direct.time_domain().unwrap());
    assert_abs_diff_eq!(t10.t0_a - t0.t0_a, 10.0, epsilon = 1e-12);
    let peak = t0.envelope().iter().map(|z| z.norm()).fold(0.0, f64::max);
    for n1 in (0..t10.na).step_by(3) {
        for n2 in (0..t10.nb).step_by(3) {
            let (t1, t2) = (t10.time_a(n1), t10.time_b(n2));
            let d = t10.sample(n1, n2) - t0.value(t1 - 10.0, t2);
            assert!(d.norm() < 1e-9 * peak, "{n1},{n2}: {}", d.norm());
        }
    }
    // Shift theorem applied to an existing cache agrees with the transform.
    let shifted = zero.with_delay(10.0, DelayArm::A);
    let ts = shifted.time_domain().unwrap();
    for (a, b) in ts.envelope().iter().zip(t10.envelope()) {
        assert!((a - b).norm() < 1e-9 * peak);
    }
    assert_eq!(ts.t0_a, t10.t0_a);
}

#[test]
fn delay_on_arm_b() {
    let g = grid(64, 0.3);
    let c = symmetric_crystal().with_phase_matching(PhaseMatching::Gaussian);
    let base = build_jsa(&pump(), &c, 0.0, &g).unwrap();
    let zero = base.to_time_domain();
    let d = base.with_delay(-3.0, DelayArm::B).to_time_domain();
    let (t0, tb) = (zero.time_domain().unwrap(), d.time_domain().unwrap());
    let (n1, n2) = (tb.na / 2 + 1, tb.nb / 2 - 2);
    let got = tb.sample(n1, n2);
    let want = t0.value(tb.time_a(n1), tb.time_b(n2) + 3.0);
    assert!((got - want).norm() < 1e-12);
}

// Correlated Gaussian exp(−X²/(4σ₊²) − Y²/(4σ₋²)), X = δa+δb, Y = δa−δb.
#[test]
fn gaussian_transform_matches_closed_form() {
    let (sp, sm) = (0.4, 1.1);
    let (p, m) = (1.0 / (2.0 * sp * sp), 1.0 / (2.0 * sm * sm));
    let g = grid(128, 0.3);
    let f = |a: f64, b: f64| {
        let (x, y) = (a + b - 3.0, a - b);
        Complex64::new((-x * x / (4.0 * sp * sp) - y * y / (4.0 * sm * sm)).exp(), 0.0)
    };
    let amp = BiphotonAmplitude::from_jsa_fn(&g, 0.0, f).unwrap().to_time_domain();
    let td = amp.time_domain().unwrap();
    let norm = (0.5 * PI / (p * m).sqrt()).sqrt();
    let peak = 1.0 / (2.0 * (p * m).sqrt()) / norm;
    for n1 in (0..td.na).step_by(5) {
        for n2 in (0..td.nb).step_by(5) {
            let (t1, t2) = (td.time_a(n1), td.time_b(n2));
            let (u, v) = (t1 + t2, t1 - t2);
            let want = peak * (-u * u / (8.0 * p) - v * v / (8.0 * m)).exp();
            let got = td.env_sample(n1, n2);
            assert!((got - want).norm() < 1e-6 * peak, "{t1},{t2}");
        }
    }
    assert_abs_diff_eq!(entanglement_time(&amp).unwrap(), 1.0 / sm, epsilon = 1e-6);
}

#[test]
fn off_lattice_interpolation() {
    let g = grid(128, 0.3);
    let f = |a: f64, b: f64| {
        let (x, y) = (a + b - 3.0, a - b);
        Complex64::new((-x * x - y * y / 1.5).exp(), 0.0)
    };
    let td = BiphotonAmplitude::from_jsa_fn(&g, 0.0, f).unwrap().to_time_domain_padded(4);
    let td = td.time_domain().unwrap();
    let peak = td.envelope().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let exact = |t1: f64, t2: f64| {
        let (p, m) = (2.0, 4.0 / 3.0);
        let (u, v) = (t1 + t2, t1 - t2);
        (-u * u / (8.0 * p) - v * v / (8.0 * m)).exp()
    };
    let scale = td.env_sample(td.na / 2, td.nb / 2).re;
    for (t1, t2) in [(0.1234, -0.31), (1.01, 0.77), (-2.2, -1.9)] {
        let got = td.envelope_at(t1, t2);
        assert!((got.re - scale * exact(t1, t2)).abs() < 1e-3 * peak);
    }
}

#[test]
fn delta_limit_examples() {
    assert_eq!(delta_limit_amplitude(5.0, 5.0, 0.0, 0.5), 2.0);
    assert_eq!(delta_limit_amplitude(5.0, 0.0, 2.0, 0.5), 0.0);
    assert_eq!(delta_limit_with(5.0, 3.0, 2.0, 0.5, DeltaConvention::ValueOne), 1.0);
    let h = 0.25;
    let sum: f64 = (-200..200).map(|k| delta_limit_amplitude(k as f64 * h, 1.0, 0.0, h) * h).sum();
    assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
}

#[test]
fn entanglement_time_of_lattice_delta() {
    let n = 32;
    let mut env = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        env[k * n + k] = Complex64::new(1.0, 0.0);
    }
    let td = TimeDomain::from_envelope(n, n, (-8.0, 0.5, 1.0), (-8.0, 0.5, 1.0), env);
    assert!(td.difference_width().unwrap() <= 0.5);
    let zero = TimeDomain::from_envelope(2, 2, (0.0, 1.0, 0.0), (0.0, 1.0, 0.0), vec![Complex64::new(0.0, 0.0); 4]);
    assert!(matches!(zero.difference_width(), Err(BiphotonError::Degenerate)));
    let amp = build_jsa(&pump(), &symmetric_crystal(), 0.0, &grid(512, 0.1)).unwrap();
    assert!(matches!(entanglement_time(&amp), Err(BiphotonError::NoTimeDomain)));
}

#[test]
fn entanglement_time_scales_with_group_delays() {
    let g = grid(256, 0.2);
    let p = PumpSpec::new(3.0, 0.3).unwrap();
    let width = |ta: f64, tb: f64| {
        let c = CrystalSpec::new(1.5, 1.5, ta, tb)
            .unwrap()
            .with_phase_matching(PhaseMatching::Gaussian);
        entanglement_time(&build_jsa(&p, &c, 0.0, &g).unwrap().to_time_domain()).unwrap()
    };
    for (ta, tb, tol) in [(2.0, -2.0, 1e-3), (1.5, -2.5, 0.02), (3.0, 1.0, 0.1)] {
        let ratio = width(2.0 * ta, 2.0 * tb) / width(ta, tb);
        assert!((ratio - 2.0).abs() < tol, "({ta}, {tb}): ratio {ratio}");
    }
}

// L¹ distance between the normalized t₁−t₂ marginal and the lattice delta.
fn delta_l1(amp: &BiphotonAmplitude) -> f64 {
    let td = amp.time_domain().unwrap();
    let mut on = 0.0;
    let mut total = 0.0;
    for n1 in 0..td.na {
        for n2 in 0..td.nb {
            let w = td.env_sample(n1, n2).norm_sqr();
            total += w;
            if delta_limit_amplitude(td.time_a(n1), td.time_b(n2), amp.delay(), td.dt_a) > 0.0 {
                on += w;
            }
        }
    }
    2.0 * (1.0 - on / total)
}

#[test]
fn delta_limit_convergence() {
    let g = grid(128, 0.25);
    let p = PumpSpec::new(3.0, 0.8).unwrap();
    let mut last = f64::INFINITY;
    for k in 0..5 {
        let t = 4.0 / f64::from(1 << k);
        let c = CrystalSpec::new(1.5, 1.5, t, -t)
            .unwrap()
            .with_phase_matching(PhaseMatching::Gaussian);
        let amp = build_jsa(&p, &c, 0.0, &g).unwrap().with_delay(1.0, DelayArm::A).to_time_domain();
        let e = delta_l1(&amp);
        assert!(e < last, "step {k}: {e} >= {last}");
        last = e;
    }
}

#[test]
fn time_intensity_export() {
    let g = grid(32, 0.5);
    let c = symmetric_crystal().with_phase_matching(PhaseMatching::Gaussian);
    let amp = BiphotonAmplitude::from_jsa_fn(&g, 0.0, |a, b| Complex64::new(c.phi(&pump(), a, b), 0.0))
        .unwrap()
        .to_time_domain();
    let m = amp.time_domain().unwrap().intensity();
    assert_eq!(m.domain, "time");
    assert_eq!(IntensityMatrix::parse(&m.to_text()).unwrap(), m);
}

#[test]
fn matrix_parse_errors() {
    assert!(IntensityMatrix::parse("").is_err());
    let bad = "# domain = x\n# axis_a start=0e0 step=1e0 len=1\n# axis_b start=0e0 step=1e0 len=2\n1e0\n";
    assert_eq!(IntensityMatrix::parse(bad).unwrap_err().line, 4);
}

proptest! {
    #[test]
    fn spectral_export_round_trips(vals in prop::collection::vec(0.0f64..1e3, 12), start in -5.0f64..5.0, step in 1e-3f64..2.0) {
        let m = IntensityMatrix {
            domain: "frequency".into(),
            axis_a: LatticeAxis { start, step, len: 3 },
            axis_b: LatticeAxis { start: -start, step: step * 0.5, len: 4 },
            values: vals,
        };
        let text = m.to_text();
        let back = IntensityMatrix::parse(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn exchange_phase_is_unimodular(theta in -10.0f64..10.0) {
        prop_assert!((exchange_phase(theta).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jsa_normalized_for_random_crystals(ta in 1.0f64..4.0, tb in -4.0f64..-1.0, theta in 0.0f64..6.28) {
        let c = CrystalSpec::new(1.5, 1.5, ta, tb).unwrap().with_phase_matching(PhaseMatching::Gaussian);
        let amp = build_jsa(&pump(), &c, theta, &grid(64, 0.35)).unwrap();
        prop_assert!((amp.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
