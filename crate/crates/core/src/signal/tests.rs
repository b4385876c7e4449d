use super::*;
use crate::biphoton::{build_jsa, BiphotonAmplitude, CrystalSpec, FrequencyAxis, FrequencyGrid, PhaseMatching, PumpSpec, TimeDomain};
use crate::model::{Correlator, CorrelatorExpansion, ExcitonSystem, LiouvilleOperatorSet};
use crate::pathways::{term_table, HomSpec, Nu};
use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn ladder(mu: f64) -> LiouvilleOperatorSet {
    LiouvilleOperatorSet::in_frame(ExcitonSystem::ladder(1.5, 1.4, mu, mu, 0.05).unwrap(), 1.45)
}

fn small_amp() -> &'static BiphotonAmplitude {
    static AMP: OnceLock<BiphotonAmplitude> = OnceLock::new();
    AMP.get_or_init(|| {
        let ax = FrequencyAxis::for_time_step(1.45, 0.2, 128).unwrap();
        let c = CrystalSpec::new(1.45, 1.45, 2.0, -2.0)
            .unwrap()
            .with_phase_matching(PhaseMatching::Gaussian);
        build_jsa(&PumpSpec::new(2.9, 0.5).unwrap(), &c, 0.0, &FrequencyGrid { a: ax, b: ax })
            .unwrap()
            .to_time_domain()
    })
}

fn q() -> QuadratureSpec {
    QuadratureSpec::new(240.0, 0.2)
}

#[test]
fn quadrature_validation() {
    let ops = ladder(1.0);
    assert!(q().validate(&ops).is_ok());
    assert!(QuadratureSpec::new(150.0, 0.2).validate(&ops).is_err());
    assert!(QuadratureSpec::new(240.0, 0.0).validate(&ops).is_err());
    let lab = LiouvilleOperatorSet::new(ExcitonSystem::ladder(1.5, 1.4, 1.0, 1.0, 0.05).unwrap());
    assert!(QuadratureSpec::new(240.0, 0.5).validate(&lab).is_err());
    assert!(QuadratureSpec::new(240.0, 0.2).validate(&lab).is_ok());
    assert_eq!(QuadratureSpec::for_system(&ops, 0.1).cutoff, 240.0);
}

#[test]
fn rule_weights() {
    let t = QuadratureSpec::new(10.0, 0.3);
    let n = t.panels();
    assert_eq!(n, 34);
    let total: f64 = (0..=n).map(|k| t.weight(k)).sum();
    assert_abs_diff_eq!(total, n as f64 * 0.3, epsilon = 1e-12);
    let s = t.with_rule(Rule::Simpson);
    assert_eq!(s.panels() % 2, 0);
    let top = s.panels() as f64 * 0.3;
    let cubic: f64 = (0..=s.panels()).map(|k| s.weight(k) * (k as f64 * 0.3).powi(3)).sum();
    assert_abs_diff_eq!(cubic, top.powi(4) / 4.0, epsilon = 1e-9);
}

#[test]
fn causal_term_vanishes() {
    let ops = ladder(1.0);
    let s_i1 = &term_table()[0];
    let v = term_value(s_i1, -5.0, 3.0, 1.0, small_amp(), &ops, &q()).unwrap();
    assert_eq!(v, Complex64::new(0.0, 0.0));
    let v = term_value(s_i1, 5.0, 3.0, 1.0, small_amp(), &ops, &q()).unwrap();
    assert!(v.norm() > 0.0);
}

#[test]
fn no_coupling_no_signal() {
    let ops = ladder(0.0);
    let c = coincidence(4.0, 2.0, 1.0, small_amp(), &ops, &q(), &HomSpec::default()).unwrap();
    assert_eq!(c, 0.0);
}

#[test]
fn needs_time_domain() {
    let amp = BiphotonAmplitude::from_values(small_amp().grid().clone(), 0.0, small_amp().values().to_vec()).unwrap();
    let r = coincidence(4.0, 2.0, 0.0, &amp, &ladder(1.0), &q(), &HomSpec::default());
    assert!(matches!(r, Err(SignalError::Biphoton(_))));
}

#[test]
fn output_is_twice_real_part() {
    let ops = ladder(1.0);
    let b = coincidence_breakdown(4.0, 2.0, 1.0, small_amp(), &ops, &q(), &HomSpec::default()).unwrap();
    let both = b.total + b.total.conj();
    assert_eq!(both.im, 0.0);
    assert_eq!(both.re, b.coincidence());
    let summed: Complex64 = b.per_correlator.iter().sum();
    assert_abs_diff_eq!((summed - b.total).norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn bs_removed_keeps_direct_terms_only() {
    let ops = ladder(1.0);
    let hom = HomSpec {
        bs_removed: true,
        ..HomSpec::default()
    };
    let b = coincidence_breakdown(4.0, 2.0, 1.0, small_amp(), &ops, &q(), &hom).unwrap();
    for (term, v) in term_table().iter().zip(&b.terms) {
        if term.nu != Nu::I {
            assert_eq!(*v, Complex64::new(0.0, 0.0), "{}", term.label());
        }
    }
}

/// Lattice δ(t₁ − t₂ − s) on a long, flat pump window.
fn lattice_delta(s: f64, dt: f64) -> TimeDomain {
    let n = 256usize;
    let m = (s / dt).round() as i64;
    let mut env = vec![Complex64::new(0.0, 0.0); n * n];
    for n1 in 0..n as i64 {
        let n2 = n1 - m;
        if (0..n as i64).contains(&n2) {
            env[n1 as usize * n + n2 as usize] = Complex64::new(1.0 / dt, 0.0);
        }
    }
    let t0 = -(n as f64 / 2.0) * dt;
    TimeDomain::from_envelope(n, n, (t0, dt, 1.45), (t0, dt, 1.45), env)
}

#[test]
fn f5_terms_gate_on_the_delay() {
    let ops = ladder(1.0);
    let s = 3.0;
    let td = lattice_delta(s, 0.5);
    let q = QuadratureSpec::new(240.0, 0.5).with_reference(ReferenceTime::Fixed { t: 0.0 });
    let ev = Evaluator::from_time_domain(&td, &ops, &q, &HomSpec::default()).unwrap();
    let row = |nu: Nu| {
        term_table()
            .iter()
            .find(|t| t.nu == nu && t.interaction == Correlator::F5)
            .unwrap()
    };
    assert!(ev.term(row(Nu::II), s, 1.0).norm() > 0.0);
    for tau in [s - 1.0, s + 0.5, 1.0] {
        assert_eq!(ev.term(row(Nu::II), tau, 1.0), Complex64::new(0.0, 0.0));
    }
    for tau in [s, -s, 1.0, 5.0] {
        assert_eq!(ev.term(row(Nu::I), tau, 1.0), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn bs_removed_delta_signal_vanishes_off_gate() {
    let ops = ladder(1.0);
    let s = 3.0;
    let td = lattice_delta(s, 0.5);
    let q = QuadratureSpec::new(240.0, 0.5).with_reference(ReferenceTime::Fixed { t: 0.0 });
    let hom = HomSpec {
        bs_removed: true,
        ..HomSpec::default()
    };
    let ev = Evaluator::from_time_domain(&td, &ops, &q, &hom).unwrap();
    for tau in [0.5, 1.0, 2.0, 4.5, 8.0] {
        assert_eq!(ev.coincidence(tau, 2.0), 0.0, "tau = {tau}");
    }
}

fn f(c: Correlator, ops: &LiouvilleOperatorSet, a: f64, b: f64, d: f64) -> Complex64 {
    CorrelatorExpansion::new(c, ops).eval(a, b, d)
}

#[test]
fn short_te_windows() {
    let ops = ladder(1.0);
    let zero = Complex64::new(0.0, 0.0);
    // s < T < 2s: F1 only.
    let w = short_te_terms(0.0, 5.0, 3.0, &ops, &q()).unwrap();
    assert_eq!(w.f1, f(Correlator::F1, &ops, 5.0, 2.0, 1.0));
    assert!(w.f1.norm() > 0.0);
    assert_eq!([w.f2, w.f3_first, w.f3_second, w.f5_direct, w.f5_exchange], [zero; 5]);
    // T < s < 2T: F2 only.
    let w = short_te_terms(0.0, 4.0, 5.0, &ops, &q()).unwrap();
    assert!(w.f2.norm() > 0.0);
    assert_eq!([w.f1, w.f3_first, w.f3_second, w.f5_direct, w.f5_exchange], [zero; 5]);
    // 2s < T: F3(T, s, T−2s) only.
    let w = short_te_terms(0.0, 7.0, 3.0, &ops, &q()).unwrap();
    assert_eq!(w.f3_first, f(Correlator::F3, &ops, 7.0, 3.0, 1.0));
    assert!(w.f3_first.norm() > 0.0);
    assert_eq!([w.f1, w.f2, w.f3_second, w.f5_direct, w.f5_exchange], [zero; 5]);
}

#[test]
fn zero_delay_isolates_f3() {
    let ops = ladder(1.0);
    for (tau, big_t) in [(2.0, 3.0), (-1.0, 4.0), (0.0, 1.0), (6.0, 0.5)] {
        let w = short_te_terms(tau, big_t, 0.0, &ops, &q()).unwrap();
        let f3 = f(Correlator::F3, &ops, big_t, tau, big_t);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(w.f3_first, f3);
        assert_eq!([w.f1, w.f2, w.f3_second, w.f5_direct, w.f5_exchange], [zero; 5]);
        assert_eq!(short_te_zero_delay(tau, big_t, &ops, &q()).unwrap(), -2.0 * f3.re);
        assert_eq!(w.value(), -2.0 * f3.re);
    }
    assert_eq!(short_te_zero_delay(-5.0, 2.0, &ops, &q()).unwrap(), 0.0);
}

#[test]
fn short_te_domain() {
    let ops = ladder(1.0);
    let e = coincidence_short_te(1.0, 2.0, 0.0, &ops, &q()).unwrap_err();
    assert!(e.to_string().contains("s > 0"));
    assert!(coincidence_short_te(-3.0, 2.0, 1.0, &ops, &q()).is_err());
    assert!(coincidence_short_te(-2.0, 2.0, 1.0, &ops, &q()).is_ok());
}

#[test]
fn short_te_gates() {
    let ops = ladder(1.0);
    let w = short_te_terms(3.0, 4.0, 3.0, &ops, &q()).unwrap();
    assert!(w.f5_direct.norm() > 0.0);
    let w = short_te_terms(1.0, 2.0, 5.0, &ops, &q()).unwrap();
    assert!(w.f5_exchange.norm() > 0.0);
    assert_eq!(w.f5_direct, Complex64::new(0.0, 0.0));
}

fn small_axes() -> ScanAxes {
    ScanAxes {
        tau: ScanAxes::range(1.0, 2.0, 3),
        big_t: ScanAxes::range(0.5, 1.5, 2),
        s: vec![0.6, 1.0],
    }
}

#[test]
fn single_point_scan_matches_pointwise() {
    let ops = ladder(1.0);
    let hom = HomSpec::default();
    let g = scan(&ScanAxes::point(4.0, 2.0, 1.0), Mode::Full, small_amp(), &ops, &q(), &hom).unwrap();
    let c = coincidence(4.0, 2.0, 1.0, small_amp(), &ops, &q(), &hom).unwrap();
    assert_eq!(g.values, vec![c]);
    let g = scan(&ScanAxes::point(4.0, 2.0, 1.0), Mode::ShortTe, small_amp(), &ops, &q(), &hom).unwrap();
    assert_eq!(g.values, vec![coincidence_short_te(4.0, 2.0, 1.0, &ops, &q()).unwrap()]);
}

#[test]
fn empty_axis_scan() {
    let axes = ScanAxes {
        tau: vec![],
        ..small_axes()
    };
    let g = scan(&axes, Mode::Full, small_amp(), &ladder(1.0), &q(), &HomSpec::default()).unwrap();
    assert!(g.values.is_empty());
    assert_eq!(SignalGrid::parse(&g.to_text()).unwrap(), g);
}

#[test]
fn scan_rejects_bad_axes_and_domain() {
    let ops = ladder(1.0);
    let hom = HomSpec::default();
    let axes = ScanAxes {
        s: vec![1.0, 1.0],
        ..small_axes()
    };
    assert!(matches!(
        scan(&axes, Mode::Full, small_amp(), &ops, &q(), &hom),
        Err(SignalError::Axis("s", _))
    ));
    let axes = ScanAxes {
        s: vec![0.0, 1.0],
        ..small_axes()
    };
    match scan(&axes, Mode::ShortTe, small_amp(), &ops, &q(), &hom) {
        Err(SignalError::Domain { s, .. }) => assert_eq!(s, 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn scan_is_independent_of_workers() {
    let ops = ladder(1.0);
    let run = |n: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| scan(&small_axes(), Mode::Full, small_amp(), &ops, &q(), &HomSpec::default()).unwrap())
    };
    let one = run(1).to_text();
    assert_eq!(one, run(3).to_text());
}

#[test]
fn grid_text_round_trip() {
    let ops = ladder(1.0);
    let g = scan(&small_axes(), Mode::BsRemoved, small_amp(), &ops, &q(), &HomSpec::default()).unwrap();
    let text = g.to_text();
    let back = SignalGrid::parse(&text).unwrap();
    assert_eq!(back, g);
    assert_eq!(back.to_text(), text);
    assert_eq!(back.value(2, 1, 1), g.values[11]);
}

#[test]
fn grid_parse_errors() {
    let ops = ladder(1.0);
    let g = scan(&ScanAxes::point(4.0, 2.0, 1.0), Mode::ShortTe, small_amp(), &ops, &q(), &HomSpec::default()).unwrap();
    let text = g.to_text();
    assert!(SignalGrid::parse("").is_err());
    assert!(SignalGrid::parse(&text.replace("short_Te", "bogus")).is_err());
    assert!(SignalGrid::parse(&text.replace("4e0\t", "5e0\t")).is_err());
    let mut extra = text.clone();
    extra.push_str("4e0\t2e0\t1e0\t0e0\n");
    assert_eq!(SignalGrid::parse(&extra).unwrap_err().line, 11);
    let truncated: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
    assert!(SignalGrid::parse(&truncated).is_err());
}

#[test]
fn mode_names() {
    for m in [Mode::Full, Mode::ShortTe, Mode::BsRemoved] {
        assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
    }
    assert!("fast".parse::<Mode>().is_err());
}

proptest! {
    #[test]
    fn quadrature_text_round_trip(cutoff in 1.0f64..1e4, step in 1e-3f64..5.0, off in -50.0f64..50.0, simpson: bool, fixed: bool) {
        let mut spec = QuadratureSpec::new(cutoff, step);
        if simpson {
            spec = spec.with_rule(Rule::Simpson);
        }
        spec = spec.with_reference(if fixed { ReferenceTime::Fixed { t: off } } else { ReferenceTime::Centroid { offset: off } });
        let back: QuadratureSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn short_te_real_and_finite(tau in 0.0f64..20.0, big_t in 0.0f64..20.0, s in 0.1f64..20.0) {
        let v = coincidence_short_te(tau, big_t, s, &ladder(1.0), &q()).unwrap();
        prop_assert!(v.is_finite());
    }

    #[test]
    fn window_terms_follow_argument_signs(big_t in 0.1f64..30.0, s in 0.1f64..30.0) {
        let w = short_te_terms(0.0, big_t, s, &ladder(1.0), &q()).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        if 2.0 * s < big_t {
            prop_assert_eq!(w.f1, zero);
            prop_assert_eq!(w.f2, zero);
        }
        if big_t < s {
            prop_assert_eq!(w.f1, zero);
        }
        if s < big_t {
            prop_assert_eq!(w.f2, zero);
        }
        if s < 2.0 * big_t {
            prop_assert_eq!(w.f3_second, zero);
        }
    }
}
