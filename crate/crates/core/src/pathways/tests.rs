use super::*;
use crate::biphoton::{build_jsa, CrystalSpec, FrequencyAxis, FrequencyGrid, PhaseMatching, PumpSpec};
use crate::model::{apply_dipole, Correlator, ExcitonSystem, LiouvilleOperatorSet, Sense, Side, Superop};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

#[test]
fn unfiltered_candidates() {
    assert_eq!(enumerate_interaction_pathways(&[]).len(), 256);
    assert_eq!(enumerate_interaction_pathways(&[Filter::Rwa]).len(), 256);
}

// Brute force: apply the ladder dipole matrices to |g⟩⟨g| and keep sequences
// with a nonzero result.
#[test]
fn ground_start_count_matches_matrix_walk() {
    let ops = LiouvilleOperatorSet::new(ExcitonSystem::ladder(1.5, 1.4, 1.0, 0.8, 0.05).unwrap());
    let all = [
        Superop::new(Side::Left, Sense::Lower),
        Superop::new(Side::Left, Sense::Raise),
        Superop::new(Side::Right, Sense::Lower),
        Superop::new(Side::Right, Sense::Raise),
    ];
    let mut survivors = 0;
    for code in 0..256usize {
        let mut rho = ops.system().initial_state();
        for k in 0..4 {
            let op = all[(code >> (2 * (3 - k))) & 3];
            rho = apply_dipole(&rho, op.side, op.sense, &ops).unwrap();
        }
        if !rho.is_zero() {
            survivors += 1;
        }
    }
    let filtered = enumerate_interaction_pathways(&[Filter::Rwa, Filter::GroundStart]);
    assert_eq!(filtered.len(), survivors);
    assert_eq!(survivors, 48);
}

#[test]
fn five_survivors_match_correlators() {
    let out = enumerate_interaction_pathways(&Filter::ALL);
    assert_eq!(out.len(), 5);
    for (p, c) in out.iter().zip(Correlator::ALL) {
        assert_eq!(p.correlator, Some(c));
        assert_eq!(p.written(), c.sequence());
        assert!(p.plus_cc);
    }
    let again = enumerate_interaction_pathways(&[Filter::LeftTermination, Filter::Rwa, Filter::TwoPerSide, Filter::GroundStart, Filter::PhotonNumber]);
    assert_eq!(out, again);
}

#[test]
fn detection_reduction() {
    let combos = detection_combinations();
    assert_eq!(combos.len(), 16);
    let kept: Vec<Nu> = combos.iter().filter_map(|c| c.nu()).collect();
    assert_eq!(kept.len(), 4);
    for nu in Nu::ALL {
        assert_eq!(kept.iter().filter(|&&k| k == nu).count(), 1);
    }
}

#[test]
fn detection_pathway_signs_and_modes() {
    let full = detection_pathways(&HomSpec::default());
    let signs: Vec<f64> = full.iter().map(|p| p.sign).collect();
    assert_eq!(signs, vec![1.0, 1.0, -1.0, -1.0]);
    for p in &full {
        assert_abs_diff_eq!(p.weight, 1.0, epsilon = 1e-15);
    }
    let removed = detection_pathways(&HomSpec {
        bs_removed: true,
        ..HomSpec::default()
    });
    assert_eq!(removed.len(), 1);
    assert_eq!(removed[0].nu, Nu::I);

    let v = TimeVars {
        t: 4.0,
        tau: 1.5,
        big_t: 0.0,
        ..TimeVars::default()
    };
    let times = |a: [Affine; 2]| [a[0].eval(&v), a[1].eval(&v)];
    assert_eq!(times(full[2].ket), times(full[1].ket));
    assert_eq!(times(full[3].bra), times(full[1].bra));
    assert_eq!(times(full[2].bra), times(full[0].bra));
}

#[test]
fn hom_matrix_examples() {
    let m = hom_matrix(1.3, &HomSpec::balanced(0.0));
    let h = FRAC_1_SQRT_2;
    assert_abs_diff_eq!(m[0][0].re, h, epsilon = 1e-15);
    assert_abs_diff_eq!(m[0][1].im, h, epsilon = 1e-15);
    assert_abs_diff_eq!(m[1][0].im, h, epsilon = 1e-15);
    let hom = HomSpec::new(3.0, 0.6, 0.8).unwrap();
    let e = hom_matrix(2.0, &hom)[0][1];
    let want = Complex64::new(0.0, 0.8) * Complex64::from_polar(1.0, 6.0);
    assert_abs_diff_eq!((e - want).norm(), 0.0, epsilon = 1e-15);
    assert!(HomSpec::new(0.0, 0.6, 0.6).is_err());
    assert!(HomSpec::new(f64::NAN, 0.6, 0.8).is_err());
}

fn unitarity_error(m: &Matrix2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                s += m[k][i].conj() * m[k][j];
            }
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - id).norm());
        }
    }
    worst
}

#[test]
fn hom_unitarity_over_random_draws() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
        let hom = HomSpec::new(rng.gen_range(-500.0..500.0), phi.cos(), phi.sin()).unwrap();
        let m = hom_matrix(rng.gen_range(-5.0..5.0), &hom);
        assert!(unitarity_error(&m) < 1e-12);
    }
}

fn dip_amplitude() -> crate::biphoton::BiphotonAmplitude {
    let ax = FrequencyAxis::for_time_step(1.5, 0.35, 128).unwrap();
    let g = FrequencyGrid { a: ax, b: ax };
    let c = CrystalSpec::new(1.5, 1.5, 2.0, -2.0)
        .unwrap()
        .with_phase_matching(PhaseMatching::Gaussian);
    build_jsa(&PumpSpec::new(3.0, 0.5).unwrap(), &c, 0.0, &g).unwrap()
}

#[test]
fn bare_hom_dip() {
    let amp = dip_amplitude();
    let curve = |t: f64| bare_hom_coincidence(&amp, &HomSpec::balanced(t)).unwrap();
    // The lattice is periodic in T with period N·dt = 44.8 fs.
    let plateau = curve(22.4);
    assert_abs_diff_eq!(plateau, 0.5, epsilon = 1e-3);
    assert!(curve(0.0) < 1e-3 * plateau);
    for t in [0.5, 1.0, 2.5, 7.0] {
        assert_abs_diff_eq!(curve(t), curve(-t), epsilon = 1e-6);
    }
}

#[test]
fn table_structure() {
    let table = term_table();
    assert_eq!(table.len(), 20);
    let mut subterms = 0;
    for term in table {
        let expected = match (term.nu, term.interaction) {
            (Nu::III | Nu::IV, Correlator::F1 | Correlator::F2 | Correlator::F3) => 2,
            _ => 1,
        };
        assert_eq!(term.subterms.len(), expected, "{}", term.label());
        assert_eq!(term.sign, term.nu.sign());
        assert_eq!(term.symmetrized, term.interaction == Correlator::F5);
        subterms += term.subterms.len();
    }
    assert_eq!(subterms, 26);
    for nu in [Nu::I, Nu::II] {
        assert!(table.iter().filter(|t| t.nu == nu).all(|t| t.channel == Channel::Direct));
    }
    for nu in [Nu::III, Nu::IV] {
        assert!(table.iter().filter(|t| t.nu == nu).all(|t| t.channel == Channel::Exchange));
    }
}

#[test]
fn table_rows() {
    let table = term_table();
    let i1 = &table[0];
    assert_eq!((i1.nu, i1.interaction), (Nu::I, Correlator::F1));
    let s = &i1.subterms[0];
    assert_eq!(s.corr_args, [Affine::new(0, 1, 0, 0, 0), Affine::new(0, 0, 0, 1, 0), Affine::new(0, 0, 0, 0, 1)]);
    assert_eq!(s.conj_args, [Affine::new(1, 0, 0, -1, -1), Affine::new(1, 1, 0, 0, 0)]);
    assert_eq!(s.amp_args, [Affine::new(1, 0, 0, 0, 0), Affine::new(1, 0, 0, -1, 0)]);

    let iii3 = table
        .iter()
        .find(|t| t.nu == Nu::III && t.interaction == Correlator::F3)
        .unwrap();
    assert_eq!(iii3.subterms[0].corr_args[0], Affine::new(0, 0, 1, 0, 0));
    assert_eq!(iii3.subterms[1].corr_args[0], Affine::new(0, 1, 1, 0, 0));

    let ii4 = table
        .iter()
        .find(|t| t.nu == Nu::II && t.interaction == Correlator::F4)
        .unwrap();
    assert_eq!(ii4.subterms[0].amp_args, [Affine::new(1, 0, 0, 1, 0), Affine::new(1, 0, 0, 0, -1)]);
}

#[test]
fn table_dump_is_readable() {
    let line = term_table()[0].to_string();
    assert!(line.starts_with("S_{I,1}"));
    assert!(line.contains("Φ*(t−τ₃−τ₄, t+τ)"));
    assert!(line.contains("F1(τ, τ₃, τ₄)"));
}

#[test]
fn affine_parse() {
    assert_eq!(Affine::parse("2T+u-a"), Some(Affine::new(0, 1, 2, -1, 0)));
    assert_eq!(Affine::parse("-b"), Some(Affine::new(0, 0, 0, 0, -1)));
    assert_eq!(Affine::parse(""), None);
    assert_eq!(Affine::parse("t+x"), None);
    assert_eq!(Affine::new(0, 0, 0, 0, 0).to_string(), "0");
}

#[test]
fn entropy_examples() {
    assert_abs_diff_eq!(pathway_entropy(&[0.2; 5]).unwrap(), 5f64.ln(), epsilon = 1e-15);
    assert_eq!(pathway_entropy(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
    assert_abs_diff_eq!(pathway_entropy(&[0.5, 0.5, 0.0, 0.0, 0.0]).unwrap(), LN_2, epsilon = 1e-15);
    assert!(pathway_entropy(&[0.5, 0.6]).is_err());
    assert!(pathway_entropy(&[1.5, -0.5]).is_err());
}

#[test]
fn kl_examples() {
    let p = [0.1, 0.2, 0.3, 0.4];
    assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    assert_abs_diff_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), LN_2, epsilon = 1e-15);
    assert_eq!(
        kl_divergence(&[0.5, 0.5], &[1.0, 0.0]),
        Err(EntropyError::NotAbsolutelyContinuous(1))
    );
    assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn magnitude_probabilities() {
    let c = [
        Complex64::new(3.0, 4.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(-5.0, 0.0),
    ];
    let p = pathway_probabilities(&c, &MagnitudeWeighting).unwrap();
    assert_eq!(p, vec![0.5, 0.0, 0.5]);
    assert_eq!(
        pathway_probabilities(&[Complex64::new(0.0, 0.0)], &MagnitudeWeighting),
        Err(EntropyError::ZeroWeight)
    );
}

fn distribution(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

proptest! {
    #[test]
    fn unitary_for_any_parameters(omega in -10.0f64..10.0, t in -1e3f64..1e3, phi in 0.0f64..1.5707963) {
        let hom = HomSpec::new(t, phi.cos(), phi.sin()).unwrap();
        prop_assert!(unitarity_error(&hom_matrix(omega, &hom)) < 1e-12);
    }

    #[test]
    fn entropy_bounded(raw in prop::collection::vec(1e-6f64..1.0, 5)) {
        let p = distribution(raw);
        let s = pathway_entropy(&p).unwrap();
        prop_assert!((0.0..=5f64.ln() + 1e-12).contains(&s));
    }

    #[test]
    fn gibbs_inequality(a in prop::collection::vec(1e-6f64..1.0, 5), b in prop::collection::vec(1e-6f64..1.0, 5)) {
        let (p, q) = (distribution(a), distribution(b));
        prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
    }

    #[test]
    fn magnitude_weights_form_distribution(re in prop::collection::vec(-1e3f64..1e3, 5), im in prop::collection::vec(-1e3f64..1e3, 5)) {
        let c: Vec<Complex64> = re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let p = pathway_probabilities(&c, &MagnitudeWeighting).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn affine_display_parse(c in prop::array::uniform5(-3i8..=3)) {
        let a = Affine::new(c[0], c[1], c[2], c[3], c[4]);
        let v = TimeVars { t: 1.0, tau: 10.0, big_t: 100.0, t3: 1e3, t4: 1e4 };
        let expect = f64::from(c[0]) + 10.0 * f64::from(c[1]) + 100.0 * f64::from(c[2]) + 1e3 * f64::from(c[3]) + 1e4 * f64::from(c[4]);
        prop_assert_eq!(a.eval(&v), expect);
    }
}
