//! Martin functions of finite-gap sets against closed forms.

use dirac_lab::martin::{
    critical_points_linear, extract_b, martin_build, martin_density, martin_density_fd, martin_eval, martin_measure,
    GapSet,
};
use std::sync::LazyLock;

use dirac_lab::martin::MartinModel;
use dirac_lab::Complex64;
use proptest::prelude::*;

static UNIT_GAP: LazyLock<MartinModel> = LazyLock::new(|| one_gap(-1.0, 1.0));

fn one_gap(a: f64, b: f64) -> MartinModel {
    martin_build(&GapSet::new(vec![(a, b)]).unwrap()).unwrap()
}

/// `Im √(z−c)√(z+c)`, the one-gap Martin function of `(−c, c)`.
fn one_gap_exact(c: f64, z: Complex64) -> f64 {
    let z = Complex64::new(z.re, z.im.abs());
    ((z - c).sqrt() * (z + c).sqrt()).im
}

#[test]
fn symmetric_gap_constant_is_c_squared() {
    for c in [0.5, 1.0, 2.0] {
        let b = extract_b(&one_gap(-c, c)).unwrap();
        assert!((b - c * c).abs() < 1e-4 * c * c, "c={c}: {b}");
    }
}

#[test]
fn general_gap_constant() {
    let (a, b) = (0.3, 1.7);
    let m = one_gap(a, b);
    assert!((m.b_e - (b - a).powi(2) / 4.0).abs() < 1e-4 * 0.49);
    assert!((m.b_e_series - 0.49).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn one_gap_values_match_closed_form(re in -6.0f64..6.0, im in 0.01f64..6.0) {
        let z = Complex64::new(re, im);
        let got = martin_eval(&UNIT_GAP, z).unwrap();
        prop_assert!((got - one_gap_exact(1.0, z)).abs() < 1e-6, "{} vs {}", got, one_gap_exact(1.0, z));
    }
}

#[test]
fn martin_is_symmetric_and_vanishes_on_bands() {
    let m = martin_build(&GapSet::parse("(-2,-1) (0.5,1.5)").unwrap()).unwrap();
    let z = Complex64::new(0.2, 0.7);
    assert_eq!(martin_eval(&m, z).unwrap(), martin_eval(&m, z.conj()).unwrap());
    assert!(martin_eval(&m, Complex64::new(3.0, 0.0)).unwrap().abs() < 1e-10);
    assert!(martin_eval(&m, Complex64::new(1.0, 0.0)).unwrap() > 0.0);
}

#[test]
fn translation_covariance() {
    let set = GapSet::parse("(-1,0.5) (1,2)").unwrap();
    let m = martin_build(&set).unwrap();
    let shifted = martin_build(&set.translate(3.0)).unwrap();
    assert!((m.b_e - shifted.b_e).abs() < 1e-6 * m.b_e);
    for z in [Complex64::new(0.1, 0.4), Complex64::new(-2.0, 1.5)] {
        let a = martin_eval(&m, z).unwrap();
        let b = martin_eval(&shifted, z + 3.0).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn larger_gaps_have_larger_constants() {
    let small = martin_build(&GapSet::parse("(-1,1)").unwrap()).unwrap();
    let more = martin_build(&GapSet::parse("(-1,1) (2,2.5)").unwrap()).unwrap();
    let wider = martin_build(&GapSet::parse("(-1.2,1) (2,2.5)").unwrap()).unwrap();
    assert!(small.b_e < more.b_e && more.b_e < wider.b_e);
}

#[test]
fn critical_points_agree_between_solvers() {
    let set = GapSet::parse("(-3,-2) (-0.5,0.7) (1.5,4)").unwrap();
    let m = martin_build(&set).unwrap();
    let lin = critical_points_linear(&set).unwrap();
    for (a, b) in m.critical_points.iter().zip(&lin) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    for (c, (lo, hi)) in m.critical_points.iter().zip(&set.gaps) {
        assert!(lo < c && c < hi);
    }
    assert!((m.b_e - m.b_e_series).abs() < 1e-6 * m.b_e);
}

#[test]
fn density_matches_normal_derivative() {
    let m = martin_build(&GapSet::parse("(-1,0) (1,2)").unwrap()).unwrap();
    for t in [-2.5, 0.5, 2.7] {
        let d = martin_density(&m, t);
        let fd = martin_density_fd(&m, t, 1e-5).unwrap();
        assert!((d - fd).abs() < 1e-4 * d, "t={t}: {d} vs {fd}");
    }
    assert_eq!(martin_density(&m, 1.5), 0.0);
}

#[test]
fn measure_of_one_gap_window() {
    // mass of [1, T] is √(T²−1)/π for the gap (−1, 1)
    let h = martin_measure(&UNIT_GAP, (-3.0, 3.0), 12).unwrap();
    let exact = 2.0 * 8f64.sqrt() / std::f64::consts::PI;
    assert!((h.binned_mass() - exact).abs() < 1e-9, "{}", h.binned_mass());
    let free = martin_build(&GapSet::free()).unwrap();
    let h = martin_measure(&free, (-3.0, 3.0), 6).unwrap();
    assert!((h.binned_mass() - 6.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn malformed_gap_sets_are_rejected() {
    assert!(GapSet::parse("(1,0)").is_err());
    assert!(GapSet::parse("(0,1) (0.5,2)").is_err());
    assert!(GapSet::parse("(0,1").is_err());
}
