//! Integration checks for operator data against frozen Fresnel-integral
//! reference values (see `tests/oracle/chirp_oracle.py`).

use dirac_lab::quadrature::composite;
use dirac_lab::{Complex64, OperatorData};

fn chirp() -> OperatorData {
    OperatorData::chirp(2.0).unwrap()
}

fn gated() -> OperatorData {
    OperatorData::gated_chirp(2.0, 2.0).unwrap()
}

#[test]
fn chirp_cesaro_matches_reference() {
    let v = chirp().cesaro_l2(1.0e4).unwrap();
    assert!((v - 0.4999778451732231).abs() < 1e-10, "{v}");
}

#[test]
fn gated_cesaro_oscillates_along_dyadic_scales() {
    let reference = [
        (11, 0.33327862359241345),
        (12, 0.16663931179620672),
        (13, 0.3333196536822423),
        (14, 0.16665982684112116),
        (15, 0.3333299136096709),
        (16, 0.16666495680483545),
    ];
    for (e, want) in reference {
        let got = gated().cesaro_l2(2f64.powi(e)).unwrap();
        assert!((got - want).abs() < 1e-10, "2^{e}: {got} vs {want}");
    }
}

#[test]
fn chirp_local_averages_match_reference() {
    let v = chirp().local_average(100.0, 1.0).unwrap();
    assert!((v.re - 3.744706744746029e-05).abs() < 1e-12, "{v}");
    assert_eq!(v.im, 0.0);
    let v = chirp().local_average(3.0, 0.5).unwrap();
    assert!((v.re + 0.5605119018430748).abs() < 1e-12, "{v}");
}

#[test]
fn chirp_triple_norm_matches_reference() {
    let v = chirp().triple_norm(2, 100.0).unwrap();
    assert!((v - 0.8002376249863904).abs() < 1e-6, "{v}");
    assert!((0.5..=1.0).contains(&v));
}

#[test]
fn chirp_profile_matches_reference() {
    // Richardson-extrapolated references at x = 1e3
    for (eps, want) in [
        (1.0, 0.0005684432545492602),
        (0.5, 0.0013524494402670786),
        (0.25, 0.0029171854124747597),
    ] {
        let got = chirp().avg_l2_profile(1.0e3, eps).unwrap();
        assert!((got - want).abs() < 1e-9 * want, "eps={eps}: {got} vs {want}");
    }
    // single-grid references at x = 1e4 carry ~1e-7 Simpson error themselves
    for (eps, want) in [(1.0, 5.686681836697116e-05), (0.5, 0.00013533501403575166)] {
        let got = chirp().avg_l2_profile(1.0e4, eps).unwrap();
        assert!((got - want).abs() < 2e-7 * want, "eps={eps}: {got} vs {want}");
    }
}

#[test]
fn profile_fast_path_matches_brute_force() {
    // x beyond the asymptotic switch, small enough for brute force
    for phi in [chirp(), gated(), OperatorData::chirp(1.5).unwrap()] {
        for eps in [1.0, 0.25] {
            let x = 400.0;
            let got = phi.avg_l2_profile(x, eps).unwrap();
            let mut bps = phi.breakpoints(0.0, x + eps);
            let shifted: Vec<f64> = bps.iter().map(|b| b - eps).collect();
            bps.extend(shifted);
            bps.sort_by(f64::total_cmp);
            let brute = composite(
                0.0,
                x,
                &bps,
                |t| phi.cell_width(t + eps) / 4.0,
                |t| (phi.integral(t, t + eps) / eps).norm_sqr(),
            ) / x;
            // the fast path keeps only leading boundary terms of the
            // oscillatory part; for α = 1.5 at the switch that is ~1e-9
            assert!(
                (got - brute).abs() < 1e-8 * brute.max(1e-6),
                "{} eps={eps}: {got} vs {brute}",
                phi.label()
            );
        }
    }
}

#[test]
fn cesaro_bounded_by_triple_norm() {
    for phi in [chirp(), gated(), OperatorData::constant(Complex64::new(0.3, -1.0)).unwrap()] {
        for x in [1.5, 7.0, 40.0] {
            let lhs = phi.cesaro_l2(x).unwrap();
            let tn = phi.triple_norm(2, x).unwrap();
            assert!(lhs <= x.ceil() / x * tn * tn * (1.0 + 1e-9), "{} x={x}", phi.label());
        }
    }
}

#[test]
fn profile_bounded_by_energy_on_extended_interval() {
    let samples = (0..200)
        .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
        .collect();
    let grid = OperatorData::grid(0.05, samples).unwrap();
    for phi in [chirp(), gated(), grid] {
        for (x, eps) in [(5.0, 0.5), (9.0, 1.0), (30.0, 0.25)] {
            let lhs = phi.avg_l2_profile(x, eps).unwrap();
            let rhs = phi.energy(0.0, x + eps) / x;
            assert!(lhs <= rhs * (1.0 + 1e-10), "{} x={x} eps={eps}", phi.label());
        }
    }
}

#[test]
fn reflect_twice_recovers_closed_forms() {
    let phi = chirp();
    let x0 = 6.0;
    let twice = phi.reflect_translate(x0).unwrap().reflect_translate(x0).unwrap();
    let h = twice.sample_step().unwrap();
    for i in 0..600 {
        let t = i as f64 * 0.01 + 0.003;
        // |φ'| ≤ 2t
        let bound = 2.0 * (t + h) * h;
        assert!((twice.eval(t) - phi.eval(t)).norm() <= bound, "t={t}");
    }
}

#[test]
fn local_average_linear_and_conjugate() {
    let a = OperatorData::grid(0.1, (0..50).map(|k| Complex64::new(k as f64, 1.0)).collect()).unwrap();
    let b = OperatorData::grid(0.1, (0..50).map(|k| Complex64::new(-1.0, 0.5 * k as f64)).collect()).unwrap();
    let sum = OperatorData::grid(
        0.1,
        (0..50)
            .map(|k| Complex64::new(k as f64, 1.0) + Complex64::new(-1.0, 0.5 * k as f64) * 2.0)
            .collect(),
    )
    .unwrap();
    for t in [0.0, 0.77, 2.3] {
        let lhs = sum.local_average(t, 0.9).unwrap();
        let rhs = a.local_average(t, 0.9).unwrap() + b.local_average(t, 0.9).unwrap() * 2.0;
        assert!((lhs - rhs).norm() < 1e-12);
        let c = a.conj().local_average(t, 0.9).unwrap();
        assert!((c - a.local_average(t, 0.9).unwrap().conj()).norm() < 1e-14);
    }
}
