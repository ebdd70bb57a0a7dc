//! Simplex integrals, the kernel and the two-term growth functional.

use dirac_lab::propagation::StepControl;
use dirac_lab::series::{
    growth_residuals, kernel_w_l1, log_ratio_expansion, propagated_log_ratio, simplex_i, small_log_check,
    two_term_functional, two_term_functional_on,
};
use dirac_lab::{Complex64, OperatorData};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn log_ratio_expansion_matches_propagation() {
    let z = c(0.0, 8.0);
    let remainder = 10.0 / (z.im * z.im);
    for (phi, a) in [(OperatorData::constant(1.0).unwrap(), 0.0), (OperatorData::chirp(2.0).unwrap(), 3.0)] {
        let series = log_ratio_expansion(&phi, a, a + 1.0, z).unwrap();
        let direct = propagated_log_ratio(&phi, a, z).unwrap();
        assert!((series - direct).norm() <= remainder, "{}: {series} vs {direct}", phi.label());
    }
}

#[test]
fn expansion_refuses_small_imaginary_part() {
    let phi = OperatorData::constant(1.0).unwrap();
    assert!(log_ratio_expansion(&phi, 0.0, 1.0, c(0.0, 1.0)).is_err());
    assert!(log_ratio_expansion(&phi, 0.0, 2.0, c(0.0, 8.0)).is_err());
}

#[test]
fn small_log_stays_below_bound() {
    for phi in [OperatorData::constant(1.0).unwrap(), OperatorData::gated_chirp(2.0, 2.0).unwrap()] {
        let (lhs, bound, tail) = small_log_check(&phi, 0.5, 2.5, c(0.3, 10.0)).unwrap();
        assert!(lhs <= bound, "{}: {lhs} > {bound}", phi.label());
        assert!(tail < 1e-3);
    }
}

#[test]
fn simplex_integrals_respect_envelope() {
    for phi in [OperatorData::chirp(2.0).unwrap(), OperatorData::gated_chirp(2.0, 2.0).unwrap()] {
        for n in 1..=3 {
            let s = simplex_i(&phi, n, 1.0, 3.5, c(0.5, 2.0)).unwrap();
            assert!(s.value.norm() <= s.bound, "{} n={n}: {} > {}", phi.label(), s.value.norm(), s.bound);
        }
    }
}

#[test]
fn constant_second_simplex_matches_nested_quadrature() {
    // |c|⁴ ∫_{0<t1<t2<t3<t4<L} e^{2iz(t2−t1)} e^{2iz(t4−t3)}: integrate out by the gap variables
    let phi = OperatorData::constant(c(0.6, 0.8)).unwrap();
    let (l, z) = (1.5, c(0.4, 1.3));
    // With u = t2−t1, v = t4−t3 the remaining volume is (L−u−v)²/2.
    let n = 400;
    let h = l / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let u = (i as f64 + 0.5) * h;
        for j in 0..n {
            let v = (j as f64 + 0.5) * h;
            let rest = l - u - v;
            if rest > 0.0 {
                sum += (2.0 * I * z * (u + v)).exp() * rest * rest / 2.0;
            }
        }
    }
    let want = sum * h * h;
    let got = simplex_i(&phi, 2, 0.0, l, z).unwrap().value;
    assert!((got - want).norm() < 1e-4 * want.norm(), "{got} vs {want}");
}

#[test]
fn kernel_norm_closed_form() {
    for z in [c(0.0, 2.0), c(3.0, 0.5)] {
        let y = z.im;
        let exact = z.norm() * (1.0 - (-2.0 * y).exp()) / y;
        assert!((kernel_w_l1(z) - exact).abs() < 1e-10 * exact);
    }
}

#[test]
fn constant_functional_is_translation_invariant() {
    let cst = c(0.7, -0.2);
    let phi = OperatorData::constant(cst).unwrap();
    let z = c(0.3, 4.0);
    let exact = cst.norm_sqr() * ((2.0 * I * z).exp() - 1.0) / (2.0 * I * z);
    for (a, b) in [(0.0, 3.0), (10.0, 17.5)] {
        let v = two_term_functional_on(&phi, a, b, z).unwrap();
        assert!((v - exact).norm() < 1e-12, "[{a},{b}]: {v}");
    }
    assert!(two_term_functional(&phi, 0.0, z).is_err());
}

#[test]
fn constant_residual_has_second_order_increment_and_first_order_boundary_layer() {
    let phi = OperatorData::constant(1.0).unwrap();
    let t = growth_residuals(&phi, 200.0, &[8.0, 16.0, 32.0, 64.0], &StepControl::default()).unwrap();
    assert!(t.increment_slope <= -1.8, "{}", t.increment_slope);
    // the boundary term at the origin decays only like 1/(x y)
    assert!((-1.3..=-0.9).contains(&t.slope), "{}", t.slope);
    assert!(t.to_csv().starts_with("y,x,residual,bound,increment_residual\n"));
}
