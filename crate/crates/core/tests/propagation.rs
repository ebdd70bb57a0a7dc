//! Transfer matrices, Dirichlet solutions and the Prüfer phase against
//! closed forms.

use dirac_lab::propagation::{
    conservation_residuals_with, dirichlet_path, growth_h, prufer_phase, transfer_matrix, transfer_path, GrowthField,
    StepControl,
};
use dirac_lab::{Complex64, OperatorData};
use proptest::prelude::*;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// max_k |t_k − e_k| / max(1, max |e_k|), evaluated without overflow.
fn scaled_error(t: &dirac_lab::propagation::TransferMatrix, exact_log: [Option<Complex64>; 4]) -> f64 {
    let top = exact_log.iter().flatten().map(|l| l.re).fold(0.0f64, f64::max);
    (0..4)
        .map(|k| {
            let got = t.mantissa[k] * (t.col_log[k % 2] - top).exp();
            let want = exact_log[k].map_or(Complex64::new(0.0, 0.0), |l| (l - top).exp());
            (got - want).norm()
        })
        .fold(0.0, f64::max)
}

/// `exp(x·A)` for the constant generator, in closed form.
fn constant_transfer(cst: Complex64, z: Complex64, x: f64) -> [Complex64; 4] {
    let a = [-I * z, I * cst, -I * cst.conj(), I * z];
    let mu = (cst.norm_sqr() - z * z).sqrt();
    let (ch, sh) = ((mu * x).cosh(), (mu * x).sinh() / mu);
    [ch + sh * a[0], sh * a[1], sh * a[2], ch + sh * a[3]]
}

#[test]
fn free_transfer_is_exact_across_the_grid() {
    let phi = OperatorData::zero();
    for &x in &[1.0, 17.5, 100.0] {
        for &z in &[c(10.0, 0.0), c(0.0, 10.0), c(-6.0, 8.0), c(3.0, -4.0), c(0.1, 0.2)] {
            let t = transfer_matrix(&phi, x, z).unwrap();
            let err = scaled_error(&t, [Some(-I * z * x), None, None, Some(I * z * x)]);
            assert!(err < 1e-8, "x={x} z={z}: {err}");
        }
    }
}

#[test]
fn constant_transfer_matches_matrix_exponential() {
    for &(cst, z) in &[(c(1.0, 0.0), c(0.3, 0.8)), (c(0.4, -0.7), c(-1.2, 0.5)), (c(2.0, 1.0), c(0.5, -0.3))] {
        let phi = OperatorData::constant(cst).unwrap();
        let x = 6.0;
        let t = transfer_matrix(&phi, x, z).unwrap().entries();
        let e = constant_transfer(cst, z, x);
        let scale = e.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for k in 0..4 {
            assert!((t[k] - e[k]).norm() < 1e-10 * scale, "c={cst} z={z} k={k}: {} vs {}", t[k], e[k]);
        }
    }
}

#[test]
fn growth_field_is_conjugation_symmetric() {
    let phi = OperatorData::chirp(2.0).unwrap();
    for z in [c(0.7, 1.1), c(-1.5, 0.5)] {
        let up = growth_h(&phi, 40.0, z).unwrap();
        let down = growth_h(&phi, 40.0, z.conj()).unwrap();
        assert!((up - down).abs() <= 1e-12, "{up} vs {down}");
    }
}

#[test]
fn free_growth_field_tends_to_imaginary_part() {
    let zs = [c(0.0, 0.5), c(1.0, 2.0), c(-2.0, 1.0)];
    let field = GrowthField::compute(&OperatorData::zero(), &zs, &[50.0, 200.0], &StepControl::default()).unwrap();
    for (z, row) in zs.iter().zip(&field.values) {
        for (k, &x) in field.xs.iter().enumerate() {
            let u = (-I * z * x).exp() - (I * z * x).exp();
            let want = u.norm().ln() / x;
            assert!((row[k] - want).abs() < 1e-10, "z={z} x={x}: {} vs {want}", row[k]);
        }
    }
    assert!(field.to_csv().starts_with("re_z,im_z,x,h\n"));
}

#[test]
fn conservation_improves_under_step_halving() {
    let phi = OperatorData::constant(1.0).unwrap();
    let coarse = StepControl {
        max_step: 0.2,
        z_scale: 2.0,
        ..StepControl::default()
    };
    let z = c(0.4, 0.3);
    let (d1, e1) = conservation_residuals_with(&phi, 50.0, z, &coarse).unwrap();
    let (_, e2) = conservation_residuals_with(&phi, 50.0, z, &coarse.halved()).unwrap();
    assert!(d1 < 1e-12, "det residual {d1}");
    assert!(e1 > 1e-11 && e2 * 8.0 <= e1, "{e1} -> {e2}");
}

#[test]
fn prufer_phase_agrees_with_transfer_argument() {
    // θ with u₁/u₂ = e^{iθ}: compare with the Dirichlet solution at real z
    for phi in [OperatorData::constant(c(0.8, 0.3)).unwrap(), OperatorData::chirp(2.0).unwrap()] {
        for &z in &[-1.7, 0.25, 2.2] {
            let x = 12.0;
            let theta = prufer_phase(&phi, x, z, 0.0).unwrap();
            let u = &dirichlet_path(&phi, &[x], c(z, 0.0), &StepControl::default()).unwrap()[0];
            let ratio = u.direction.u1 / u.direction.u2;
            assert!((ratio.norm() - 1.0).abs() < 1e-9, "|u1/u2| = {}", ratio.norm());
            let diff = (c(0.0, theta).exp() - ratio).norm();
            assert!(diff < 1e-6, "{} z={z}: {diff}", phi.label());
        }
    }
}

#[test]
fn checkpoints_must_increase() {
    let phi = OperatorData::zero();
    assert!(transfer_path(&phi, &[2.0, 1.0], I, &StepControl::default()).is_err());
    assert!(growth_h(&phi, 0.0, I).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn determinant_stays_one(re in -3.0f64..3.0, im in -2.0f64..2.0, x in 0.5f64..30.0) {
        let phi = OperatorData::gated_chirp(2.0, 2.0).unwrap();
        let t = transfer_matrix(&phi, x, c(re, im)).unwrap();
        prop_assert!(t.det_residual() < 1e-9);
        prop_assert!(t.energy_residual() < 1e-7);
    }
}

#[test]
fn recessive_column_survives_large_growth() {
    // t4 = e^{−400} next to t1 = e^{400}: the determinant stays resolvable
    let t = transfer_matrix(&OperatorData::zero(), 200.0, c(1.0, 2.0)).unwrap();
    assert!(t.det_residual() < 1e-9, "{}", t.det_residual());
    assert!((t.col_log[0] - 400.0).abs() < 1e-9 && (t.col_log[1] + 400.0).abs() < 1e-9);
}
