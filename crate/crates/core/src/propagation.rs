//! Propagation of the eigenequation `V' = i j (z - Φ) V` with
//! `j = diag(-1, 1)` and `Φ = [[0, φ], [conj φ, 0]]`.
//!
//! Steps use the fourth-order commutator-free Magnus scheme: each step is a
//! product of two exponentials of traceless 2×2 matrices, evaluated in
//! closed form. Piecewise-constant data therefore propagate exactly when
//! steps are aligned with the sample cells, and the free problem is exact
//! for any step. Solutions are renormalised after every step.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::OperatorData;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// 2×2 complex matrix, row-major.
pub type Mat2 = [Complex64; 4];

pub const IDENTITY: Mat2 = [ONE, ZERO, ZERO, ONE];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

pub fn mat_vec(a: &Mat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]]
}

fn adjoint(a: &Mat2) -> Mat2 {
    [a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()]
}

/// `exp(B)` for traceless `B`: `cosh(μ) I + sinh(μ)/μ · B`, `μ² = -det B`.
pub fn expm_traceless(b: &Mat2) -> Mat2 {
    let mu2 = b[0] * b[0] + b[1] * b[2];
    let (c, s) = if mu2.norm() < 1e-6 {
        // series keep the small-μ limit accurate
        (
            ONE + mu2 / 2.0 + mu2 * mu2 / 24.0 + mu2 * mu2 * mu2 / 720.0,
            ONE + mu2 / 6.0 + mu2 * mu2 / 120.0 + mu2 * mu2 * mu2 / 5040.0,
        )
    } else {
        let mu = mu2.sqrt();
        (mu.cosh(), mu.sinh() / mu)
    };
    [c + s * b[0], s * b[1], s * b[2], c + s * b[3]]
}

/// Generator `i j (z - Φ)` at a point where the datum equals `phi`.
pub fn generator(phi: Complex64, z: Complex64) -> Mat2 {
    [-I * z, I * phi, -I * phi.conj(), I * z]
}

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Absolute cap on the step.
    pub max_step: f64,
    /// Cap on `h·(|z| + sup|φ|)`.
    pub z_scale: f64,
    /// Cap on the phase advance of φ within one step.
    pub phase_per_step: f64,
    /// Largest admissible propagation length.
    pub horizon: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            max_step: 0.01,
            z_scale: 0.1,
            phase_per_step: 0.05,
            horizon: 1.0e5,
        }
    }
}

impl StepControl {
    pub fn halved(&self) -> Self {
        Self {
            max_step: self.max_step / 2.0,
            z_scale: self.z_scale / 2.0,
            phase_per_step: self.phase_per_step / 2.0,
            horizon: self.horizon,
        }
    }

    pub fn step(&self, phi: &OperatorData, t: f64, z: Complex64) -> f64 {
        let mut h = self.max_step;
        let scale = z.norm() + phi.sup_abs();
        if scale > 0.0 {
            h = h.min(self.z_scale / scale);
        }
        let rate = phi.oscillation_rate(t + h);
        if rate > 0.0 {
            h = h.min(self.phase_per_step / rate);
        }
        h
    }

    fn check_horizon(&self, x: f64) -> Result<()> {
        if !(x.is_finite() && x <= self.horizon) {
            return Err(Error::Domain(format!(
                "propagation length {x} exceeds the configured horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

const MIN_STEP: f64 = 1e-12;

/// Visit the steps `[t0, t1]` that cover `[a, b]`, aligned with the jumps of φ.
fn walk<F>(phi: &OperatorData, a: f64, b: f64, z: Complex64, ctrl: &StepControl, mut f: F) -> Result<()>
where
    F: FnMut(f64, f64) -> Result<()>,
{
    if b <= a {
        return Ok(());
    }
    let bps = phi.breakpoints(a, b);
    let mut next_bp = 0;
    let mut t = a;
    while t < b {
        let h = ctrl.step(phi, t, z);
        if h < MIN_STEP * (1.0 + t.abs()) {
            return Err(Error::Resolution(format!(
                "step size {h:e} at x = {t} cannot resolve the data"
            )));
        }
        while next_bp < bps.len() && bps[next_bp] <= t {
            next_bp += 1;
        }
        let mut stop = b;
        if next_bp < bps.len() {
            stop = stop.min(bps[next_bp]);
        }
        let mut t1 = t + h;
        if t1 >= stop || stop - t1 < 1e-3 * h {
            t1 = stop;
        }
        f(t, t1)?;
        t = t1;
    }
    Ok(())
}

fn step_points(phi: &OperatorData, a: f64, b: f64, z: Complex64, ctrl: &StepControl) -> Result<Vec<f64>> {
    let mut pts = vec![a];
    walk(phi, a, b, z, ctrl, |_, t1| {
        pts.push(t1);
        Ok(())
    })?;
    Ok(pts)
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const CF_HEAVY: f64 = 0.25 + GAUSS_OFFSET;
const CF_LIGHT: f64 = 0.25 - GAUSS_OFFSET;

/// Propagator of one step from `t0` to `t1`.
pub fn step_matrix(phi: &OperatorData, t0: f64, t1: f64, z: Complex64) -> Mat2 {
    let h = t1 - t0;
    let mid = 0.5 * (t0 + t1);
    let a1 = generator(phi.eval(mid - GAUSS_OFFSET * h), z);
    let a2 = generator(phi.eval(mid + GAUSS_OFFSET * h), z);
    if a1 == a2 {
        let b = a1.map(|c| c * h);
        return expm_traceless(&b);
    }
    let first: Mat2 = std::array::from_fn(|k| (a1[k] * CF_HEAVY + a2[k] * CF_LIGHT) * h);
    let second: Mat2 = std::array::from_fn(|k| (a1[k] * CF_LIGHT + a2[k] * CF_HEAVY) * h);
    mat_mul(&expm_traceless(&second), &expm_traceless(&first))
}

/// Inverse of a unimodular 2×2 matrix.
fn unimodular_inverse(m: &Mat2) -> Mat2 {
    [m[3], -m[1], -m[2], m[0]]
}

/// Apply `σ conj(·) σ`, which maps solutions at `z` to solutions at `conj z`.
fn reflect_matrix(m: &Mat2) -> Mat2 {
    [m[3].conj(), m[2].conj(), m[1].conj(), m[0].conj()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub u1: Complex64,
    pub u2: Complex64,
}

impl Spinor {
    pub fn new(u1: Complex64, u2: Complex64) -> Self {
        Self { u1, u2 }
    }

    pub fn max_abs(&self) -> f64 {
        self.u1.norm().max(self.u2.norm())
    }
}

/// Transfer matrix `T(x, z) = mantissa · diag(e^{col_log[0]}, e^{col_log[1]})`,
/// each column of the mantissa normalised to max-entry 1, so a recessive
/// column stays representable next to a dominant one. `∫_0^x T*T` is stored
/// the same way: entry `(j, k)` of `gram` carries `e^{col_log[j] + col_log[k]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub mantissa: Mat2,
    pub col_log: [f64; 2],
    pub gram: Mat2,
    pub x: f64,
    pub z: Complex64,
}

impl TransferMatrix {
    /// Entries `t1..t4`; may overflow for large `Im z · x`.
    pub fn entries(&self) -> Mat2 {
        let s = self.col_log.map(f64::exp);
        let m = &self.mantissa;
        [m[0] * s[0], m[1] * s[1], m[2] * s[0], m[3] * s[1]]
    }

    /// Entries divided by `e^{log_norm}`; the recessive column may underflow.
    pub fn scaled(&self) -> Mat2 {
        let top = self.log_norm();
        let s = self.col_log.map(|c| (c - top).exp());
        let m = &self.mantissa;
        [m[0] * s[0], m[1] * s[1], m[2] * s[0], m[3] * s[1]]
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.mantissa;
        (m[0] * m[3] - m[1] * m[2]) * (self.col_log[0] + self.col_log[1]).exp()
    }

    /// `log max|t_k|`.
    pub fn log_norm(&self) -> f64 {
        self.col_log[0].max(self.col_log[1])
    }

    /// `|det T − 1|` relative to `max(1, |t1 t4| + |t2 t3|)`, the roundoff
    /// scale of the determinant.
    pub fn det_residual(&self) -> f64 {
        let m = &self.mantissa;
        let l2 = self.col_log[0] + self.col_log[1];
        let (p, q) = (m[0] * m[3], m[1] * m[2]);
        let scale = ((p.norm() + q.norm()).ln() + l2).max(0.0);
        ((p - q) * (l2 - scale).exp() - (-scale).exp()).norm()
    }

    /// Max-entry norm of `j − T*jT − 2 Im z ∫T*T`, relative to
    /// `max(1, max|t_k|², 2|Im z| max|∫T*T|)`.
    pub fn energy_residual(&self) -> f64 {
        let m = &self.mantissa;
        let jm: Mat2 = [-m[0], -m[1], m[2], m[3]];
        let tjt = mat_mul(&adjoint(m), &jm);
        let y2 = 2.0 * self.z.im;
        let pair = |k: usize| self.col_log[k / 2] + self.col_log[k % 2];
        let gram_log = (0..4)
            .map(|k| (y2.abs() * self.gram[k].norm()).ln() + pair(k))
            .fold(f64::NEG_INFINITY, f64::max);
        let scale_log = (2.0 * self.log_norm()).max(gram_log).max(0.0);
        let j: Mat2 = [-ONE, ZERO, ZERO, ONE];
        let mut worst = 0.0f64;
        for k in 0..4 {
            let r = j[k] * (-scale_log).exp() - (tjt[k] + self.gram[k] * y2) * (pair(k) - scale_log).exp();
            worst = worst.max(r.norm());
        }
        worst
    }

    fn reflected(&self) -> Self {
        Self {
            mantissa: reflect_matrix(&self.mantissa),
            col_log: [self.col_log[1], self.col_log[0]],
            gram: reflect_matrix(&self.gram),
            x: self.x,
            z: self.z.conj(),
        }
    }
}

pub fn transfer_matrix(phi: &OperatorData, x: f64, z: Complex64) -> Result<TransferMatrix> {
    transfer_matrix_with(phi, x, z, &StepControl::default())
}

pub fn transfer_matrix_with(phi: &OperatorData, x: f64, z: Complex64, ctrl: &StepControl) -> Result<TransferMatrix> {
    let mut out = transfer_path(phi, &[x], z, ctrl)?;
    Ok(out.pop().expect("one checkpoint"))
}

/// Transfer matrices at increasing checkpoints.
pub fn transfer_path(
    phi: &OperatorData,
    checkpoints: &[f64],
    z: Complex64,
    ctrl: &StepControl,
) -> Result<Vec<TransferMatrix>> {
    check_checkpoints(checkpoints, ctrl)?;
    if z.im < 0.0 {
        let up = transfer_path(phi, checkpoints, z.conj(), ctrl)?;
        return Ok(up.iter().map(TransferMatrix::reflected).collect());
    }
    let mut m = IDENTITY;
    let mut col_log = [0.0; 2];
    let mut gram = [ZERO; 4];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut t = 0.0;
    let gram_step = |m0: &Mat2, mh: &Mat2, m1: &Mat2, h: f64, gram: &mut Mat2| {
        // Simpson on ∫ T*T over the step
        let g0 = mat_mul(&adjoint(m0), m0);
        let gh = mat_mul(&adjoint(mh), mh);
        let g1 = mat_mul(&adjoint(m1), m1);
        for k in 0..4 {
            gram[k] += (g0[k] + gh[k] * 4.0 + g1[k]) * (h / 6.0);
        }
    };
    for &x in checkpoints {
        walk(phi, t, x, z, ctrl, |t0, t1| {
            let tm = 0.5 * (t0 + t1);
            let half = mat_mul(&step_matrix(phi, t0, tm, z), &m);
            let next = mat_mul(&step_matrix(phi, tm, t1, z), &half);
            gram_step(&m, &half, &next, t1 - t0, &mut gram);
            let s = [next[0].norm().max(next[2].norm()), next[1].norm().max(next[3].norm())];
            if !s.iter().all(|s| s.is_finite() && *s > 0.0) {
                return Err(Error::Resolution(format!("transfer matrix lost finiteness at x = {t1}")));
            }
            m = [next[0] / s[0], next[1] / s[1], next[2] / s[0], next[3] / s[1]];
            for (k, g) in gram.iter_mut().enumerate() {
                *g /= s[k / 2] * s[k % 2];
            }
            col_log[0] += s[0].ln();
            col_log[1] += s[1].ln();
            Ok(())
        })?;
        t = x;
        out.push(TransferMatrix {
            mantissa: m,
            col_log,
            gram,
            x,
            z,
        });
    }
    Ok(out)
}

fn check_checkpoints(checkpoints: &[f64], ctrl: &StepControl) -> Result<()> {
    let mut prev = 0.0;
    for &x in checkpoints {
        if !(x >= prev) {
            return Err(Error::Domain(format!(
                "checkpoints must be nonnegative and increasing, got {x} after {prev}"
            )));
        }
        prev = x;
    }
    ctrl.check_horizon(prev)
}

/// `e^{logmag} · direction` with `max(|d₁|, |d₂|) = 1`, plus the unwrapped
/// arguments of both components accumulated during propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSolution {
    pub direction: Spinor,
    pub logmag: f64,
    pub phases: [f64; 2],
    pub x: f64,
    pub z: Complex64,
}

impl ScaledSolution {
    fn start(v: Spinor, z: Complex64) -> Self {
        let s = v.max_abs();
        Self {
            direction: Spinor::new(v.u1 / s, v.u2 / s),
            logmag: s.ln(),
            phases: [v.u1.arg(), v.u2.arg()],
            x: 0.0,
            z,
        }
    }

    /// `log u_k` with unwrapped imaginary part (k = 0, 1).
    pub fn log_component(&self, k: usize) -> Complex64 {
        let d = if k == 0 { self.direction.u1 } else { self.direction.u2 };
        Complex64::new(self.logmag + d.norm().ln(), self.phases[k])
    }

    /// Growth field `(1/x) log|u₁ − u₂|`; `-∞` at exact zeros.
    pub fn growth(&self) -> f64 {
        let d = (self.direction.u1 - self.direction.u2).norm();
        if d < 1e-300 {
            return f64::NEG_INFINITY;
        }
        (self.logmag + d.ln()) / self.x
    }

    fn advance(&mut self, m: &Mat2) -> Result<()> {
        let [v1, v2] = mat_vec(m, [self.direction.u1, self.direction.u2]);
        for (k, (new, old)) in [(v1, self.direction.u1), (v2, self.direction.u2)].into_iter().enumerate() {
            if old != ZERO && new != ZERO {
                self.phases[k] += (new * old.conj()).arg();
            } else if new != ZERO {
                self.phases[k] = new.arg();
            }
        }
        let s = v1.norm().max(v2.norm());
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Resolution("solution lost finiteness".into()));
        }
        self.direction = Spinor::new(v1 / s, v2 / s);
        self.logmag += s.ln();
        Ok(())
    }

    fn reflected(&self) -> Self {
        Self {
            direction: Spinor::new(self.direction.u2.conj(), self.direction.u1.conj()),
            logmag: self.logmag,
            phases: [-self.phases[1], -self.phases[0]],
            x: self.x,
            z: self.z.conj(),
        }
    }
}

/// Propagate initial data `v0` to each checkpoint.
pub fn solution_path(
    phi: &OperatorData,
    v0: Spinor,
    checkpoints: &[f64],
    z: Complex64,
    ctrl: &StepControl,
) -> Result<Vec<ScaledSolution>> {
    check_checkpoints(checkpoints, ctrl)?;
    if z.im < 0.0 {
        let w0 = Spinor::new(v0.u2.conj(), v0.u1.conj());
        let up = solution_path(phi, w0, checkpoints, z.conj(), ctrl)?;
        return Ok(up.iter().map(ScaledSolution::reflected).collect());
    }
    if v0.max_abs() == 0.0 || !v0.max_abs().is_finite() {
        return Err(Error::Domain("initial spinor must be finite and nonzero".into()));
    }
    let mut sol = ScaledSolution::start(v0, z);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut t = 0.0;
    for &x in checkpoints {
        walk(phi, t, x, z, ctrl, |t0, t1| sol.advance(&step_matrix(phi, t0, t1, z)))?;
        t = x;
        sol.x = x;
        out.push(sol.clone());
    }
    Ok(out)
}

/// Dirichlet solution `U(0) = (1, 1)`.
pub fn dirichlet_solution(phi: &OperatorData, x: f64, z: Complex64) -> Result<ScaledSolution> {
    dirichlet_path(phi, &[x], z, &StepControl::default()).map(|mut v| v.pop().expect("one checkpoint"))
}

pub fn dirichlet_path(
    phi: &OperatorData,
    checkpoints: &[f64],
    z: Complex64,
    ctrl: &StepControl,
) -> Result<Vec<ScaledSolution>> {
    solution_path(phi, Spinor::new(ONE, ONE), checkpoints, z, ctrl)
}

pub fn growth_h(phi: &OperatorData, x: f64, z: Complex64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("growth field needs x > 0, got {x}")));
    }
    Ok(dirichlet_solution(phi, x, z)?.growth())
}

/// `(det residual, energy residual)` of `T(x, z)`, both relative to the
/// matrix scale (see [`TransferMatrix::det_residual`]).
pub fn conservation_residuals(phi: &OperatorData, x: f64, z: Complex64) -> Result<(f64, f64)> {
    conservation_residuals_with(phi, x, z, &StepControl::default())
}

pub fn conservation_residuals_with(
    phi: &OperatorData,
    x: f64,
    z: Complex64,
    ctrl: &StepControl,
) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("residuals need x > 0, got {x}")));
    }
    let t = transfer_matrix_with(phi, x, z, ctrl)?;
    Ok((t.det_residual(), t.energy_residual()))
}

/// Tolerance for the Schur value leaving the closed unit disk.
pub const DISK_TOLERANCE: f64 = 1e-9;

/// Backward Riccati flow `-i s' = conj(φ) s² - 2 z s + φ` from `s(b) = s_b`.
pub fn riccati_schur(phi: &OperatorData, a: f64, b: f64, z: Complex64, s_b: Complex64) -> Result<Complex64> {
    riccati_schur_with(phi, a, b, z, s_b, &StepControl::default())
}

pub fn riccati_schur_with(
    phi: &OperatorData,
    a: f64,
    b: f64,
    z: Complex64,
    s_b: Complex64,
    ctrl: &StepControl,
) -> Result<Complex64> {
    if !(a < b) {
        return Err(Error::Domain(format!("riccati interval needs a < b, got [{a}, {b}]")));
    }
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("riccati flow needs Im z > 0, got {z}")));
    }
    if !(s_b.norm() <= 1.0 + DISK_TOLERANCE) {
        return Err(Error::Domain(format!("terminal value {s_b} lies outside the unit disk")));
    }
    riccati_segment(phi, a, b, z, s_b, ctrl).map(|(s, _)| s)
}

/// One backward step of the Riccati flow from `t1` to `t0`; also returns the
/// multiplier `ψ₂(t0)/ψ₂(t1)` of the underlying solution.
fn riccati_step_with_log(phi: &OperatorData, t0: f64, t1: f64, z: Complex64, s: Complex64) -> Result<(Complex64, Complex64)> {
    let back = unimodular_inverse(&step_matrix(phi, t0, t1, z));
    let [p1, p2] = mat_vec(&back, [s, ONE]);
    if p2 == ZERO {
        return Err(Error::Instability(format!("Schur flow hit a pole at x = {t0}")));
    }
    let mut next = p1 / p2;
    let r = next.norm();
    if r > 1.0 + DISK_TOLERANCE || !r.is_finite() {
        return Err(Error::Instability(format!(
            "Schur value |s| = {r} left the unit disk at x = {t0}; reduce the step"
        )));
    }
    if r > 1.0 {
        next /= r;
    }
    Ok((next, p2))
}

/// Backward Riccati flow over `[a, b]` from `s(b) = s_b`. Returns `s(a)`
/// and `log ψ₂(b) − log ψ₂(a)` for the solution `ψ = ψ₂ (s, 1)` carried
/// along (imaginary part unwrapped).
pub fn riccati_segment(
    phi: &OperatorData,
    a: f64,
    b: f64,
    z: Complex64,
    s_b: Complex64,
    ctrl: &StepControl,
) -> Result<(Complex64, Complex64)> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("riccati flow needs Im z > 0, got {z}")));
    }
    if b <= a {
        return Ok((s_b, ZERO));
    }
    ctrl.check_horizon(b - a)?;
    let pts = step_points(phi, a, b, z, ctrl)?;
    let mut s = s_b;
    let mut acc = ZERO;
    for w in pts.windows(2).rev() {
        let (next, mult) = riccati_step_with_log(phi, w[0], w[1], z, s)?;
        s = next;
        acc -= mult.ln();
    }
    Ok((s, acc))
}

/// Prüfer phase: `θ' = -2z + 2 Re(φ e^{-iθ})` for real `z`, by RK4 on
/// data-aligned steps; the returned angle is unwrapped.
pub fn prufer_phase(phi: &OperatorData, x: f64, z: f64, theta0: f64) -> Result<f64> {
    prufer_phase_with(phi, x, z, theta0, &StepControl::default())
}

pub fn prufer_phase_with(phi: &OperatorData, x: f64, z: f64, theta0: f64, ctrl: &StepControl) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("Prüfer phase needs x ≥ 0, got {x}")));
    }
    if !z.is_finite() || !theta0.is_finite() {
        return Err(Error::Domain("Prüfer phase needs finite z and θ₀".into()));
    }
    ctrl.check_horizon(x)?;
    let zc = Complex64::new(z, 0.0);
    let rhs = |t: f64, th: f64| -2.0 * z + 2.0 * (phi.eval(t) * Complex64::from_polar(1.0, -th)).re;
    let mut theta = theta0;
    let zero_data = matches!(phi.family(), crate::operator::Family::Zero);
    if zero_data {
        return Ok(theta0 - 2.0 * z * x);
    }
    walk(phi, 0.0, x, zc, ctrl, |t0, t1| {
        let h = t1 - t0;
        let tm = t0 + 0.5 * h;
        // stages sit strictly inside the step so cell-edge jumps are seen
        // from the correct side
        let e0 = t0 + 1e-12 * h.max(1e-300);
        let e1 = t1 - 1e-12 * h.max(1e-300);
        let k1 = rhs(e0, theta);
        let k2 = rhs(tm, theta + 0.5 * h * k1);
        let k3 = rhs(tm, theta + 0.5 * h * k2);
        let k4 = rhs(e1, theta + h * k3);
        theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        Ok(())
    })?;
    Ok(theta)
}

/// `h(x, z)` over a z-grid and x-checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthField {
    pub zs: Vec<Complex64>,
    pub xs: Vec<f64>,
    /// `values[i][k] = h(xs[k], zs[i])`
    pub values: Vec<Vec<f64>>,
}

impl GrowthField {
    pub fn compute(phi: &OperatorData, zs: &[Complex64], xs: &[f64], ctrl: &StepControl) -> Result<Self> {
        if xs.first().is_some_and(|&x| x <= 0.0) {
            return Err(Error::Domain("growth checkpoints must be positive".into()));
        }
        let mut values = Vec::with_capacity(zs.len());
        for &z in zs {
            let path = dirichlet_path(phi, xs, z, ctrl)?;
            values.push(path.iter().map(ScaledSolution::growth).collect());
        }
        Ok(Self {
            zs: zs.to_vec(),
            xs: xs.to_vec(),
            values,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_z,im_z,x,h\n");
        for (z, row) in self.zs.iter().zip(&self.values) {
            for (x, h) in self.xs.iter().zip(row) {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    crate::output::fmt_f64(z.re),
                    crate::output::fmt_f64(z.im),
                    crate::output::fmt_f64(*x),
                    crate::output::fmt_f64(*h)
                );
            }
        }
        out
    }
}
