//! Weyl disks, the Schur function and the Weyl solution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::OperatorData;
use crate::propagation::{riccati_segment, transfer_path, ScaledSolution, Spinor, StepControl, TransferMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub const UNIT: Disk = Disk {
        center: Complex64::new(0.0, 0.0),
        radius: 1.0,
    };

    /// `other ⊆ self` up to `tol`.
    pub fn contains(&self, other: &Disk, tol: f64) -> bool {
        (other.center - self.center).norm() + other.radius <= self.radius + tol
    }

    /// `other` lies in the open interior of `self`.
    pub fn strictly_contains(&self, other: &Disk) -> bool {
        (other.center - self.center).norm() + other.radius < self.radius
    }

    /// Slack `r₁ − r₂ − |c₂ − c₁|` of the nesting `other ⊆ self`.
    pub fn nesting_margin(&self, other: &Disk) -> f64 {
        self.radius - other.radius - (other.center - self.center).norm()
    }
}

/// Disk `D(x, z)` from a transfer matrix:
/// `r = 1/(|t1|² − |t3|²)`, `c = (conj(t3) t4 − conj(t1) t2)/(|t1|² − |t3|²)`.
pub fn disk_from_transfer(t: &TransferMatrix) -> Result<Disk> {
    let m = &t.mantissa;
    let n = m[0].norm_sqr() - m[2].norm_sqr();
    let log_gap = n.ln() + 2.0 * t.col_log[0];
    if !(n > 0.0) || !(log_gap > 0.0) {
        return Err(Error::PropagationAccuracy(format!(
            "|t1|² − |t3|² ≤ 1 at x = {}, z = {}",
            t.x, t.z
        )));
    }
    Ok(Disk {
        center: (m[2].conj() * m[3] - m[0].conj() * m[1]) * (t.col_log[1] - t.col_log[0]).exp() / n,
        radius: (-log_gap).exp(),
    })
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Weyl disks need Im z > 0, got {z}")));
    }
    Ok(())
}

pub fn weyl_disk(phi: &OperatorData, x: f64, z: Complex64) -> Result<Disk> {
    Ok(weyl_disks(phi, &[x], z, &StepControl::default())?[0])
}

/// Disks at increasing positive checkpoints.
pub fn weyl_disks(phi: &OperatorData, xs: &[f64], z: Complex64, ctrl: &StepControl) -> Result<Vec<Disk>> {
    check_upper(z)?;
    if xs.first().is_some_and(|&x| x <= 0.0) {
        return Err(Error::Domain("Weyl disks need x > 0".into()));
    }
    transfer_path(phi, xs, z, ctrl)?.iter().map(disk_from_transfer).collect()
}

/// Disk `D⁻(x, z)` of the reflected problem on `[0, x]`.
pub fn reflected_disk(phi: &OperatorData, x: f64, z: Complex64) -> Result<Disk> {
    weyl_disk(&phi.reflect_translate(x)?, x, z)
}

/// Upper bound `2 exp(−2 Im z (b − a) + 2 ∫_a^b |φ|)` on the distance of
/// two Schur values propagated back from `b` to `a`.
pub fn contraction_bound(phi: &OperatorData, a: f64, b: f64, z: Complex64) -> f64 {
    2.0 * (-2.0 * z.im * (b - a) + 2.0 * phi.abs_integral(a, b)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurEstimate {
    /// Center of the first disk meeting the target radius.
    pub s: Complex64,
    /// Radius of that disk: a certified bound on `|s − s(z)|`.
    pub radius: f64,
    pub x_used: f64,
    /// False when the horizon was reached before the target radius.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurOptions {
    pub horizon: f64,
    pub start: f64,
    pub growth: f64,
    pub step: StepControl,
}

impl Default for SchurOptions {
    fn default() -> Self {
        Self {
            horizon: 400.0,
            start: 0.5,
            growth: 2.0,
            step: StepControl::default(),
        }
    }
}

pub fn schur_function(phi: &OperatorData, z: Complex64, target_radius: f64) -> Result<SchurEstimate> {
    schur_function_with(phi, z, target_radius, &SchurOptions::default())
}

/// Lengthens `x` geometrically until the Weyl disk radius drops to
/// `target_radius` or the horizon is reached.
pub fn schur_function_with(
    phi: &OperatorData,
    z: Complex64,
    target_radius: f64,
    opts: &SchurOptions,
) -> Result<SchurEstimate> {
    check_upper(z)?;
    if !(target_radius > 0.0 && target_radius < 1.0) {
        return Err(Error::Domain(format!("target radius must lie in (0, 1), got {target_radius}")));
    }
    let mut x = opts.start.min(opts.horizon);
    loop {
        let disk = weyl_disks(phi, &[x], z, &opts.step)?[0];
        if disk.radius <= target_radius || x >= opts.horizon {
            return Ok(SchurEstimate {
                s: disk.center,
                radius: disk.radius,
                x_used: x,
                converged: disk.radius <= target_radius,
            });
        }
        // aim directly at the target using the observed decay rate
        let rate = -disk.radius.ln() / x;
        let aim = if rate > 0.0 { -target_radius.ln() / rate * 1.05 } else { x * opts.growth };
        x = aim.clamp(x * 1.1, x * opts.growth.max(1.1) * 4.0).min(opts.horizon);
    }
}

/// Extra length beyond the last checkpoint used to seed the backward flow.
fn seed_length(z: Complex64) -> f64 {
    (25.0 / z.im).clamp(2.0, 400.0)
}

/// Weyl solution `Ψ = ψ₂ (s(x, z), 1)` normalised by `ψ₂(0) = 1`.
pub fn weyl_solution(phi: &OperatorData, x: f64, z: Complex64) -> Result<ScaledSolution> {
    weyl_path(phi, &[x], z, &StepControl::default()).map(|mut v| v.pop().expect("one checkpoint"))
}

/// Weyl solution at increasing checkpoints. The decaying solution is
/// obtained by the backward Riccati flow seeded with `s = 0` beyond the last
/// checkpoint, which is stable; `log ψ₂` is accumulated along the same
/// flow.
pub fn weyl_path(phi: &OperatorData, xs: &[f64], z: Complex64, ctrl: &StepControl) -> Result<Vec<ScaledSolution>> {
    check_upper(z)?;
    let mut prev = 0.0;
    for &x in xs {
        if !(x >= prev) {
            return Err(Error::Domain("checkpoints must be nonnegative and increasing".into()));
        }
        prev = x;
    }
    let last = xs.last().copied().unwrap_or(0.0);
    let tail = seed_length(z);
    let (mut s, _) = riccati_segment(phi, last, last + tail, z, Complex64::new(0.0, 0.0), ctrl)?;
    // walk back through the checkpoints, recording s and log-increments
    let mut knots: Vec<f64> = vec![0.0];
    knots.extend_from_slice(xs);
    let n = knots.len();
    let mut s_at = vec![Complex64::new(0.0, 0.0); n];
    let mut incr = vec![Complex64::new(0.0, 0.0); n];
    s_at[n - 1] = s;
    for k in (0..n - 1).rev() {
        let (sa, d) = riccati_segment(phi, knots[k], knots[k + 1], z, s, ctrl)?;
        s = sa;
        s_at[k] = sa;
        incr[k + 1] = d;
    }
    let mut out = Vec::with_capacity(xs.len());
    let mut log_psi2 = Complex64::new(0.0, 0.0);
    for k in 1..n {
        log_psi2 += incr[k];
        let sk = s_at[k];
        out.push(ScaledSolution {
            direction: Spinor::new(sk, Complex64::new(1.0, 0.0)),
            logmag: log_psi2.re,
            phases: [sk.arg() + log_psi2.im, log_psi2.im],
            x: knots[k],
            z,
        });
    }
    Ok(out)
}
