//! Expansion machinery: simplex integrals, the kernel `w_z`, and the
//! two-term growth functional.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{OperatorData, CELL_PHASE, MAX_CELL};
use crate::output::{Cell, Csv};
use crate::propagation::{dirichlet_path, StepControl};
use crate::quadrature::{cells, gl16, tail_integration_matrix};
use crate::weyl::weyl_path;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn tail_matrix() -> &'static Vec<Vec<f64>> {
    static Q: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    Q.get_or_init(|| tail_integration_matrix(gl16()))
}

/// Cells resolving both φ and the kernel `e^{2iz t}`.
fn kernel_cells(phi: &OperatorData, a: f64, b: f64, z: Complex64) -> Vec<(f64, f64)> {
    let zcap = 0.5 / z.norm().max(1e-300);
    let bps = phi.breakpoints(a, b);
    cells(a, b, &bps, |t| {
        let rate = phi.oscillation_rate(t + MAX_CELL);
        let w = if rate > 0.0 { CELL_PHASE / rate } else { MAX_CELL };
        w.min(MAX_CELL).min(zcap)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexIntegral {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub z: Complex64,
    pub value: Complex64,
    pub bound: f64,
}

/// `I_n(a, b) = ∫_{a<t₁<…<t_{2n}<b} ∏_k conj φ(t_{2k−1}) e^{2iz(t_{2k}−t_{2k−1})} φ(t_{2k})`.
///
/// Evaluated innermost-first: `R_{2n+1} = 1`,
/// `R_{2k}(t) = ∫_t^b e^{2iz(s−t)} φ(s) R_{2k+1}(s) ds`,
/// `R_{2k−1}(t) = ∫_t^b conj φ(s) R_{2k}(s) ds`, and `I_n = R_1(a)`. Each
/// level is integrated node-to-cell-end with a spectral matrix on 16-point
/// Gauss cells aligned with the jumps of φ.
pub fn simplex_i(phi: &OperatorData, n: u32, a: f64, b: f64, z: Complex64) -> Result<SimplexIntegral> {
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!("simplex integrals are implemented for n ≤ 3, got {n}")));
    }
    if !(a < b) {
        return Err(Error::Domain(format!("simplex integral needs a < b, got [{a}, {b}]")));
    }
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("simplex integral needs Im z > 0, got {z}")));
    }
    let value = simplex_values(phi, n, a, b, z)[n as usize - 1];
    let tn = phi.triple_norm(2, b.max(1.0))?;
    let bound = simplex_bound(n, b - a, tn, z);
    Ok(SimplexIntegral { n, a, b, z, value, bound })
}

/// `⌈b−a⌉ⁿ |||φ|||₂^{2n} / ((2 Im z)ⁿ n!)`
pub fn simplex_bound(n: u32, len: f64, triple_norm: f64, z: Complex64) -> f64 {
    let fact: f64 = (1..=n).map(f64::from).product();
    len.ceil().powi(n as i32) * triple_norm.powi(2 * n as i32) / ((2.0 * z.im).powi(n as i32) * fact)
}

/// `[I_1, …, I_n]` from one set of nested sweeps.
fn simplex_values(phi: &OperatorData, n: u32, a: f64, b: f64, z: Complex64) -> Vec<Complex64> {
    let cs = kernel_cells(phi, a, b, z);
    let rule = gl16();
    let q = tail_matrix();
    let m = rule.order();
    let nodes: Vec<Vec<f64>> = cs
        .iter()
        .map(|&(l, r)| rule.nodes().iter().map(|x| 0.5 * (l + r) + 0.5 * (r - l) * x).collect())
        .collect();
    let phis: Vec<Vec<Complex64>> = nodes.iter().map(|ts| ts.iter().map(|&t| phi.eval(t)).collect()).collect();

    let mut out = Vec::with_capacity(n as usize);
    for order in 1..=n {
        // R at nodes for the current level, starting from R ≡ 1
        let mut level: Vec<Vec<Complex64>> = nodes.iter().map(|ts| vec![Complex64::new(1.0, 0.0); ts.len()]).collect();
        let mut left_value = Complex64::new(1.0, 0.0);
        for step in (1..=2 * order).rev() {
            let kernel = step % 2 == 0;
            let mut next = level.clone();
            let mut carry = ZERO; // R(right end of current cell)
            for (c, &(l, r)) in cs.iter().enumerate().rev() {
                let h = 0.5 * (r - l);
                let g: Vec<Complex64> = (0..m)
                    .map(|j| {
                        let f = if kernel { phis[c][j] } else { phis[c][j].conj() };
                        let base = f * level[c][j];
                        if kernel {
                            base * (2.0 * I * z * (nodes[c][j] - r)).exp()
                        } else {
                            base
                        }
                    })
                    .collect();
                for i in 0..m {
                    let tail: Complex64 = (0..m).map(|j| g[j] * q[i][j]).sum::<Complex64>() * h;
                    next[c][i] = if kernel {
                        (2.0 * I * z * (r - nodes[c][i])).exp() * (carry + tail)
                    } else {
                        carry + tail
                    };
                }
                let full: Complex64 = (0..m).map(|j| g[j] * rule.weights()[j]).sum::<Complex64>() * h;
                carry = if kernel {
                    (2.0 * I * z * (r - l)).exp() * (carry + full)
                } else {
                    carry + full
                };
            }
            left_value = carry;
            level = next;
        }
        out.push(left_value);
    }
    out
}

/// Short-range expansion `I₁(a, a+2) − I₁(a+1, a+2)` of
/// `log(ψ₂(a)/ψ₂(a+1)) + iz`.
pub fn log_ratio_expansion(phi: &OperatorData, a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    if (b - a - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("log-ratio expansion needs a unit hop, got [{a}, {b}]")));
    }
    check_large_z(phi, a + 2.0, z)?;
    let full = simplex_i(phi, 1, a, a + 2.0, z)?.value;
    let half = simplex_i(phi, 1, a + 1.0, a + 2.0, z)?.value;
    Ok(full - half)
}

fn check_large_z(phi: &OperatorData, horizon: f64, z: Complex64) -> Result<f64> {
    let tn = phi.triple_norm(2, horizon.max(1.0))?;
    if !(z.im >= 4.0 * tn * tn) {
        return Err(Error::Domain(format!(
            "expansion needs Im z ≥ 4|||φ|||₂² = {}, got Im z = {}",
            4.0 * tn * tn,
            z.im
        )));
    }
    Ok(tn)
}

/// `log(ψ₂(a)/ψ₂(a+1)) + iz` from the propagated Weyl solution.
pub fn propagated_log_ratio(phi: &OperatorData, a: f64, z: Complex64) -> Result<Complex64> {
    let path = weyl_path(phi, &[a, a + 1.0], z, &StepControl::default())?;
    let la = path[0].log_component(1);
    let lb = path[1].log_component(1);
    Ok(la - lb + I * z)
}

/// `(|log(1 + Σ_{n≤3} I_n) − I₁|, 10 |||φ|||₂⁴/(Im z)², tail envelope)` on
/// `[a, b]` with `b − a ≤ 2`.
pub fn small_log_check(phi: &OperatorData, a: f64, b: f64, z: Complex64) -> Result<(f64, f64, f64)> {
    if !(a < b && b - a <= 2.0) {
        return Err(Error::Domain(format!("small-log check needs 0 < b − a ≤ 2, got [{a}, {b}]")));
    }
    let tn = check_large_z(phi, b, z)?;
    let v = simplex_values(phi, 3, a, b, z);
    let sum: Complex64 = v.iter().sum();
    let lhs = ((Complex64::new(1.0, 0.0) + sum).ln() - v[0]).norm();
    let bound = 10.0 * tn.powi(4) / (z.im * z.im);
    // Σ_{n>3} of the simplex envelope
    let r = (b - a).ceil() * tn * tn / (2.0 * z.im);
    let mut tail = 0.0;
    let mut term = r.powi(3) / 6.0;
    for k in 4..60 {
        term *= r / k as f64;
        tail += term;
    }
    Ok((lhs, bound, tail))
}

/// `w_z(t) = 2iz e^{−2izt}` on `[−1, 0]`, zero elsewhere.
pub fn kernel_w(z: Complex64, t: f64) -> Complex64 {
    if (-1.0..=0.0).contains(&t) {
        2.0 * I * z * (-2.0 * I * z * t).exp()
    } else {
        ZERO
    }
}

/// `‖w_z‖₁` by quadrature.
pub fn kernel_w_l1(z: Complex64) -> f64 {
    crate::quadrature::composite(-1.0, 0.0, &[], |_| 0.05 / (1.0 + z.norm()), |t| kernel_w(z, t).norm())
}

/// `(1/x)(1/(2iz)) ∫_0^x conj φ (w_z * φ)
///   = (1/x) ∫_0^x conj φ(t) ∫_t^{t+1} e^{2iz(r−t)} φ(r) dr dt`.
pub fn two_term_functional(phi: &OperatorData, x: f64, z: Complex64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("two-term functional needs x > 0, got {x}")));
    }
    two_term_functional_on(phi, 0.0, x, z)
}

/// Same functional averaged over `[a, b]` instead of `[0, x]`.
pub fn two_term_functional_on(phi: &OperatorData, a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    if !(a < b) {
        return Err(Error::Domain(format!("functional window needs a < b, got [{a}, {b}]")));
    }
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("two-term functional needs Im z > 0, got {z}")));
    }
    let table = KernelTail::new(phi, a, b + 1.0, z);
    let e1 = (2.0 * I * z).exp();
    let outer = kernel_cells(phi, a, b, z);
    let rule = gl16();
    let mut acc = ZERO;
    for (l, r) in outer {
        for (t, w) in rule.mapped(l, r) {
            let f = phi.eval(t);
            if f == ZERO {
                continue;
            }
            let j = table.at(t) - e1 * table.at(t + 1.0);
            acc += f.conj() * j * w;
        }
    }
    Ok(acc / (b - a))
}

/// `K(t) = ∫_t^B e^{2iz(r−t)} φ(r) dr` tabulated at cell edges.
struct KernelTail<'a> {
    phi: &'a OperatorData,
    z: Complex64,
    edges: Vec<f64>,
    values: Vec<Complex64>,
}

impl<'a> KernelTail<'a> {
    fn new(phi: &'a OperatorData, a: f64, end: f64, z: Complex64) -> Self {
        let cs = kernel_cells(phi, a, end, z);
        let mut edges: Vec<f64> = cs.iter().map(|c| c.0).collect();
        edges.push(end);
        let mut values = vec![ZERO; edges.len()];
        for k in (0..cs.len()).rev() {
            let (l, r) = cs[k];
            values[k] = (2.0 * I * z * (r - l)).exp() * values[k + 1] + Self::piece(phi, z, l, r);
        }
        Self { phi, z, edges, values }
    }

    /// `∫_t^r e^{2iz(s−t)} φ(s) ds` on a resolved piece.
    fn piece(phi: &OperatorData, z: Complex64, t: f64, r: f64) -> Complex64 {
        if r <= t {
            return ZERO;
        }
        gl16().integrate_c(t, r, |s| (2.0 * I * z * (s - t)).exp() * phi.eval(s))
    }

    fn at(&self, t: f64) -> Complex64 {
        let end = *self.edges.last().expect("nonempty");
        if t >= end {
            return ZERO;
        }
        // first edge strictly greater than t
        let k = self.edges.partition_point(|&e| e <= t);
        let r = self.edges[k];
        (2.0 * I * self.z * (r - t)).exp() * self.values[k] + Self::piece(self.phi, self.z, t, r)
    }
}

/// One row of the growth-functional residual table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResidualRow {
    pub y: f64,
    pub x: f64,
    /// `|(1/x) log u₁(x, iy) + iz − F_x(iy)|`
    pub residual: f64,
    /// `C/|z|²` with the fitted `C = max residual·|z|²`.
    pub bound: f64,
    /// Same comparison on the increment over `[x/2, x]`, which removes
    /// the `O(1/x)` boundary layer at the origin.
    pub increment_residual: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResidualTable {
    pub rows: Vec<ResidualRow>,
    pub fitted_c: f64,
    /// Least-squares slope of log residual against log y.
    pub slope: f64,
    pub increment_slope: f64,
}

/// Residual of the two-term growth law along `z = iy`.
pub fn growth_residuals(phi: &OperatorData, x: f64, ys: &[f64], ctrl: &StepControl) -> Result<ResidualTable> {
    if ys.is_empty() {
        return Err(Error::Domain("need at least one y".into()));
    }
    let mut raw = Vec::with_capacity(ys.len());
    for &y in ys {
        let z = Complex64::new(0.0, y);
        let path = dirichlet_path(phi, &[0.5 * x, x], z, ctrl)?;
        let full = path[1].log_component(0) / x + I * z - two_term_functional(phi, x, z)?;
        let inc = (path[1].log_component(0) - path[0].log_component(0)) / (0.5 * x) + I * z
            - two_term_functional_on(phi, 0.5 * x, x, z)?;
        raw.push((y, full.norm(), inc.norm()));
    }
    let fitted_c = raw.iter().map(|(y, r, _)| r * y * y).fold(0.0, f64::max);
    let rows = raw
        .iter()
        .map(|&(y, residual, inc)| ResidualRow {
            y,
            x,
            residual,
            bound: fitted_c / (y * y),
            increment_residual: inc,
        })
        .collect::<Vec<_>>();
    let slope = loglog_slope(&rows.iter().map(|r| (r.y, r.residual)).collect::<Vec<_>>());
    let increment_slope = loglog_slope(&rows.iter().map(|r| (r.y, r.increment_residual)).collect::<Vec<_>>());
    Ok(ResidualTable {
        rows,
        fitted_c,
        slope,
        increment_slope,
    })
}

/// Least-squares slope of `log v` against `log u`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(u, v)| *u > 0.0 && *v > 0.0)
        .map(|(u, v)| (u.ln(), v.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mu = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mu).powi(2)).sum();
    num / den
}

impl ResidualTable {
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["y", "x", "residual", "bound", "increment_residual"]);
        for r in &self.rows {
            csv.row(&[Cell::F(r.y), Cell::F(r.x), Cell::F(r.residual), Cell::F(r.bound), Cell::F(r.increment_residual)]);
        }
        csv.into_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_data_gives_zero() {
        let v = simplex_i(&OperatorData::zero(), 1, 0.0, 1.0, c(0.0, 2.0)).unwrap();
        assert_eq!(v.value, ZERO);
        assert_eq!(two_term_functional(&OperatorData::zero(), 5.0, c(1.0, 1.0)).unwrap(), ZERO);
    }

    #[test]
    fn constant_first_simplex_closed_form() {
        let phi = OperatorData::constant(1.5).unwrap();
        for y in [0.5, 2.0, 8.0] {
            let v = simplex_i(&phi, 1, 0.0, 1.0, c(0.0, y)).unwrap();
            let exact = 2.25 * (2.0 * y - 1.0 + (-2.0 * y).exp()) / (4.0 * y * y);
            assert!((v.value - exact).norm() < 1e-13, "y={y}: {} vs {exact}", v.value);
            assert!(v.value.norm() <= v.bound);
        }
    }

    #[test]
    fn order_limits() {
        assert!(simplex_i(&OperatorData::zero(), 4, 0.0, 1.0, c(0.0, 1.0)).is_err());
        assert!(simplex_i(&OperatorData::zero(), 1, 1.0, 1.0, c(0.0, 1.0)).is_err());
    }

    #[test]
    fn kernel_examples() {
        let z = c(0.3, 0.7);
        assert_eq!(kernel_w(z, 0.5), ZERO);
        let y = 1.7;
        let v = kernel_w(c(0.0, y), -1.0);
        assert!((v - c(-2.0 * y * (-2.0 * y).exp(), 0.0)).norm() < 1e-15);
        assert!((kernel_w_l1(c(0.0, y)) - (1.0 - (-2.0 * y).exp())).abs() < 1e-12);
    }

    #[test]
    fn constant_functional_bulk_value() {
        let phi = OperatorData::constant(c(0.6, 0.8)).unwrap();
        let z = c(0.5, 2.0);
        let v = two_term_functional_on(&phi, 0.0, 3.0, z).unwrap();
        let exact = ((2.0 * I * z).exp() - 1.0) / (2.0 * I * z);
        assert!((v - exact).norm() < 1e-13, "{v} vs {exact}");
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0].iter().map(|&u| (u, 3.0 / (u * u))).collect();
        assert!((loglog_slope(&pts) + 2.0).abs() < 1e-12);
    }
}
