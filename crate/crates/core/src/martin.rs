//! Martin functions of finite-gap sets `E = ℝ ∖ ∪ (α_j, β_j)`.
//!
//! `M_E(z) = Im ∫_{x₀}^{z} q(t)/R(t) dt` with `R = √∏(t−α_j)(t−β_j)` taken
//! as a product of principal square roots (continuous on the closed upper
//! half-plane, `q/R → 1` at ∞) and `q = ∏(t − c_j)` monic with one root per
//! gap, fixed by the gap conditions `∫_{gap} q/√|R²| = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_c, chebyshev_nodes};
use crate::spectral::MeasureHistogram;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MAX_GAPS: usize = 8;
const CHEB_NODES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSet {
    pub gaps: Vec<(f64, f64)>,
}

impl GapSet {
    pub fn free() -> Self {
        Self { gaps: Vec::new() }
    }

    /// Sorts the gaps and rejects empty or overlapping ones.
    pub fn new(mut gaps: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &gaps {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Domain(format!("gap ({a}, {b}) is not a bounded open interval")));
            }
        }
        gaps.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in gaps.windows(2) {
            if !(w[0].1 < w[1].0) {
                return Err(Error::Domain(format!(
                    "gaps ({}, {}) and ({}, {}) overlap or touch",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { gaps })
    }

    /// Parses `"(a,b) (c,d)"`; separators between intervals are free-form.
    pub fn parse(text: &str) -> Result<Self> {
        let mut gaps = Vec::new();
        let mut rest = text.trim();
        while let Some(open) = rest.find('(') {
            let close = rest[open..]
                .find(')')
                .ok_or_else(|| Error::Config(format!("unclosed interval in {text:?}")))?
                + open;
            let inner = &rest[open + 1..close];
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("interval {inner:?} needs two endpoints")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad endpoint {s:?}: {e}")))
            };
            gaps.push((num(a)?, num(b)?));
            rest = &rest[close + 1..];
        }
        if !rest.trim().is_empty() && !rest.trim().chars().all(|c| c == ',' || c.is_whitespace()) {
            return Err(Error::Config(format!("unexpected text {rest:?} in gap list")));
        }
        Self::new(gaps)
    }

    pub fn translate(&self, c: f64) -> Self {
        Self {
            gaps: self.gaps.iter().map(|&(a, b)| (a + c, b + c)).collect(),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        !self.gaps.iter().any(|&(a, b)| a < t && t < b)
    }

    fn gap_of(&self, t: f64) -> Option<usize> {
        self.gaps.iter().position(|&(a, b)| a < t && t < b)
    }

    fn edges(&self) -> Vec<f64> {
        self.gaps.iter().flat_map(|&(a, b)| [a, b]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartinModel {
    pub gapset: GapSet,
    pub critical_points: Vec<f64>,
    /// Extrapolated from `M(iy)` over `y ∈ {10², 10³, 10⁴}`.
    pub b_e: f64,
    /// `2·[t⁻²](q/R)`, the exact expansion coefficient, as a cross-check.
    pub b_e_series: f64,
    /// `M(iy)/y` at `y = 10⁴`.
    pub normalization: f64,
    /// Largest gap-condition residual after the solve.
    pub gap_residual: f64,
}

/// `R(t)` as a product of principal roots, continuous on the closed upper
/// half-plane.
fn radical(edges: &[f64], t: Complex64) -> Complex64 {
    // a real t must be read as t + i0 so negative factors take the +i root
    let t = if t.im == 0.0 { Complex64::new(t.re, 0.0) } else { t };
    edges.iter().map(|&e| (t - e).sqrt()).product()
}

fn poly_from_roots(roots: &[f64], t: Complex64) -> Complex64 {
    roots.iter().map(|&c| t - c).product()
}

/// Chebyshev-weighted gap integrals `∫_{α_j}^{β_j} g(t) / √((t−α_j)(β_j−t)) dt`
/// with `g = q/√|∏_{i≠j}|` evaluated at the Gauss–Chebyshev nodes.
struct GapQuadrature {
    /// per gap: (t_k, 1/√|∏_{i≠j}(t−α_i)(t−β_i)|)
    nodes: Vec<Vec<(f64, f64)>>,
}

impl GapQuadrature {
    fn new(gapset: &GapSet) -> Self {
        let cheb = chebyshev_nodes(CHEB_NODES);
        let nodes = gapset
            .gaps
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| {
                cheb.iter()
                    .map(|&u| {
                        let t = 0.5 * (a + b) + 0.5 * (b - a) * u;
                        let other: f64 = gapset
                            .gaps
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != j)
                            .map(|(_, &(ai, bi))| ((t - ai) * (t - bi)).abs())
                            .product();
                        (t, 1.0 / other.sqrt())
                    })
                    .collect()
            })
            .collect();
        Self { nodes }
    }

    fn integrate<F: Fn(f64) -> f64>(&self, gap: usize, f: F) -> f64 {
        self.nodes[gap].iter().map(|&(t, w)| f(t) * w).sum::<f64>() * PI / CHEB_NODES as f64
    }

    fn residuals(&self, c: &[f64]) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|j| self.integrate(j, |t| c.iter().map(|ci| t - ci).product()))
            .collect()
    }
}

/// Builds the model: closed form for `E = ℝ`, damped Newton on the critical
/// points otherwise.
pub fn martin_build(gapset: &GapSet) -> Result<MartinModel> {
    if gapset.gaps.len() > MAX_GAPS {
        return Err(Error::Unsupported(format!(
            "at most {MAX_GAPS} gaps are supported, got {}",
            gapset.gaps.len()
        )));
    }
    let gapset = GapSet::new(gapset.gaps.clone())?;
    if gapset.gaps.is_empty() {
        return Ok(MartinModel {
            gapset,
            critical_points: Vec::new(),
            b_e: 0.0,
            b_e_series: 0.0,
            normalization: 1.0,
            gap_residual: 0.0,
        });
    }
    let quad = GapQuadrature::new(&gapset);
    let critical_points = solve_critical_points(&gapset, &quad)?;
    let gap_residual = scaled_residual(&gapset, &quad, &critical_points);
    let mut model = MartinModel {
        gapset,
        critical_points,
        b_e: f64::NAN,
        b_e_series: f64::NAN,
        normalization: f64::NAN,
        gap_residual,
    };
    model.b_e_series = series_b(&model);
    model.normalization = martin_eval(&model, Complex64::new(0.0, 1e4))? / 1e4;
    model.b_e = extract_b(&model)?;
    Ok(model)
}

/// Gap residuals divided by the scale of the integrand on that gap.
fn scaled_residual(gapset: &GapSet, quad: &GapQuadrature, c: &[f64]) -> f64 {
    let res = quad.residuals(c);
    res.iter()
        .enumerate()
        .map(|(j, r)| {
            let scale = quad.integrate(j, |t| c.iter().map(|ci| (t - ci).abs()).product());
            let width = gapset.gaps[j].1 - gapset.gaps[j].0;
            r.abs() / scale.max(1e-300 * width)
        })
        .fold(0.0, f64::max)
}

fn solve_critical_points(gapset: &GapSet, quad: &GapQuadrature) -> Result<Vec<f64>> {
    let g = gapset.gaps.len();
    let mut c: Vec<f64> = gapset.gaps.iter().map(|&(a, b)| 0.5 * (a + b)).collect();
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut res = quad.residuals(&c);
    for _ in 0..100 {
        if scaled_residual(gapset, quad, &c) <= 1e-13 {
            return Ok(c);
        }
        // ∂F_j/∂c_i = −∫ q/(t − c_i)
        let mut jac = vec![vec![0.0; g]; g];
        for (j, row) in jac.iter_mut().enumerate() {
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = -quad.integrate(j, |t| {
                    c.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, ck)| t - ck).product()
                });
            }
        }
        let step = solve_linear(jac, res.iter().map(|r| -r).collect())
            .ok_or_else(|| Error::Model("singular Jacobian in the gap conditions".into()))?;
        let current = norm(&res);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = c.iter().zip(&step).map(|(ci, si)| ci + lambda * si).collect();
            let inside = trial
                .iter()
                .zip(&gapset.gaps)
                .all(|(t, &(a, b))| *t > a && *t < b);
            if inside {
                let r = quad.residuals(&trial);
                if norm(&r) < current || lambda < 1e-6 {
                    c = trial;
                    res = r;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::Model("Newton line search failed in the gap conditions".into()));
            }
        }
    }
    if scaled_residual(gapset, quad, &c) <= 1e-10 {
        return Ok(c);
    }
    Err(Error::Model("Newton did not converge in 100 iterations".into()))
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Critical points from the gap conditions read as a linear system in the
/// coefficients of `q` (roots by Newton inside each gap). Independent of
/// the Newton solve on the roots; used to validate it.
pub fn critical_points_linear(gapset: &GapSet) -> Result<Vec<f64>> {
    let g = gapset.gaps.len();
    if g == 0 {
        return Ok(Vec::new());
    }
    let quad = GapQuadrature::new(gapset);
    // q = t^g + Σ_{m<g} a_m t^m
    let a: Vec<Vec<f64>> = (0..g)
        .map(|j| (0..g).map(|m| quad.integrate(j, |t| t.powi(m as i32))).collect())
        .collect();
    let rhs: Vec<f64> = (0..g).map(|j| -quad.integrate(j, |t| t.powi(g as i32))).collect();
    let coef = solve_linear(a, rhs).ok_or_else(|| Error::Model("singular moment system".into()))?;
    let q = |t: f64| t.powi(g as i32) + coef.iter().enumerate().map(|(m, c)| c * t.powi(m as i32)).sum::<f64>();
    gapset
        .gaps
        .iter()
        .map(|&(lo, hi)| {
            let (mut lo, mut hi) = (lo, hi);
            if q(lo) * q(hi) > 0.0 {
                return Err(Error::Model(format!("no sign change of q on ({lo}, {hi})")));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if q(lo) * q(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        })
        .collect()
}

/// `f(t) = q(t)/R(t)`.
fn density_fn(model: &MartinModel, t: Complex64) -> Complex64 {
    poly_from_roots(&model.critical_points, t) / radical(&model.gapset.edges(), t)
}

/// `q(t)/(σ·∏_{e ≠ edge} √(t − e))`: the integrand `q/R` times `√(t − edge)/σ`,
/// for substitutions `t = edge ± u²` where `√(t − edge) = σu` exactly
/// (σ = 1 or i); stays finite when `t` rounds onto the edge.
fn edge_scaled(model: &MartinModel, edge: f64, t: f64, sigma: Complex64) -> Complex64 {
    let tc = Complex64::new(t, 0.0);
    let mut skipped = false;
    let mut r = sigma;
    for e in model.gapset.edges() {
        if !skipped && e == edge {
            skipped = true;
            continue;
        }
        r *= (tc - e).sqrt();
    }
    poly_from_roots(&model.critical_points, tc) / r
}

/// `Im ∫ q/R` from the left end of the gap containing `x` (zero on E).
fn real_axis_part(model: &MartinModel, x: f64) -> Result<f64> {
    let Some(j) = model.gapset.gap_of(x) else {
        return Ok(0.0);
    };
    let (a, b) = model.gapset.gaps[j];
    // integrate from the nearer edge with t = edge ± u² to absorb the root
    let (edge, dir, len) = if x - a <= b - x { (a, 1.0, x - a) } else { (b, -1.0, b - x) };
    // inside the gap t − a > 0 and t − b < 0 (read as −u² + i0)
    let sigma = if dir > 0.0 { ONE } else { Complex64::new(0.0, 1.0) };
    let val = adaptive_c(0.0, len.sqrt(), 1e-15, 1e-13, |u| {
        edge_scaled(model, edge, edge + dir * u * u, sigma) * (2.0 * dir)
    })?;
    // from b: ∫_a^x = −∫_x^b = ∫_b^x since the whole gap integrates to 0
    Ok(val.im)
}

/// `M_E(z)`; symmetric under conjugation and zero on E.
pub fn martin_eval(model: &MartinModel, z: Complex64) -> Result<f64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("cannot evaluate the Martin function at {z}")));
    }
    let y = z.im.abs();
    if model.gapset.gaps.is_empty() {
        return Ok(y);
    }
    let x = z.re;
    let base = real_axis_part(model, x)?;
    if y == 0.0 {
        return Ok(base.abs());
    }
    // vertical leg x → x + iy with s = u², integrand (f − 1)·i
    let vertical = adaptive_c(0.0, y.sqrt(), 1e-16, 1e-13, |u| {
        let t = Complex64::new(x, u * u);
        (density_fn(model, t) - ONE) * Complex64::new(0.0, 2.0 * u)
    })?;
    Ok((y + base + vertical.im).abs())
}

/// `2·[t⁻²](q/R)` from the Laurent expansion at ∞.
fn series_b(model: &MartinModel) -> f64 {
    // q/R = ∏(1 − c/t) · ∏(1 − e/t)^{−1/2}; collect up to t⁻²
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    let mut push = |a1: f64, a2: f64| {
        // multiply (1 + c1 u + c2 u²) by (1 + a1 u + a2 u²)
        c2 += a2 + c1 * a1;
        c1 += a1;
    };
    for &c in &model.critical_points {
        push(-c, 0.0);
    }
    for e in model.gapset.edges() {
        // (1 − e u)^{−1/2} = 1 + e u/2 + 3e²u²/8
        push(0.5 * e, 0.375 * e * e);
    }
    2.0 * c2
}

/// Richardson-extrapolated `lim 2y(M(iy) − y)` over `y ∈ {10², 10³, 10⁴}`.
pub fn extract_b(model: &MartinModel) -> Result<f64> {
    if model.gapset.gaps.is_empty() {
        return Ok(0.0);
    }
    let bb = |y: f64| -> Result<f64> {
        // M(iy) − y directly, no cancellation
        let x = 0.0;
        let base = real_axis_part(model, x)?;
        let vertical = adaptive_c(0.0, y.sqrt(), 1e-15, 1e-14, |u| {
            let t = Complex64::new(x, u * u);
            (density_fn(model, t) - ONE) * Complex64::new(0.0, 2.0 * u)
        })?;
        Ok(2.0 * y * (base + vertical.im))
    };
    let (b2, b3, b4) = (bb(1e2)?, bb(1e3)?, bb(1e4)?);
    let r1 = (100.0 * b3 - b2) / 99.0;
    let r2 = (100.0 * b4 - b3) / 99.0;
    let scale = r2.abs().max(1e-12);
    if (r2 - r1).abs() > 1e-3 * scale {
        return Err(Error::Model(format!(
            "b_E extrapolation unstable: {r1} vs {r2} from y = 10³ and 10⁴"
        )));
    }
    if r2 < -1e-8 {
        return Err(Error::Model(format!("negative b_E extrapolant {r2}")));
    }
    Ok(r2.max(0.0))
}

/// Density `dρ_E/dt = (1/π) ∂_y M(t + i0)` on bands, zero in gaps.
pub fn martin_density(model: &MartinModel, t: f64) -> f64 {
    if !model.gapset.contains(t) {
        return 0.0;
    }
    if model.gapset.gaps.is_empty() {
        return 1.0 / PI;
    }
    density_fn(model, Complex64::new(t, 0.0)).re.abs() / PI
}

/// Finite-difference normal derivative `(M(t + iδ) − M(t))/(πδ)`, for
/// cross-checking `martin_density`.
pub fn martin_density_fd(model: &MartinModel, t: f64, delta: f64) -> Result<f64> {
    let up = martin_eval(model, Complex64::new(t, delta))?;
    let up2 = martin_eval(model, Complex64::new(t, 2.0 * delta))?;
    let at = martin_eval(model, Complex64::new(t, 0.0))?;
    // second-order one-sided difference
    Ok((-3.0 * at + 4.0 * up - up2) / (2.0 * delta * PI))
}

/// `ρ_E` binned on `bins` equal bins of `window`.
pub fn martin_measure(model: &MartinModel, window: (f64, f64), bins: usize) -> Result<MeasureHistogram> {
    let (lo, hi) = window;
    if !(lo < hi) || bins == 0 {
        return Err(Error::Domain(format!("bad window ({lo}, {hi}) or bin count {bins}")));
    }
    let w = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * w).collect();
    let band_edges = model.gapset.edges();
    let mut masses = Vec::with_capacity(bins);
    for bin in edges.windows(2) {
        let (l, r) = (bin[0], bin[1]);
        let mut cuts: Vec<f64> = band_edges.iter().copied().filter(|e| *e > l && *e < r).collect();
        cuts.insert(0, l);
        cuts.push(r);
        let mut m = 0.0;
        for piece in cuts.windows(2) {
            m += band_piece_mass(model, &band_edges, piece[0], piece[1])?;
        }
        masses.push(m);
    }
    let total: f64 = masses.iter().sum();
    Ok(MeasureHistogram {
        bin_edges: edges,
        masses,
        total_mass: total,
        tail_mass: 0.0,
    })
}

/// `∫_a^b dρ_E` on a piece with no band edge inside; endpoint roots are
/// removed by `t = edge ± u²`.
fn band_piece_mass(model: &MartinModel, band_edges: &[f64], a: f64, b: f64) -> Result<f64> {
    let mid = 0.5 * (a + b);
    if !model.gapset.contains(mid) {
        return Ok(0.0);
    }
    let is_edge = |t: f64| band_edges.iter().any(|e| *e == t);
    let dens = |t: f64| Complex64::new(martin_density(model, t), 0.0);
    // on a band, t − (left edge) = u² and t − (right edge) = −u² + i0
    let from_left = |l: f64, r: f64| -> Result<f64> {
        Ok(adaptive_c(0.0, (r - l).sqrt(), 1e-15, 1e-12, |u| {
            Complex64::new(edge_scaled(model, l, l + u * u, ONE).re.abs() * 2.0 / PI, 0.0)
        })?
        .re)
    };
    let from_right = |l: f64, r: f64| -> Result<f64> {
        Ok(adaptive_c(0.0, (r - l).sqrt(), 1e-15, 1e-12, |u| {
            let sigma = Complex64::new(0.0, 1.0);
            Complex64::new(edge_scaled(model, r, r - u * u, sigma).re.abs() * 2.0 / PI, 0.0)
        })?
        .re)
    };
    match (is_edge(a), is_edge(b)) {
        (true, true) => Ok(from_left(a, mid)? + from_right(mid, b)?),
        (true, false) => from_left(a, b),
        (false, true) => from_right(a, b),
        (false, false) => Ok(adaptive_c(a, b, 1e-15, 1e-12, dens)?.re),
    }
}

impl MartinModel {
    pub fn to_json(&self) -> String {
        crate::output::to_json(self)
    }
}
