//! Gauss-type quadrature rules and composite/adaptive drivers.

use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    pub fn integrate_c<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// Mapped nodes and weights for [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The 8-point rule used by every composite integrator in the crate.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Split [a, b] into cells whose width never exceeds `width(left_edge)`.
///
/// `breakpoints` (sorted, any subset may fall outside [a, b]) are always
/// cell edges.
pub fn cells<W: Fn(f64) -> f64>(a: f64, b: f64, breakpoints: &[f64], width: W) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if b <= a {
        return out;
    }
    let mut stops: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    stops.push(b);
    let mut left = a;
    for stop in stops {
        while left < stop {
            let w = width(left).max(1e-12 * (1.0 + left.abs()));
            let mut right = left + w;
            if right >= stop || stop - right < 1e-3 * w {
                right = stop;
            }
            out.push((left, right));
            left = right;
        }
    }
    out
}

/// Composite 8-point Gauss–Legendre over [a, b].
pub fn composite<W, F>(a: f64, b: f64, breakpoints: &[f64], width: W, mut f: F) -> f64
where
    W: Fn(f64) -> f64,
    F: FnMut(f64) -> f64,
{
    let rule = gl8();
    cells(a, b, breakpoints, width)
        .into_iter()
        .map(|(l, r)| rule.integrate(l, r, &mut f))
        .sum()
}

pub fn composite_c<W, F>(a: f64, b: f64, breakpoints: &[f64], width: W, mut f: F) -> Complex64
where
    W: Fn(f64) -> f64,
    F: FnMut(f64) -> Complex64,
{
    let rule = gl8();
    cells(a, b, breakpoints, width)
        .into_iter()
        .map(|(l, r)| rule.integrate_c(l, r, &mut f))
        .sum()
}

/// Globally adaptive 8/16-point Gauss–Legendre for smooth complex integrands.
pub fn adaptive_c<F>(a: f64, b: f64, abs_tol: f64, rel_tol: f64, mut f: F) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let eval = |l: f64, r: f64, f: &mut F| {
        let coarse = gl8().integrate_c(l, r, &mut *f);
        let fine = gl16().integrate_c(l, r, &mut *f);
        Panel {
            l,
            r,
            value: fine,
            err: (fine - coarse).norm(),
        }
    };
    let mut heap = BinaryHeap::new();
    let first = eval(a, b, &mut f);
    let mut total = first.value;
    let mut err = first.err;
    heap.push(first);
    for _ in 0..20_000 {
        if err <= abs_tol.max(rel_tol * total.norm()) {
            break;
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.l + worst.r);
        if m <= worst.l || m >= worst.r {
            heap.push(worst);
            break;
        }
        let left = eval(worst.l, m, &mut f);
        let right = eval(m, worst.r, &mut f);
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // resum to shed the drift of the running totals
    let total: Complex64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    if err <= 1e3 * abs_tol.max(rel_tol * total.norm()) {
        Ok(total)
    } else {
        Err(Error::Resolution(format!(
            "adaptive quadrature on [{a}, {b}] stalled with error estimate {err:e}"
        )))
    }
}

struct Panel {
    l: f64,
    r: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Matrix `Q` with `Q[i][j] = ∫_{x_i}^{1} ℓ_j(s) ds` for the Lagrange basis
/// `ℓ_j` on the rule's nodes: applied to node values of a smooth function it
/// gives the integrals from each node to the right end of [-1, 1].
pub fn tail_integration_matrix(rule: &GaussLegendre) -> Vec<Vec<f64>> {
    let x = rule.nodes();
    let n = x.len();
    // barycentric weights
    let bw: Vec<f64> = (0..n)
        .map(|j| {
            let p: f64 = (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product();
            1.0 / p
        })
        .collect();
    let basis = |j: usize, s: f64| -> f64 {
        let mut num = bw[j];
        for (k, xk) in x.iter().enumerate() {
            if k != j {
                num *= s - xk;
            }
        }
        num
    };
    let exact = GaussLegendre::new(n.div_ceil(2) + 1);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| exact.integrate(x[i], 1.0, |s| basis(j, s)))
                .collect()
        })
        .collect()
}

/// Gauss–Chebyshev (first kind) nodes on (-1, 1); every weight is π/n.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl8_integrates_degree_15_exactly() {
        let v = gl8().integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn gl_weights_sum_to_two() {
        for n in [1, 2, 5, 8, 16, 40] {
            let s: f64 = GaussLegendre::new(n).weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn cells_respect_breakpoints_and_width() {
        let c = cells(0.0, 1.0, &[0.3, 0.35, 2.0], |_| 0.1);
        assert!(c.iter().any(|&(l, _)| l == 0.3));
        assert!(c.iter().any(|&(l, _)| l == 0.35));
        assert!(c.iter().all(|&(l, r)| r - l <= 0.1 + 1e-12));
        assert_eq!(c.last().unwrap().1, 1.0);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let v = adaptive_c(0.0, 50.0, 1e-12, 1e-12, |t| Complex64::new(0.0, 3.0 * t).exp()).unwrap();
        let exact = (Complex64::new(0.0, 150.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((v - exact).norm() < 1e-10);
    }

    #[test]
    fn tail_matrix_integrates_polynomials() {
        let rule = GaussLegendre::new(16);
        let q = tail_integration_matrix(&rule);
        for (i, xi) in rule.nodes().iter().enumerate() {
            let v: f64 = rule.nodes().iter().zip(&q[i]).map(|(x, w)| w * x.powi(9)).sum();
            let exact = (1.0 - xi.powi(10)) / 10.0;
            assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
        }
    }

    #[test]
    fn chebyshev_rule_integrates_weighted_polynomial() {
        // ∫ x^2 / sqrt(1-x^2) = π/2
        let n = 12;
        let v: f64 = chebyshev_nodes(n).iter().map(|x| x * x).sum::<f64>() * PI / n as f64;
        assert!((v - PI / 2.0).abs() < 1e-13);
    }
}
