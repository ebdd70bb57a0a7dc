//! Renormalized Dirichlet eigenvalue counting `ρ_x = (1/x) Σ δ_z` over the
//! zeros of `u₁(x, z) − u₂(x, z)`, located as crossings of the Prüfer
//! phase `θ(x, z)` through the lattice `2πℤ`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::OperatorData;
use crate::propagation::{prufer_phase_with, StepControl};
use crate::spectral::MeasureHistogram;

/// Root tolerance in z.
pub const ROOT_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 40;

pub fn zero_counting(phi: &OperatorData, x: f64, window: (f64, f64), bins: usize) -> Result<MeasureHistogram> {
    Ok(zero_count_detail(phi, x, window, bins, &StepControl::default())?.histogram)
}

#[derive(Debug, Clone)]
pub struct ZeroCount {
    pub histogram: MeasureHistogram,
    /// Integer counts per bin (before division by x).
    pub counts: Vec<u64>,
    /// Number of θ samples used.
    pub samples: usize,
}

pub fn zero_count_detail(
    phi: &OperatorData,
    x: f64,
    window: (f64, f64),
    bins: usize,
    ctrl: &StepControl,
) -> Result<ZeroCount> {
    let (lo, hi) = window;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("zero counting needs x > 0, got {x}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || bins == 0 {
        return Err(Error::Domain(format!("bad window ({lo}, {hi}) or bin count {bins}")));
    }
    let theta = |z: f64| prufer_phase_with(phi, x, z, 0.0, ctrl);
    let bw = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * bw).collect();

    // free rate |∂θ/∂z| = 2x: start near a quarter turn per sample
    let base = (PI / (4.0 * x)).min(bw);
    let n0 = ((hi - lo) / base).ceil() as usize;
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(n0 + 1);
    for i in 0..=n0 {
        let z = lo + (hi - lo) * i as f64 / n0 as f64;
        samples.push((z, theta(z)?));
    }
    // refine until every neighbour pair moves less than π/2
    let mut refined = Vec::with_capacity(samples.len());
    refined.push(samples[0]);
    for w in samples.windows(2) {
        refine(&theta, w[0], w[1], 0, &mut refined)?;
    }

    let mut counts = vec![0u64; bins];
    for w in refined.windows(2) {
        let ((za, ta), (zb, tb)) = (w[0], w[1]);
        // lattice points 2πn strictly between or at the right sample
        let (na, nb) = (lattice_index(ta), lattice_index(tb));
        if na == nb {
            continue;
        }
        let crossings = na.abs_diff(nb);
        if crossings > 1 {
            return Err(Error::Resolution(format!(
                "θ moved {} turns between z = {za} and {zb}",
                crossings
            )));
        }
        // θ leaves the cell (2π(n−1), 2πn] through its lower edge either way
        let level = 2.0 * PI * na.min(nb) as f64;
        // the root lies in (za, zb]; refine only if that interval holds an edge
        let straddles = edges.iter().any(|&e| e > za && e <= zb) || za <= lo;
        let root = if straddles {
            illinois(&theta, level, za, ta - level, zb, tb - level)?
        } else {
            0.5 * (za + zb)
        };
        if !(root > lo && root < hi) {
            continue;
        }
        let k = (((root - lo) / bw).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / x).collect();
    let total: f64 = masses.iter().sum();
    Ok(ZeroCount {
        histogram: MeasureHistogram {
            bin_edges: edges,
            masses,
            total_mass: total,
            tail_mass: 0.0,
        },
        counts,
        samples: refined.len(),
    })
}

/// `n` with `θ ∈ (2π(n−1), 2πn]`; a crossing between two samples changes it.
fn lattice_index(theta: f64) -> i64 {
    (theta / (2.0 * PI)).ceil() as i64
}

fn refine<F>(theta: &F, a: (f64, f64), b: (f64, f64), depth: u32, out: &mut Vec<(f64, f64)>) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    if (b.1 - a.1).abs() < 0.5 * PI {
        out.push(b);
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Resolution(format!(
            "θ jumps by {} between z = {} and {} after maximal refinement",
            (b.1 - a.1).abs(),
            a.0,
            b.0
        )));
    }
    let m = 0.5 * (a.0 + b.0);
    let mid = (m, theta(m)?);
    refine(theta, a, mid, depth + 1, out)?;
    refine(theta, mid, b, depth + 1, out)
}

/// Illinois (modified regula falsi) on `g = θ − level` bracketed by `a, b`.
fn illinois<F>(theta: &F, level: f64, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= ROOT_TOL {
            break;
        }
        let c = (a * gb - b * ga) / (gb - ga);
        let c = if c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let gc = theta(c)? - level;
        if gc == 0.0 {
            return Ok(c);
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_lattice_count() {
        let h = zero_counting(&OperatorData::zero(), 100.0, (-3.2, 3.2), 1).unwrap();
        assert!((h.total_mass - 2.03).abs() < 1e-12);
    }

    #[test]
    fn free_bins_match_lattice() {
        let x = 10.0;
        let d = zero_count_detail(&OperatorData::zero(), x, (-2.05, 2.95), 5, &StepControl::default()).unwrap();
        for (i, c) in d.counts.iter().enumerate() {
            let (l, r) = (-2.05 + i as f64, -1.05 + i as f64);
            let expect = (-100i64..100).filter(|k| {
                let z = *k as f64 * PI / x;
                z > l && z <= r
            });
            assert_eq!(*c, expect.count() as u64, "bin {i}");
        }
    }
}
