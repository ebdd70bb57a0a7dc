//! The measures `dσ_x = (1/x)|(φχ_{[0,x]})^|² dk`, the smoothed functionals
//! `∫|ĝ_ε|² dσ_x`, and the regularity-gap table.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{gate_intervals, Family, OperatorData};
use crate::oscillatory::PowerPhase;
use crate::output::{Cell, Csv};
use crate::quadrature::{cells, gl16};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Binned positive measure on ℝ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureHistogram {
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    /// Mass outside the binned window.
    pub tail_mass: f64,
}

impl MeasureHistogram {
    pub fn binned_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mass of the bins lying inside `[lo, hi]`.
    pub fn window_mass(&self, lo: f64, hi: f64) -> f64 {
        let tol = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        self.bins()
            .filter(|(l, r, _)| *l >= lo - tol && *r <= hi + tol)
            .map(|(_, _, m)| m)
            .sum()
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.bin_edges
            .windows(2)
            .zip(&self.masses)
            .map(|(e, m)| (e[0], e[1], *m))
    }

    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["lo", "hi", "mass"]);
        for (l, r, m) in self.bins() {
            csv.row(&[Cell::F(l), Cell::F(r), Cell::F(m)]);
        }
        csv.into_string()
    }
}

/// Density of σ_x sampled on a uniform grid `k_j = -kmax + j·dk`, aligned
/// with the histogram bin edges.
#[derive(Debug, Clone)]
pub struct SigmaSpectrum {
    pub x: f64,
    pub kmax: f64,
    pub dk: f64,
    pub density: Vec<f64>,
    pub histogram: MeasureHistogram,
}

impl SigmaSpectrum {
    pub fn k(&self, j: usize) -> f64 {
        -self.kmax + j as f64 * self.dk
    }

    /// `∫_{-kmax}^{kmax} w(k) dσ_x` by composite Boole.
    pub fn integrate<W: Fn(f64) -> f64>(&self, w: W) -> f64 {
        let vals: Vec<f64> = self.density.iter().enumerate().map(|(j, d)| d * w(self.k(j))).collect();
        boole(&vals, self.dk)
    }
}

/// Composite Boole rule; `vals.len() - 1` must be a multiple of 4.
fn boole(vals: &[f64], h: f64) -> f64 {
    let n = vals.len() - 1;
    debug_assert!(n % 4 == 0);
    let mut acc = 0.0;
    for p in (0..n).step_by(4) {
        acc += 7.0 * (vals[p] + vals[p + 4]) + 32.0 * (vals[p + 1] + vals[p + 3]) + 12.0 * vals[p + 2];
    }
    acc * 2.0 * h / 45.0
}

/// σ_x binned on `bins` equal bins over `[-kmax, kmax]`.
pub fn sigma_x(phi: &OperatorData, x: f64, kmax: f64, bins: usize) -> Result<MeasureHistogram> {
    Ok(sigma_spectrum(phi, x, kmax, bins)?.histogram)
}

pub fn sigma_spectrum(phi: &OperatorData, x: f64, kmax: f64, bins: usize) -> Result<SigmaSpectrum> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("σ_x needs x > 0, got {x}")));
    }
    if !(kmax > 0.0 && kmax.is_finite()) {
        return Err(Error::Domain(format!("σ_x needs a finite kmax > 0, got {kmax}")));
    }
    if bins < 16 {
        return Err(Error::Domain(format!("σ_x needs at least 16 bins, got {bins}")));
    }
    let bw = 2.0 * kmax / bins as f64;
    // features of σ_x have width ~1/x
    let per_bin = ((bw / (PI / (16.0 * x))).ceil() as usize).max(16).next_multiple_of(4);
    let dk = bw / per_bin as f64;
    let n = bins * per_bin;
    let ks: Vec<f64> = (0..=n).map(|j| -kmax + j as f64 * dk).collect();
    let hat = fourier_transform(phi, x, &ks, dk);
    let density: Vec<f64> = hat.iter().map(|h| h.norm_sqr() / x).collect();

    let masses: Vec<f64> = (0..bins)
        .map(|b| boole(&density[b * per_bin..=(b + 1) * per_bin], dk).max(0.0))
        .collect();
    let total_mass = phi.cesaro_l2(x)?;
    let binned: f64 = masses.iter().sum();
    let tail_mass = total_mass - binned;
    if tail_mass < -1e-8 * total_mass.max(1e-300) {
        return Err(Error::Resolution(format!(
            "σ_x binned mass {binned} exceeds the Cesàro average {total_mass} at x = {x}"
        )));
    }
    let bin_edges = (0..=bins).map(|b| -kmax + b as f64 * bw).collect();
    Ok(SigmaSpectrum {
        x,
        kmax,
        dk,
        density,
        histogram: MeasureHistogram {
            bin_edges,
            masses,
            total_mass,
            tail_mass,
        },
    })
}

/// `(1/√(2π)) ∫_0^x φ(t) e^{-ikt} dt` on a uniform grid `ks` with spacing `dk`
/// (symmetric about 0 is not required, but `ks[j] = ks[0] + j·dk`).
pub fn fourier_transform(phi: &OperatorData, x: f64, ks: &[f64], dk: f64) -> Vec<Complex64> {
    if ks.is_empty() {
        return Vec::new();
    }
    let kabs = ks.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let split = asymptotic_start(phi, x, kabs);
    let mut out = block_transform(phi, split, ks, dk, kabs);
    if split < x {
        add_oscillatory_tail(phi, split, x, ks, &mut out);
    }
    let norm = 1.0 / (2.0 * PI).sqrt();
    out.iter_mut().for_each(|v| *v *= norm);
    out
}

/// Where the chirp rate dominates every |k| ≤ kabs enough for the
/// integration-by-parts expansion; `x` if never.
fn asymptotic_start(phi: &OperatorData, x: f64, kabs: f64) -> f64 {
    match phi.family() {
        Family::Chirp { alpha } | Family::GatedChirp { alpha, .. } => {
            let rate = kabs + 100.0;
            let t = (rate / alpha).powf(1.0 / (alpha - 1.0));
            if t.is_finite() && t < x {
                t.max(1.0)
            } else {
                x
            }
        }
        _ => x,
    }
}

/// `∫_0^end φ(t) e^{-ikt} dt` via Taylor moments on blocks and one FFT per
/// moment order.
fn block_transform(phi: &OperatorData, end: f64, ks: &[f64], dk: f64, kabs: f64) -> Vec<Complex64> {
    let mut out = vec![ZERO; ks.len()];
    if end <= 0.0 {
        return out;
    }
    let max_block = (PI / kabs.max(1e-300)).min(0.5);
    // block width Δ with Δ·dk = 2π/M
    let mut m = (2.0 * PI / (dk * max_block)).ceil() as usize;
    m = m.max(ks.len() + 1).next_power_of_two();
    let mut delta = 2.0 * PI / (m as f64 * dk);
    // `end/Δ` may land a rounding error above an integer
    let blocks_for = |delta: f64| ((end / delta) * (1.0 - 1e-12)).ceil() as usize;
    while blocks_for(delta) > m {
        m *= 2;
        delta = 2.0 * PI / (m as f64 * dk);
    }
    let nblocks = blocks_for(delta);
    let arg = 0.5 * kabs * delta;
    let mut terms = 1;
    let mut size = 1.0;
    while terms < 60 {
        size *= arg / terms as f64;
        terms += 1;
        if size < 1e-17 {
            break;
        }
    }

    // moments[order][block] = ∫_block φ(t)(t − c_b)^order dt
    let mut moments = vec![vec![ZERO; m]; terms];
    let rule = gl16();
    for b in 0..nblocks {
        let l = b as f64 * delta;
        let r = ((b + 1) as f64 * delta).min(end);
        if r <= l {
            continue;
        }
        let c = (b as f64 + 0.5) * delta;
        let bps = phi.breakpoints(l, r);
        for (cl, cr) in cells(l, r, &bps, |t| phi.cell_width(t)) {
            for (t, w) in rule.mapped(cl, cr) {
                let f = phi.eval(t) * w;
                if f == ZERO {
                    continue;
                }
                let u = t - c;
                let mut p = f;
                for row in moments.iter_mut() {
                    row[b] += p;
                    p *= u;
                }
            }
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let k0 = ks[0];
    let j0 = (k0 / dk).round() as i64;
    // Σ_order (−ik)^order/order! · X_order(k)
    let mut coeff: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); ks.len()];
    for (order, row) in moments.iter_mut().enumerate() {
        if order > 0 {
            for (cf, k) in coeff.iter_mut().zip(ks) {
                *cf *= Complex64::new(0.0, -k) / order as f64;
            }
        }
        fft.process(row);
        for (idx, (o, cf)) in out.iter_mut().zip(&coeff).enumerate() {
            let j = j0 + idx as i64;
            let slot = j.rem_euclid(m as i64) as usize;
            *o += cf * row[slot];
        }
    }
    // shift to block centres
    for (idx, o) in out.iter_mut().enumerate() {
        let j = (j0 + idx as i64) as f64;
        *o *= Complex64::from_polar(1.0, -PI * j / m as f64);
    }
    out
}

/// `∫ sin(t^α) e^{-ikt}` over the support of φ in `[a, b]`, by asymptotic
/// antiderivatives of `e^{i(±t^α − kt)}`.
fn add_oscillatory_tail(phi: &OperatorData, a: f64, b: f64, ks: &[f64], out: &mut [Complex64]) {
    let (alpha, pieces) = match phi.family() {
        Family::Chirp { alpha } => (*alpha, vec![(a, b)]),
        Family::GatedChirp { alpha, q } => (
            *alpha,
            gate_intervals(*q, b)
                .into_iter()
                .filter_map(|(l, r)| {
                    let (l, r) = (l.max(a), r.min(b));
                    (l < r).then_some((l, r))
                })
                .collect(),
        ),
        _ => return,
    };
    let (klo, khi) = (ks[0], ks[ks.len() - 1]);
    let half_i = Complex64::new(0.0, 0.5);
    for &(l, r) in &pieces {
        for (t, sign) in [(r, 1.0), (l, -1.0)] {
            for beta in [1.0, -1.0] {
                // sin = (e^{iθ} − e^{−iθ})/(2i)
                let weight = -half_i * sign * beta;
                let amp = AmplitudeInterp::new(alpha, beta, t, klo, khi);
                let base = beta * t.powf(alpha);
                for (k, o) in ks.iter().zip(out.iter_mut()) {
                    *o += weight * Complex64::from_polar(1.0, base - k * t) * amp.eval(*k);
                }
            }
        }
    }
}

/// Amplitude of the antiderivative of `e^{i(βt^α − kt)}` at fixed `t`, as
/// a function of `k`: analytic away from the stationary value
/// `k = αβt^{α−1}`, so Chebyshev interpolation converges geometrically.
struct AmplitudeInterp {
    nodes: Vec<f64>,
    values: Vec<Complex64>,
    weights: Vec<f64>,
}

impl AmplitudeInterp {
    fn new(alpha: f64, beta: f64, t: f64, klo: f64, khi: f64) -> Self {
        let mid = 0.5 * (klo + khi);
        let half = (0.5 * (khi - klo)).max(1e-12);
        let stationary = alpha * beta * t.powf(alpha - 1.0);
        let d = ((stationary - mid) / half).abs().max(1.0 + 1e-3);
        let rho = d + (d * d - 1.0).sqrt();
        let n = ((40.0 / rho.ln()).ceil() as usize + 4).clamp(8, 400);
        let nodes: Vec<f64> = (0..=n)
            .map(|j| mid + half * (std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        let values = nodes
            .iter()
            .map(|&k| PowerPhase::new(beta, alpha, -k).amplitude(t).0)
            .collect();
        let weights = (0..=n)
            .map(|j| {
                let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        Self { nodes, values, weights }
    }

    fn eval(&self, k: f64) -> Complex64 {
        let mut num = ZERO;
        let mut den = 0.0;
        for ((x, v), w) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = k - x;
            if d == 0.0 {
                return *v;
            }
            let c = w / d;
            num += v * c;
            den += c;
        }
        num / den
    }
}

/// Mass check independent of the histogram: on the lattice `k_n = 2πn/x` the
/// samples of the transform are Fourier-series coefficients of `φ` on
/// `[0, x]`, so `Σ_n σ_x-density(k_n)·2π/x` equals the Cesàro average
/// exactly. The sum is truncated at `|k| ≤ kmax`; the remainder is estimated
/// from the jumps of the periodised `φ`, whose coefficients decay like `J/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParsevalCheck {
    pub x: f64,
    pub kmax: f64,
    pub lattice_mass: f64,
    pub jump_tail: f64,
    pub cesaro: f64,
    /// `|lattice_mass + jump_tail − cesaro| / cesaro` (absolute when the
    /// Cesàro average vanishes).
    pub residual: f64,
}

/// Default lattice window: past every frequency the data oscillates at on
/// `[0, x]`, and wide enough that the jump tail is below ~1.6e-6 per unit
/// squared jump before its estimate is added back.
pub fn parseval_kmax(phi: &OperatorData, x: f64) -> f64 {
    (2.0 * phi.oscillation_rate(x) + 200.0).max(2e5 / x)
}

pub fn parseval_lattice(phi: &OperatorData, x: f64, kmax: f64) -> Result<ParsevalCheck> {
    if !(x > 0.0) || !(kmax > 0.0 && kmax.is_finite()) {
        return Err(Error::Domain(format!("Parseval check needs x > 0 and finite kmax > 0, got {x}, {kmax}")));
    }
    let dk = 2.0 * PI / x;
    let n = (kmax / dk).floor() as i64;
    let ks: Vec<f64> = (-n..=n).map(|j| j as f64 * dk).collect();
    let hat = fourier_transform(phi, x, &ks, dk);
    let lattice_mass = hat.iter().map(|h| h.norm_sqr()).sum::<f64>() * dk / x;
    let cesaro = phi.cesaro_l2(x)?;

    let left = |t: f64| phi.eval(t - 1e-12 * t.max(1.0));
    let mut jumps = (phi.eval(0.0) - left(x)).norm_sqr();
    for p in phi.breakpoints(0.0, x) {
        if p > 0.0 {
            jumps += (phi.eval(p) - left(p)).norm_sqr();
        }
    }
    // Σ_{|k_n|>K} |J|²/(x k_n²)·(2π/x) summed over both sides
    let k_edge = (n as f64 + 0.5) * dk;
    let jump_tail = jumps / (PI * k_edge * x);
    let scale = if cesaro > 0.0 { cesaro } else { 1.0 };
    Ok(ParsevalCheck {
        x,
        kmax,
        lattice_mass,
        jump_tail,
        cesaro,
        residual: (lattice_mass + jump_tail - cesaro).abs() / scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GepsMode {
    Frequency,
    Time,
}

/// A smoothed functional value; in frequency mode `tail_bound` bounds the
/// contribution of σ_x outside the computed window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GepsValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `|ĝ_ε(k)|²` with `ĝ_ε(k) = (e^{iεk} − 1)/(iεk)`.
pub fn g_hat_sq(eps: f64, k: f64) -> f64 {
    let u = 0.5 * eps * k;
    if u.abs() < 1e-4 {
        1.0 - u * u / 3.0
    } else {
        (u.sin() / u).powi(2)
    }
}

/// Default frequency window for the ε-functional.
pub fn geps_kmax(eps: f64) -> f64 {
    (40.0 / eps).max(20.0)
}

pub fn g_eps_functional(phi: &OperatorData, x: f64, eps: f64, mode: GepsMode) -> Result<GepsValue> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    match mode {
        GepsMode::Time => Ok(GepsValue {
            value: phi.avg_l2_profile(x, eps)?,
            tail_bound: 0.0,
        }),
        GepsMode::Frequency => g_eps_frequency(phi, x, eps, geps_kmax(eps)),
    }
}

/// `∫_{|k|≤kmax} |ĝ_ε|² dσ_x`, with the outside bounded by
/// `tail_mass · sup_{|k|>kmax} |ĝ_ε|²`.
pub fn g_eps_frequency(phi: &OperatorData, x: f64, eps: f64, kmax: f64) -> Result<GepsValue> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    let spec = sigma_spectrum(phi, x, kmax, 16)?;
    Ok(g_eps_from_spectrum(&spec, eps))
}

/// Frequency-mode value from an already computed spectrum, so one spectrum
/// serves every ε.
pub fn g_eps_from_spectrum(spec: &SigmaSpectrum, eps: f64) -> GepsValue {
    let value = spec.integrate(|k| g_hat_sq(eps, k));
    let tail_bound = spec.histogram.tail_mass.max(0.0) * (2.0 / (eps * spec.kmax)).powi(2).min(1.0);
    GepsValue { value, tail_bound }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    RegularConsistent,
    InequalityViolated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::RegularConsistent => "REGULAR-CONSISTENT",
            Verdict::InequalityViolated => "INEQUALITY-VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub x: f64,
    pub eps: f64,
    pub avg_l2: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsSummary {
    pub eps: f64,
    /// min of the averages over the proxy window
    pub liminf_proxy: f64,
    /// max of the averages over the proxy window
    pub limsup_proxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityGap {
    pub b_e: f64,
    pub rows: Vec<GapRow>,
    /// `[x_max/10, x_max]`: the x values the proxies range over.
    pub proxy_window: (f64, f64),
    pub per_eps: Vec<EpsSummary>,
    /// sup over ε of the liminf proxies; the universal inequality asks
    /// `b_E ≤` this.
    pub sup_liminf_proxy: f64,
    pub verdict: Verdict,
}

/// Absolute slack for comparisons against `b_E`.
pub fn gap_slack(b_e: f64) -> f64 {
    0.05 * b_e.max(1.0)
}

pub fn regularity_gap(phi: &OperatorData, b_e: f64, x_grid: &[f64], eps_grid: &[f64]) -> Result<RegularityGap> {
    if x_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::Domain("regularity gap needs nonempty x and ε grids".into()));
    }
    if !(b_e >= 0.0) {
        return Err(Error::Domain(format!("b_E must be nonnegative, got {b_e}")));
    }
    let x_max = x_grid.iter().cloned().fold(f64::MIN, f64::max);
    let window = (x_max / 10.0, x_max);
    let mut rows = Vec::with_capacity(x_grid.len() * eps_grid.len());
    let mut per_eps = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in x_grid {
            let v = phi.avg_l2_profile(x, eps)?;
            rows.push(GapRow { x, eps, avg_l2: v, gap: v - b_e });
            if x >= window.0 {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        per_eps.push(EpsSummary {
            eps,
            liminf_proxy: lo,
            limsup_proxy: hi,
        });
    }
    let sup_liminf_proxy = per_eps.iter().map(|s| s.liminf_proxy).fold(f64::MIN, f64::max);
    let slack = gap_slack(b_e);
    let verdict = if sup_liminf_proxy < b_e - slack {
        Verdict::InequalityViolated
    } else if per_eps.iter().all(|s| s.limsup_proxy <= b_e + slack) {
        Verdict::RegularConsistent
    } else {
        Verdict::Inconclusive
    };
    Ok(RegularityGap {
        b_e,
        rows,
        proxy_window: window,
        per_eps,
        sup_liminf_proxy,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boole_is_exact_for_quintics() {
        let h = 0.25;
        let vals: Vec<f64> = (0..=8).map(|j| (j as f64 * h).powi(5)).collect();
        assert!((boole(&vals, h) - 2f64.powi(6) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_has_no_mass() {
        let h = sigma_x(&OperatorData::zero(), 10.0, 10.0, 64).unwrap();
        assert!(h.masses.iter().all(|&m| m == 0.0));
        assert_eq!(h.total_mass, 0.0);
    }

    #[test]
    fn constant_transform_closed_form() {
        let c = Complex64::new(0.3, -1.2);
        let phi = OperatorData::constant(c).unwrap();
        let x = 7.3;
        let dk = 0.01;
        let ks: Vec<f64> = (0..=400).map(|j| -2.0 + j as f64 * dk).collect();
        let hat = fourier_transform(&phi, x, &ks, dk);
        for (k, h) in ks.iter().zip(&hat) {
            let exact = if k.abs() < 1e-12 {
                c * x
            } else {
                c * (Complex64::new(0.0, -k * x).exp() - 1.0) / Complex64::new(0.0, -k)
            } / (2.0 * PI).sqrt();
            assert!((h - exact).norm() < 1e-12, "k={k}: {h} vs {exact}");
        }
    }

    #[test]
    fn g_hat_at_origin_is_one() {
        assert_eq!(g_hat_sq(0.5, 0.0), 1.0);
        assert!((g_hat_sq(1.0, 2.0) - 1f64.sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn verdict_strings() {
        assert_eq!(Verdict::RegularConsistent.as_str(), "REGULAR-CONSISTENT");
        let s = serde_json::to_string(&Verdict::Inconclusive).unwrap();
        assert_eq!(s, "\"INCONCLUSIVE\"");
    }
}
