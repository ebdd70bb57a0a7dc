//! Operator data `φ` and its integral statistics.
//!
//! Every family is extended by zero to negative arguments. Sampled families
//! are piecewise constant on cells `[k·step, (k+1)·step)`, so their
//! primitives are evaluated exactly from prefix sums. The chirp families use
//! a tabulated primitive on `[0, T₀]` and the asymptotic antiderivative of
//! `e^{i t^α}` beyond, which keeps long-horizon averages O(1) per query.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oscillatory::PowerPhase;
use crate::quadrature::{composite, composite_c, gl8};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest cell used by closed-form quadrature.
pub const MAX_CELL: f64 = 0.25;
/// Phase advance allowed inside one quadrature cell.
pub const CELL_PHASE: f64 = PI / 4.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Zero,
    Constant(Complex64),
    /// `sin(t^α)`
    Chirp { alpha: f64 },
    /// `χ_B(t) sin(t^α)` with `B = ∪_{k≥0} [q^{2k}, q^{2k+1})`.
    GatedChirp { alpha: f64, q: f64 },
    /// Periodic extension of `values`, one cell of width `period/len` each.
    PeriodicSamples { period: f64, values: Vec<Complex64> },
    /// Piecewise constant on `[0, step·len)`, zero beyond.
    GridSamples { step: f64, values: Vec<Complex64> },
}

/// Immutable operator datum; cloning is cheap.
#[derive(Debug, Clone)]
pub struct OperatorData {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    family: Family,
    prefix: OnceLock<Prefix>,
    chirp: OnceLock<ChirpTable>,
}

/// Cumulative ∫φ, ∫|φ|, ∫|φ|² at cell edges of a sampled family.
#[derive(Debug)]
struct Prefix {
    step: f64,
    first: Vec<Complex64>,
    abs: Vec<f64>,
    energy: Vec<f64>,
}

#[derive(Debug)]
struct ChirpTable {
    alpha: f64,
    /// Start of the asymptotic region.
    t0: f64,
    knot: f64,
    /// ∫_0^{k·knot} sin(s^α) ds
    first: Vec<f64>,
    /// ∫_0^{k·knot} sin²(s^α) ds
    energy: Vec<f64>,
    phase1: PowerPhase,
    phase2: PowerPhase,
}

impl PartialEq for OperatorData {
    fn eq(&self, other: &Self) -> bool {
        self.inner.family == other.inner.family
    }
}

impl OperatorData {
    pub fn new(family: Family) -> Result<Self> {
        validate(&family)?;
        Ok(Self {
            inner: Arc::new(Inner {
                family,
                prefix: OnceLock::new(),
                chirp: OnceLock::new(),
            }),
        })
    }

    pub fn zero() -> Self {
        Self::new(Family::Zero).expect("zero family is valid")
    }

    pub fn constant(c: impl Into<Complex64>) -> Result<Self> {
        Self::new(Family::Constant(c.into()))
    }

    pub fn chirp(alpha: f64) -> Result<Self> {
        Self::new(Family::Chirp { alpha })
    }

    pub fn gated_chirp(alpha: f64, q: f64) -> Result<Self> {
        Self::new(Family::GatedChirp { alpha, q })
    }

    pub fn grid(step: f64, values: Vec<Complex64>) -> Result<Self> {
        Self::new(Family::GridSamples { step, values })
    }

    pub fn periodic(period: f64, values: Vec<Complex64>) -> Result<Self> {
        Self::new(Family::PeriodicSamples { period, values })
    }

    /// Reads `t Re(φ) [Im(φ)]` rows (whitespace or comma separated, `#`
    /// comments) into a `GridSamples` datum. Rows must start at `t = 0` and
    /// be uniformly spaced; each value holds on `[t, t + step)`.
    pub fn from_samples_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_samples_text(&text)
    }

    pub fn from_samples_text(text: &str) -> Result<Self> {
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(Error::InvalidData(format!(
                    "line {}: expected 2 or 3 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidData(format!("line {}: cannot parse `{s}`", lineno + 1))
                })
            };
            ts.push(parse(cols[0])?);
            let im = if cols.len() == 3 { parse(cols[2])? } else { 0.0 };
            values.push(Complex64::new(parse(cols[1])?, im));
        }
        if ts.len() < 2 {
            return Err(Error::InvalidData("need at least two samples".into()));
        }
        let step = ts[1] - ts[0];
        if ts[0].abs() > 1e-9 * step.abs().max(1.0) {
            return Err(Error::InvalidData("samples must start at t = 0".into()));
        }
        for (i, t) in ts.iter().enumerate() {
            if (t - i as f64 * step).abs() > 1e-6 * step {
                return Err(Error::InvalidData(format!(
                    "sample {i} at t = {t} breaks the uniform spacing {step}"
                )));
            }
        }
        Self::grid(step, values)
    }

    pub fn family(&self) -> &Family {
        &self.inner.family
    }

    /// φ(t); zero for t < 0.
    pub fn eval(&self, t: f64) -> Complex64 {
        if t < 0.0 {
            return ZERO;
        }
        match &self.inner.family {
            Family::Zero => ZERO,
            Family::Constant(c) => *c,
            Family::Chirp { alpha } => Complex64::new(t.powf(*alpha).sin(), 0.0),
            Family::GatedChirp { alpha, q } => {
                if in_gate(t, *q) {
                    Complex64::new(t.powf(*alpha).sin(), 0.0)
                } else {
                    ZERO
                }
            }
            Family::PeriodicSamples { period, values } => {
                let h = period / values.len() as f64;
                let k = (t / h).floor() as usize % values.len();
                values[k]
            }
            Family::GridSamples { step, values } => {
                let k = (t / step).floor() as usize;
                values.get(k).copied().unwrap_or(ZERO)
            }
        }
    }

    /// Upper bound on |φ| over the whole half-line.
    pub fn sup_abs(&self) -> f64 {
        match &self.inner.family {
            Family::Zero => 0.0,
            Family::Constant(c) => c.norm(),
            Family::Chirp { .. } | Family::GatedChirp { .. } => 1.0,
            Family::PeriodicSamples { values, .. } | Family::GridSamples { values, .. } => {
                values.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
        }
    }

    /// Local phase rate of φ (radians per unit length) near `t`.
    pub fn oscillation_rate(&self, t: f64) -> f64 {
        match &self.inner.family {
            Family::Chirp { alpha } | Family::GatedChirp { alpha, .. } => {
                alpha * t.max(0.0).powf(alpha - 1.0)
            }
            _ => 0.0,
        }
    }

    /// Cell width for composite quadrature of φ-dependent integrands near `t`.
    pub fn cell_width(&self, t: f64) -> f64 {
        let rate = self.oscillation_rate(t + MAX_CELL);
        if rate > 0.0 {
            (CELL_PHASE / rate).min(MAX_CELL)
        } else {
            MAX_CELL
        }
    }

    /// Width of one sample cell for sampled families.
    pub fn sample_step(&self) -> Option<f64> {
        match &self.inner.family {
            Family::PeriodicSamples { period, values } => Some(period / values.len() as f64),
            Family::GridSamples { step, .. } => Some(*step),
            _ => None,
        }
    }

    /// Points in (a, b) where φ jumps.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if a < 0.0 && b > 0.0 {
            out.push(0.0);
        }
        let lo = a.max(0.0);
        match &self.inner.family {
            Family::GatedChirp { q, .. } => {
                for (l, r) in gate_intervals(*q, b) {
                    for p in [l, r] {
                        if p > lo && p < b {
                            out.push(p);
                        }
                    }
                }
            }
            Family::PeriodicSamples { .. } | Family::GridSamples { .. } => {
                let h = self.sample_step().expect("sampled");
                let mut k = (lo / h).floor() as i64 + 1;
                let last = match &self.inner.family {
                    Family::GridSamples { values, .. } => values.len() as i64,
                    _ => i64::MAX,
                };
                while (k as f64) * h < b && k <= last {
                    out.push(k as f64 * h);
                    k += 1;
                }
            }
            _ => {}
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn prefix(&self) -> &Prefix {
        self.inner.prefix.get_or_init(|| {
            let (step, values) = match &self.inner.family {
                Family::PeriodicSamples { period, values } => (period / values.len() as f64, values),
                Family::GridSamples { step, values } => (*step, values),
                _ => unreachable!("prefix only for sampled families"),
            };
            let n = values.len();
            let mut first = Vec::with_capacity(n + 1);
            let mut abs = Vec::with_capacity(n + 1);
            let mut energy = Vec::with_capacity(n + 1);
            let (mut f, mut a, mut e) = (ZERO, 0.0, 0.0);
            first.push(f);
            abs.push(a);
            energy.push(e);
            for v in values {
                f += v * step;
                a += v.norm() * step;
                e += v.norm_sqr() * step;
                first.push(f);
                abs.push(a);
                energy.push(e);
            }
            Prefix {
                step,
                first,
                abs,
                energy,
            }
        })
    }

    fn chirp_table(&self) -> &ChirpTable {
        self.inner.chirp.get_or_init(|| {
            let alpha = match &self.inner.family {
                Family::Chirp { alpha } | Family::GatedChirp { alpha, .. } => *alpha,
                _ => unreachable!("chirp table only for chirp families"),
            };
            ChirpTable::new(alpha)
        })
    }

    /// ∫_0^t of (φ, |φ|, |φ|²) for the sampled families.
    fn sampled_primitives(&self, t: f64) -> (Complex64, f64, f64) {
        if t <= 0.0 {
            return (ZERO, 0.0, 0.0);
        }
        let p = self.prefix();
        let n = p.first.len() - 1;
        match &self.inner.family {
            Family::GridSamples { values, .. } => {
                let k = (t / p.step).floor() as usize;
                if k >= n {
                    return (p.first[n], p.abs[n], p.energy[n]);
                }
                let r = t - k as f64 * p.step;
                let v = values[k];
                (p.first[k] + v * r, p.abs[k] + v.norm() * r, p.energy[k] + v.norm_sqr() * r)
            }
            Family::PeriodicSamples { period, values } => {
                let periods = (t / period).floor();
                let rem = t - periods * period;
                let k = ((rem / p.step).floor() as usize).min(n - 1);
                let r = rem - k as f64 * p.step;
                let v = values[k];
                (
                    p.first[n] * periods + p.first[k] + v * r,
                    p.abs[n] * periods + p.abs[k] + v.norm() * r,
                    p.energy[n] * periods + p.energy[k] + v.norm_sqr() * r,
                )
            }
            _ => unreachable!(),
        }
    }

    /// ∫_0^t φ(s) ds.
    pub fn primitive(&self, t: f64) -> Complex64 {
        if t <= 0.0 {
            return ZERO;
        }
        match &self.inner.family {
            Family::Zero => ZERO,
            Family::Constant(c) => c * t,
            Family::Chirp { .. } => Complex64::new(self.chirp_table().first(t), 0.0),
            Family::GatedChirp { q, .. } => {
                let table = self.chirp_table();
                let s: f64 = gate_intervals(*q, t)
                    .into_iter()
                    .map(|(l, r)| table.first(r) - table.first(l))
                    .sum();
                Complex64::new(s, 0.0)
            }
            Family::PeriodicSamples { .. } | Family::GridSamples { .. } => self.sampled_primitives(t).0,
        }
    }

    /// ∫_0^t |φ(s)|² ds.
    pub fn energy_primitive(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.inner.family {
            Family::Zero => 0.0,
            Family::Constant(c) => c.norm_sqr() * t,
            Family::Chirp { .. } => self.chirp_table().energy(t),
            Family::GatedChirp { q, .. } => {
                let table = self.chirp_table();
                gate_intervals(*q, t)
                    .into_iter()
                    .map(|(l, r)| table.energy(r) - table.energy(l))
                    .sum()
            }
            Family::PeriodicSamples { .. } | Family::GridSamples { .. } => self.sampled_primitives(t).2,
        }
    }

    /// ∫_a^b φ.
    pub fn integral(&self, a: f64, b: f64) -> Complex64 {
        if let Family::GatedChirp { q, .. } = &self.inner.family {
            // only the gates meeting [a, b]; avoids differencing long sums
            let table = self.chirp_table();
            let s: f64 = gate_overlaps(*q, a, b).map(|(l, r)| table.first(r) - table.first(l)).sum();
            return Complex64::new(s, 0.0);
        }
        self.primitive(b) - self.primitive(a)
    }

    /// ∫_a^b |φ|².
    pub fn energy(&self, a: f64, b: f64) -> f64 {
        if let Family::GatedChirp { q, .. } = &self.inner.family {
            let table = self.chirp_table();
            return gate_overlaps(*q, a, b).map(|(l, r)| table.energy(r) - table.energy(l)).sum();
        }
        self.energy_primitive(b) - self.energy_primitive(a)
    }

    /// ∫_a^b |φ|.
    pub fn abs_integral(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(0.0), b.max(0.0));
        if b <= a {
            return 0.0;
        }
        match &self.inner.family {
            Family::Zero => 0.0,
            Family::Constant(c) => c.norm() * (b - a),
            Family::PeriodicSamples { .. } | Family::GridSamples { .. } => {
                self.sampled_primitives(b).1 - self.sampled_primitives(a).1
            }
            Family::Chirp { alpha } | Family::GatedChirp { alpha, .. } => {
                // |sin| has kinks at s^α = kπ; make them cell edges.
                let mut bps = self.breakpoints(a, b);
                let k0 = (a.powf(*alpha) / PI).ceil() as i64;
                let k1 = (b.powf(*alpha) / PI).floor() as i64;
                for k in k0.max(1)..=k1 {
                    bps.push((k as f64 * PI).powf(1.0 / alpha));
                }
                bps.sort_by(f64::total_cmp);
                composite(a, b, &bps, |t| self.cell_width(t), |t| self.eval(t).norm())
            }
        }
    }

    /// `sup_{x ∈ [0, horizon]} (∫_x^{x+1} |φ|^p)^{1/p}`, p ∈ {1, 2}.
    pub fn triple_norm(&self, p: u32, horizon: f64) -> Result<f64> {
        if p != 1 && p != 2 {
            return Err(Error::Domain(format!("triple norm exponent must be 1 or 2, got {p}")));
        }
        if !(horizon >= 1.0) {
            return Err(Error::Domain(format!("horizon must be ≥ 1, got {horizon}")));
        }
        let window = |x: f64| -> f64 {
            if p == 2 {
                self.energy(x, x + 1.0)
            } else {
                self.abs_integral(x, x + 1.0)
            }
        };
        let mut best = 0.0f64;
        match &self.inner.family {
            Family::Zero => {}
            Family::Constant(_) => best = window(0.0),
            Family::PeriodicSamples { .. } | Family::GridSamples { .. } => {
                // window mass is piecewise linear in x; extremes sit where x
                // or x + 1 is a cell edge
                best = window(0.0).max(window(horizon));
                for e in self.breakpoints(0.0, horizon + 1.0) {
                    for x in [e, e - 1.0] {
                        if (0.0..=horizon).contains(&x) {
                            best = best.max(window(x));
                        }
                    }
                }
            }
            Family::Chirp { .. } | Family::GatedChirp { .. } => {
                let n = (horizon * 200.0).ceil() as usize;
                if p == 2 {
                    for i in 0..=n {
                        best = best.max(window(horizon * i as f64 / n as f64));
                    }
                } else {
                    // cumulative ∫|φ| on a lattice of spacing 1/m
                    let m = 100usize;
                    let end = horizon + 1.0;
                    let count = (end * m as f64).ceil() as usize;
                    let mut cum = Vec::with_capacity(count + 1);
                    cum.push(0.0);
                    for i in 0..count {
                        let l = i as f64 / m as f64;
                        let r = (i + 1) as f64 / m as f64;
                        let last = *cum.last().unwrap();
                        cum.push(last + self.abs_integral(l, r));
                    }
                    for i in 0..count.saturating_sub(m) + 1 {
                        if (i as f64) / (m as f64) > horizon {
                            break;
                        }
                        if i + m < cum.len() {
                            best = best.max(cum[i + m] - cum[i]);
                        }
                    }
                }
            }
        }
        if !best.is_finite() {
            return Err(Error::InvalidData("non-finite window integral".into()));
        }
        Ok(if p == 2 { best.sqrt() } else { best })
    }

    /// Cesàro L² average `(1/x) ∫_0^x |φ|²`.
    pub fn cesaro_l2(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("cesaro average needs x > 0, got {x}")));
        }
        Ok(self.energy_primitive(x) / x)
    }

    /// `(1/ε) ∫_t^{t+ε} φ`.
    pub fn local_average(&self, t: f64, eps: f64) -> Result<Complex64> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("local average needs ε > 0, got {eps}")));
        }
        Ok(self.integral(t, t + eps) / eps)
    }

    /// `(1/x) ∫_0^x |local_average(t, ε)|² dt`.
    pub fn avg_l2_profile(&self, x: f64, eps: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("profile needs x > 0, got {x}")));
        }
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("profile needs ε > 0, got {eps}")));
        }
        let sq = |t: f64| (self.integral(t, t + eps) / eps).norm_sqr();
        let total = match &self.inner.family {
            Family::Zero => 0.0,
            Family::Constant(c) => c.norm_sqr() * x,
            Family::PeriodicSamples { .. } | Family::GridSamples { .. } => {
                // |A|² is piecewise quadratic between these points
                let mut bps = self.breakpoints(0.0, x + eps);
                let shifted: Vec<f64> = bps.iter().map(|b| b - eps).filter(|b| *b > 0.0).collect();
                bps.extend(shifted);
                bps.sort_by(f64::total_cmp);
                bps.dedup();
                let rule = gl8();
                let mut acc = 0.0;
                let mut left = 0.0;
                for stop in bps.into_iter().filter(|&b| b > 0.0 && b < x).chain([x]) {
                    if stop > left {
                        acc += rule.integrate(left, stop, sq);
                        left = stop;
                    }
                }
                acc
            }
            Family::Chirp { .. } | Family::GatedChirp { .. } => self.chirp_profile_integral(x, eps),
        };
        Ok(total / x)
    }

    /// ∫_0^x |A(t)|² for the chirp families (see `avg_l2_profile`).
    fn chirp_profile_integral(&self, x: f64, eps: f64) -> f64 {
        let table = self.chirp_table();
        let alpha = table.alpha;
        let sq = |t: f64| (self.integral(t, t + eps) / eps).norm_sqr();
        // |A|² oscillates at up to twice the local chirp rate
        let width = |t: f64| {
            let rate = 2.0 * alpha * (t + eps + MAX_CELL).powf(alpha - 1.0);
            (CELL_PHASE / rate).min(MAX_CELL)
        };
        // below `t1` integrate by brute force
        let t1 = table.t0.max(50f64.powf(1.0 / (alpha - 1.0)).min(200.0));
        if x <= t1 {
            let bps = self.profile_breakpoints(0.0, x, eps);
            return composite(0.0, x, &bps, width, sq);
        }
        let bps = self.profile_breakpoints(0.0, t1, eps);
        let mut total = composite(0.0, t1, &bps, width, sq);

        // Pieces of [t1, x] on which gate membership of t and t+ε is fixed.
        let mut edges = self.profile_breakpoints(t1, x, eps);
        edges.insert(0, t1);
        edges.push(x);
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let (in0, in1) = match &self.inner.family {
                Family::GatedChirp { q, .. } => (in_gate(mid, *q), in_gate(mid + eps, *q)),
                _ => (true, true),
            };
            let same_piece = match &self.inner.family {
                Family::GatedChirp { q, .. } => gate_index(mid, *q) == gate_index(mid + eps, *q),
                _ => true,
            };
            if !in0 && !in1 && same_piece_gap(&self.inner.family, mid, eps) {
                continue;
            }
            if in0 && in1 && same_piece {
                total += table.smooth_profile_piece(a, b, eps);
            } else {
                total += composite(a, b, &[], width, sq);
            }
        }
        total
    }

    fn profile_breakpoints(&self, a: f64, b: f64, eps: f64) -> Vec<f64> {
        let mut bps = self.breakpoints(a, b + eps);
        let shifted: Vec<f64> = bps.iter().map(|p| p - eps).collect();
        bps.extend(shifted);
        bps.retain(|p| *p > a && *p < b);
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        bps
    }

    /// Datum `t ↦ conj(φ(x0 − t))` on `[0, x0]` as grid samples.
    pub fn reflect_translate(&self, x0: f64) -> Result<OperatorData> {
        if !(x0 >= 0.0) {
            return Err(Error::Domain(format!("reflection point must be ≥ 0, got {x0}")));
        }
        if x0 == 0.0 {
            return Ok(OperatorData::zero());
        }
        match &self.inner.family {
            Family::Zero => Ok(OperatorData::zero()),
            Family::Constant(c) => OperatorData::grid(x0, vec![c.conj()]),
            Family::GridSamples { step, .. } | Family::PeriodicSamples { period: step, .. } => {
                let h = match &self.inner.family {
                    Family::GridSamples { .. } => *step,
                    _ => self.sample_step().expect("sampled"),
                };
                let cells = x0 / h;
                if (cells - cells.round()).abs() < 1e-9 * cells.max(1.0) {
                    // cells align: exact reversal
                    let n = cells.round() as usize;
                    let vals = (0..n)
                        .map(|j| self.eval((n - 1 - j) as f64 * h + 0.5 * h).conj())
                        .collect();
                    OperatorData::grid(h, vals)
                } else {
                    self.sample_reflection(x0, h / 8.0)
                }
            }
            Family::Chirp { .. } | Family::GatedChirp { .. } => {
                let rate = self.oscillation_rate(x0).max(1.0);
                self.sample_reflection(x0, (0.01f64).min(PI / 16.0 / rate))
            }
        }
    }

    fn sample_reflection(&self, x0: f64, max_step: f64) -> Result<OperatorData> {
        let n = (x0 / max_step).ceil().max(1.0) as usize;
        let h = x0 / n as f64;
        let vals = (0..n)
            .map(|j| self.eval(x0 - (j as f64 + 0.5) * h).conj())
            .collect();
        OperatorData::grid(h, vals)
    }

    /// Support end for compactly supported data.
    pub fn support_end(&self) -> Option<f64> {
        match &self.inner.family {
            Family::Zero => Some(0.0),
            Family::GridSamples { step, values } => Some(step * values.len() as f64),
            _ => None,
        }
    }

    /// Complex conjugate datum.
    pub fn conj(&self) -> OperatorData {
        let family = match &self.inner.family {
            Family::Constant(c) => Family::Constant(c.conj()),
            Family::PeriodicSamples { period, values } => Family::PeriodicSamples {
                period: *period,
                values: values.iter().map(|v| v.conj()).collect(),
            },
            Family::GridSamples { step, values } => Family::GridSamples {
                step: *step,
                values: values.iter().map(|v| v.conj()).collect(),
            },
            // real-valued families
            other => other.clone(),
        };
        OperatorData::new(family).expect("conjugation preserves validity")
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.inner.family {
            Family::Zero => "zero".into(),
            Family::Constant(c) if c.im == 0.0 => format!("constant({})", c.re),
            Family::Constant(c) => format!("constant({}{:+}i)", c.re, c.im),
            Family::Chirp { alpha } => format!("chirp(alpha={alpha})"),
            Family::GatedChirp { alpha, q } => format!("gated-chirp(alpha={alpha},q={q})"),
            Family::PeriodicSamples { period, values } => {
                format!("periodic(period={period},n={})", values.len())
            }
            Family::GridSamples { step, values } => format!("grid(step={step},n={})", values.len()),
        }
    }
}

fn same_piece_gap(family: &Family, t: f64, eps: f64) -> bool {
    match family {
        Family::GatedChirp { q, .. } => gate_index(t, *q) == gate_index(t + eps, *q),
        _ => true,
    }
}

fn validate(family: &Family) -> Result<()> {
    let finite = |v: &[Complex64]| v.iter().all(|c| c.re.is_finite() && c.im.is_finite());
    match family {
        Family::Zero => Ok(()),
        Family::Constant(c) if c.re.is_finite() && c.im.is_finite() => Ok(()),
        Family::Constant(_) => Err(Error::InvalidData("constant must be finite".into())),
        Family::Chirp { alpha } if *alpha > 1.0 && alpha.is_finite() => Ok(()),
        Family::Chirp { alpha } => Err(Error::InvalidData(format!("chirp needs α > 1, got {alpha}"))),
        Family::GatedChirp { alpha, q }
            if *alpha > 1.0 && alpha.is_finite() && *q > 1.0 && q.is_finite() =>
        {
            Ok(())
        }
        Family::GatedChirp { alpha, q } => Err(Error::InvalidData(format!(
            "gated chirp needs α > 1 and q > 1, got α={alpha}, q={q}"
        ))),
        Family::PeriodicSamples { period, values } => {
            if !(*period > 0.0 && period.is_finite()) {
                Err(Error::InvalidData(format!("period must be positive, got {period}")))
            } else if values.is_empty() {
                Err(Error::InvalidData("periodic data needs samples".into()))
            } else if !finite(values) {
                Err(Error::InvalidData("non-finite sample value".into()))
            } else {
                Ok(())
            }
        }
        Family::GridSamples { step, values } => {
            if !(*step > 0.0 && step.is_finite()) {
                Err(Error::InvalidData(format!("step must be positive, got {step}")))
            } else if !finite(values) {
                Err(Error::InvalidData("non-finite sample value".into()))
            } else {
                Ok(())
            }
        }
    }
}

/// Index k with t ∈ [q^{2k}, q^{2k+2}); -1 below 1.
fn gate_index(t: f64, q: f64) -> i64 {
    if t < 1.0 {
        return -1;
    }
    let mut k = (t.ln() / (2.0 * q.ln())).floor() as i64;
    // guard the floating log against off-by-one at the edges
    while q.powi(2 * k as i32) > t {
        k -= 1;
    }
    while q.powi(2 * (k + 1) as i32) <= t {
        k += 1;
    }
    k
}

/// Nonempty pieces `[q^{2k}, q^{2k+1}) ∩ [a, b]`.
fn gate_overlaps(q: f64, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let lo = a.max(0.0);
    let first = gate_index(lo, q).max(0);
    (first..)
        .map(move |k| (q.powi(2 * k as i32), q.powi(2 * k as i32 + 1)))
        .take_while(move |&(l, _)| l < b)
        .filter_map(move |(l, r)| {
            let (l, r) = (l.max(lo), r.min(b));
            (l < r).then_some((l, r))
        })
}

/// Membership in `B = ∪_{k≥0} [q^{2k}, q^{2k+1})`.
pub fn in_gate(t: f64, q: f64) -> bool {
    let k = gate_index(t, q);
    k >= 0 && t < q.powi(2 * k as i32 + 1)
}

/// Intervals of `B ∩ [0, t]`.
pub fn gate_intervals(q: f64, t: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let l = q.powi(2 * k);
        if l >= t {
            break;
        }
        out.push((l, q.powi(2 * k + 1).min(t)));
        k += 1;
    }
    out
}

impl ChirpTable {
    fn new(alpha: f64) -> Self {
        // expansion parameter of the e^{2i t^α} antiderivative is
        // (α-1)/(2α t^α); keep it below 2.5e-3
        let t0 = ((alpha - 1.0) / (0.005 * alpha)).powf(1.0 / alpha).max(4.0);
        let rate = 2.0 * alpha * t0.powf(alpha - 1.0);
        let knot_target = (CELL_PHASE / rate).min(MAX_CELL);
        let n = (t0 / knot_target).ceil() as usize;
        let knot = t0 / n as f64;
        let rule = gl8();
        let mut first = Vec::with_capacity(n + 1);
        let mut energy = Vec::with_capacity(n + 1);
        let (mut f, mut e) = (0.0, 0.0);
        first.push(f);
        energy.push(e);
        for i in 0..n {
            let (l, r) = (i as f64 * knot, (i + 1) as f64 * knot);
            f += rule.integrate(l, r, |s| s.powf(alpha).sin());
            e += rule.integrate(l, r, |s| s.powf(alpha).sin().powi(2));
            first.push(f);
            energy.push(e);
        }
        Self {
            alpha,
            t0: n as f64 * knot,
            knot,
            first,
            energy,
            phase1: PowerPhase::new(1.0, alpha, 0.0),
            phase2: PowerPhase::new(2.0, alpha, 0.0),
        }
    }

    /// ∫_0^t sin(s^α) ds
    fn first(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t <= self.t0 {
            let k = ((t / self.knot).floor() as usize).min(self.first.len() - 1);
            let l = k as f64 * self.knot;
            let alpha = self.alpha;
            return self.first[k] + gl8().integrate(l, t, |s| s.powf(alpha).sin());
        }
        let end = *self.first.last().unwrap();
        end + (self.phase1.antiderivative(t).value - self.phase1.antiderivative(self.t0).value).im
    }

    /// ∫_0^t sin²(s^α) ds
    fn energy(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t <= self.t0 {
            let k = ((t / self.knot).floor() as usize).min(self.energy.len() - 1);
            let l = k as f64 * self.knot;
            let alpha = self.alpha;
            return self.energy[k] + gl8().integrate(l, t, |s| s.powf(alpha).sin().powi(2));
        }
        let end = *self.energy.last().unwrap();
        let osc = self.phase2.antiderivative(t).value - self.phase2.antiderivative(self.t0).value;
        end + 0.5 * (t - self.t0) - 0.5 * osc.re
    }

    /// ∫_a^b |Im(G(t+ε) - G(t))|² / ε² dt with G the asymptotic
    /// antiderivative of e^{it^α}, for T₀ ≤ a < b.
    ///
    /// With D = G(t+ε) - G(t): (Im D)² = (|D|² - Re D²)/2. The first term
    /// varies on the slow scale of ψ(t+ε) - ψ(t) and is integrated by
    /// quadrature; the second oscillates like e^{2iψ} and is integrated by
    /// its leading boundary term.
    fn smooth_profile_piece(&self, a: f64, b: f64, eps: f64) -> f64 {
        let p = &self.phase1;
        let alpha = self.alpha;
        let slow = |t: f64| {
            let g1 = p.antiderivative(t + eps).value;
            let g0 = p.antiderivative(t).value;
            (g1 - g0).norm_sqr()
        };
        let width = |t: f64| {
            let slow_rate = (p.rate(t + eps) - p.rate(t)).abs();
            let w = if slow_rate > 0.0 { CELL_PHASE / slow_rate } else { f64::INFINITY };
            w.min(0.125 * t).min(4.0).max(1e-6)
        };
        let slow_int = composite(a, b, &[], width, slow);

        let fast_anti = |t: f64| -> f64 {
            let (p1, _) = p.amplitude(t + eps);
            let (p0, _) = p.amplitude(t);
            let psi1 = p.phase(t + eps);
            let psi0 = p.phase(t);
            let r1 = p.rate(t + eps);
            let r0 = p.rate(t);
            let term = |q: Complex64, theta: f64, rate: f64| {
                q * Complex64::from_polar(1.0, theta) / Complex64::new(0.0, rate)
            };
            let s = term(p1 * p1, 2.0 * psi1, 2.0 * r1) + term(p0 * p0, 2.0 * psi0, 2.0 * r0)
                - term(p1 * p0 * 2.0, psi1 + psi0, r1 + r0);
            s.re
        };
        let fast_int = fast_anti(b) - fast_anti(a);
        let _ = alpha;
        0.5 * (slow_int - fast_int) / (eps * eps)
    }
}

/// Reference values for tests that need ∫ e^{iψ} over short ranges by
/// brute force.
pub fn brute_force_integral(phi: &OperatorData, a: f64, b: f64) -> Complex64 {
    let bps = phi.breakpoints(a, b);
    composite_c(a, b, &bps, |t| phi.cell_width(t) / 4.0, |t| phi.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(OperatorData::zero().eval(3.7), ZERO);
        let chirp = OperatorData::chirp(2.0).unwrap();
        assert!((chirp.eval((PI / 2.0).sqrt()).re - 1.0).abs() < 1e-15);
        let gated = OperatorData::gated_chirp(2.0, 2.0).unwrap();
        assert_eq!(gated.eval(3.0), ZERO);
        assert!(gated.eval(1.5).re != 0.0);
        assert_eq!(chirp.eval(-1.0), ZERO);
    }

    #[test]
    fn gate_membership_is_half_open() {
        assert!(in_gate(1.0, 2.0));
        assert!(!in_gate(2.0, 2.0));
        assert!(in_gate(4.0, 2.0));
        assert!(!in_gate(8.0, 2.0));
        assert!(!in_gate(0.5, 2.0));
        assert!(in_gate(16.0, 2.0));
    }

    #[test]
    fn invalid_families_rejected() {
        assert!(OperatorData::chirp(1.0).is_err());
        assert!(OperatorData::gated_chirp(2.0, 1.0).is_err());
        assert!(OperatorData::grid(0.1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(OperatorData::periodic(0.0, vec![c(1.0, 0.0)]).is_err());
        assert!(OperatorData::constant(c(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn triple_norm_examples() {
        let k = OperatorData::constant(2.0).unwrap();
        assert!((k.triple_norm(2, 5.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(OperatorData::zero().triple_norm(1, 3.0).unwrap(), 0.0);
        assert!(k.triple_norm(3, 5.0).is_err());
        assert!(k.triple_norm(2, 0.5).is_err());
    }

    #[test]
    fn cesaro_domain_and_constant() {
        let k = OperatorData::constant(c(1.0, 2.0)).unwrap();
        assert!((k.cesaro_l2(7.3).unwrap() - 5.0).abs() < 1e-13);
        assert!(k.cesaro_l2(0.0).is_err());
        assert!(k.cesaro_l2(-1.0).is_err());
    }

    #[test]
    fn local_average_examples() {
        let k = OperatorData::constant(c(0.5, -1.0)).unwrap();
        let v = k.local_average(3.0, 0.7).unwrap();
        assert!((v - c(0.5, -1.0)).norm() < 1e-14);
        assert_eq!(OperatorData::zero().local_average(1.0, 0.5).unwrap(), ZERO);
        assert!(k.local_average(1.0, 0.0).is_err());
    }

    #[test]
    fn chirp_primitive_matches_brute_force_across_threshold() {
        let chirp = OperatorData::chirp(2.0).unwrap();
        for (a, b) in [(0.0, 3.0), (5.0, 12.0), (9.0, 30.0), (40.0, 41.5)] {
            let exact = brute_force_integral(&chirp, a, b);
            let got = chirp.integral(a, b);
            assert!((got - exact).norm() < 1e-12, "[{a},{b}] {got} vs {exact}");
        }
        let chirp3 = OperatorData::chirp(1.5).unwrap();
        let exact = brute_force_integral(&chirp3, 10.0, 60.0);
        assert!((chirp3.integral(10.0, 60.0) - exact).norm() < 1e-12);
    }

    #[test]
    fn chirp_energy_matches_brute_force() {
        for phi in [OperatorData::chirp(2.0).unwrap(), OperatorData::gated_chirp(2.0, 2.0).unwrap()] {
            for (a, b) in [(0.0, 3.0), (5.0, 30.0), (14.0, 70.0)] {
                let bps = phi.breakpoints(a, b);
                let exact = composite(a, b, &bps, |t| phi.cell_width(t) / 4.0, |t| phi.eval(t).norm_sqr());
                let got = phi.energy(a, b);
                assert!((got - exact).abs() < 1e-11, "{} [{a},{b}] {got} vs {exact}", phi.label());
            }
        }
    }

    #[test]
    fn grid_primitives_are_exact() {
        let g = OperatorData::grid(0.5, vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 1.0)]).unwrap();
        assert!((g.integral(0.25, 1.25) - (c(0.25, 0.0) + c(0.0, 1.0) + c(-0.75, 0.25))).norm() < 1e-15);
        assert!((g.energy(0.0, 10.0) - 0.5 * (1.0 + 4.0 + 10.0)).abs() < 1e-14);
        assert_eq!(g.eval(1.6), ZERO);
        let p = OperatorData::periodic(1.0, vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert!(p.integral(0.0, 3.25).re - 0.25 < 1e-15);
        assert!((p.energy(0.0, 3.25) - 3.25).abs() < 1e-14);
    }

    #[test]
    fn reflect_translate_examples() {
        let k = OperatorData::constant(c(1.0, 2.0)).unwrap();
        let r = k.reflect_translate(3.0).unwrap();
        assert_eq!(r.eval(0.0), c(1.0, -2.0));
        assert_eq!(r.eval(2.99), c(1.0, -2.0));
        assert_eq!(r.eval(3.0), ZERO);
        assert_eq!(OperatorData::zero().reflect_translate(4.0).unwrap(), OperatorData::zero());
        let vals = vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -3.0)];
        let g = OperatorData::grid(0.5, vals).unwrap();
        let r = g.reflect_translate(1.5).unwrap();
        match r.family() {
            Family::GridSamples { step, values } => {
                assert_eq!(*step, 0.5);
                assert_eq!(values, &vec![c(0.0, 3.0), c(2.0, 0.0), c(1.0, -1.0)]);
            }
            other => panic!("unexpected family {other:?}"),
        }
        assert!(k.reflect_translate(-1.0).is_err());
    }

    #[test]
    fn samples_text_parsing() {
        let g = OperatorData::from_samples_text("# t re im\n0 1 0\n0.5, 2, -1\n1.0 3\n").unwrap();
        assert_eq!(g.eval(0.7), c(2.0, -1.0));
        assert!(OperatorData::from_samples_text("0 1\n0.5 2\n1.2 3\n").is_err());
        assert!(OperatorData::from_samples_text("0.1 1\n0.6 2\n").is_err());
        assert!(OperatorData::from_samples_text("0 nan\n1 2\n").is_err());
    }
}
