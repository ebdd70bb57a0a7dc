//! End-to-end regularity report: runs every sweep named in an
//! [`ExperimentConfig`] and renders the artifacts.
//!
//! All limits are replaced by finite-x proxies; each table records the x (or
//! y) window it was computed over.

use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, ModelChoice};
use crate::error::{Error, Result};
use crate::martin::{martin_build, martin_eval, martin_measure, GapSet, MartinModel};
use crate::operator::{Family, OperatorData};
use crate::output::{fmt_f64, to_json, write_file, Cell, Csv};
use crate::propagation::{GrowthField, StepControl};
use crate::series::{growth_residuals, ResidualTable};
use crate::spectral::{
    g_eps_from_spectrum, gap_slack, geps_kmax, parseval_kmax, parseval_lattice, regularity_gap, sigma_spectrum,
    MeasureHistogram, ParsevalCheck, RegularityGap, Verdict,
};
use crate::zeros::zero_count_detail;

/// Largest `|h(x_max, z) − M_E(z)|` over the z-grid compatible with a
/// regular verdict.
pub const H_TOLERANCE: f64 = 0.1;
/// Allowed undershoot of `h − M_E` (the Combes–Thomas direction).
pub const COMBES_THOMAS_SLACK: f64 = 0.05;
/// Relative tolerance on `b_E ≤ liminf` Cesàro.
pub const CESARO_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub phi: String,
    pub model: String,
    pub z_grid: Vec<(f64, f64)>,
    pub step: StepSettings,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepSettings {
    pub max_step: f64,
    pub z_scale: f64,
    pub phase_per_step: f64,
    pub horizon: f64,
}

impl From<&StepControl> for StepSettings {
    fn from(s: &StepControl) -> Self {
        Self {
            max_step: s.max_step,
            z_scale: s.z_scale,
            phase_per_step: s.phase_per_step,
            horizon: s.horizon,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BeBlock {
    pub value: f64,
    pub provenance: String,
    /// Exact expansion coefficient of the model, for comparison.
    pub series_value: f64,
    pub gap_residual: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CesaroRow {
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CesaroTable {
    pub rows: Vec<CesaroRow>,
    pub proxy_window: (f64, f64),
    pub liminf_proxy: f64,
    pub limsup_proxy: f64,
    /// `b_E ≤ liminf_proxy` up to [`CESARO_TOLERANCE`].
    pub inequality_holds: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AverageRow {
    pub x: f64,
    pub eps: f64,
    pub time_value: f64,
    /// Frequency-side value; absent above `frequency_x_max`.
    pub freq_value: Option<f64>,
    pub freq_tail_bound: Option<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageTable {
    pub rows: Vec<AverageRow>,
    pub frequency_x_max: f64,
    pub regularity: RegularityGap,
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaSummary {
    pub x: f64,
    pub kmax: f64,
    pub binned_mass: f64,
    pub tail_mass: f64,
    pub total_mass: f64,
    pub cesaro: f64,
    pub parseval: ParsevalCheck,
    #[serde(skip)]
    pub histogram: MeasureHistogram,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthRow {
    pub x: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub h: f64,
    pub martin: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckpointSummary {
    pub x: f64,
    pub max_abs_deviation: f64,
    /// `min_z (h − M_E)`; the Combes–Thomas direction asks for ≥ 0.
    pub min_margin: f64,
    pub min_margin_at: (f64, f64),
    pub combes_thomas_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    pub per_checkpoint: Vec<CheckpointSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesBlock {
    pub x: f64,
    pub y_window: (f64, f64),
    pub table: ResidualTable,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroRow {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub mass: f64,
    pub martin_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroTable {
    pub x: f64,
    pub window: (f64, f64),
    pub rows: Vec<ZeroRow>,
    pub total_mass: f64,
    pub martin_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictBlock {
    pub verdict: Verdict,
    /// every ε: limsup proxy ≤ b_E + slack
    pub averages_condition: bool,
    pub averages_slack: f64,
    /// `max_z |h(x_max, z) − M_E(z)| ≤ H_TOLERANCE`
    pub growth_condition: bool,
    pub growth_max_deviation: f64,
    pub growth_x: f64,
    pub cesaro_inequality: bool,
    pub combes_thomas: bool,
    pub note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub scenario: Scenario,
    pub b_e: BeBlock,
    pub cesaro: CesaroTable,
    pub averages: AverageTable,
    pub sigma: Vec<SigmaSummary>,
    pub growth: GrowthTable,
    pub series: SeriesBlock,
    pub zeros: ZeroTable,
    pub verdict: VerdictBlock,
    #[serde(skip)]
    pub martin: MartinModel,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// The gap set a model choice stands for, with a provenance line.
pub fn resolve_model(phi: &OperatorData, choice: &ModelChoice) -> Result<(GapSet, String)> {
    Ok(match choice {
        ModelChoice::Free => (GapSet::free(), "E = R (free model); b_E = 0 in closed form".into()),
        ModelChoice::ConstantAuto => {
            let Family::Constant(c) = phi.family() else {
                return Err(Error::Config("constant-auto requires the constant family".into()));
            };
            let a = c.norm();
            if a == 0.0 {
                (GapSet::free(), "constant-auto with c = 0: E = R".into())
            } else {
                (
                    GapSet::new(vec![(-a, a)])?,
                    format!("one-gap model (-|c|, |c|) = ({}, {}) derived from the constant data", -a, a),
                )
            }
        }
        ModelChoice::Gaps(g) => (g.clone(), format!("configured gap set {:?}", g.gaps)),
    })
}

fn largest_decade(xs: &[f64]) -> (f64, f64) {
    let x_max = xs.iter().cloned().fold(f64::MIN, f64::max);
    (x_max / 10.0, x_max)
}

pub fn run_report(cfg: &ExperimentConfig) -> Result<RegularityReport> {
    let phi = &cfg.phi;

    let (gapset, provenance) = stage("martin", resolve_model(phi, &cfg.model))?;
    let model = stage("martin", martin_build(&gapset))?;
    let b_e = model.b_e;
    let b_block = BeBlock {
        value: b_e,
        provenance,
        series_value: model.b_e_series,
        gap_residual: model.gap_residual,
    };

    // Cesàro averages over the union of the checkpoint and average grids
    let mut cx: Vec<f64> = cfg.checkpoints.iter().chain(&cfg.avg_x).copied().collect();
    cx.sort_by(f64::total_cmp);
    cx.dedup();
    let mut crows = Vec::with_capacity(cx.len());
    for &x in &cx {
        crows.push(CesaroRow {
            x,
            value: stage("cesaro", phi.cesaro_l2(x))?,
        });
    }
    let window = largest_decade(&cx);
    let in_window = crows.iter().filter(|r| r.x >= window.0).map(|r| r.value);
    let liminf_proxy = in_window.clone().fold(f64::INFINITY, f64::min);
    let limsup_proxy = in_window.fold(f64::NEG_INFINITY, f64::max);
    let cesaro = CesaroTable {
        rows: crows,
        proxy_window: window,
        liminf_proxy,
        limsup_proxy,
        inequality_holds: b_e <= liminf_proxy + CESARO_TOLERANCE * b_e.max(1.0),
    };

    // ε-averages: time side via the regularity gap, frequency side from one
    // spectrum per x
    let regularity = stage("averages", regularity_gap(phi, b_e, &cfg.avg_x, &cfg.eps))?;
    let eps_min = cfg.eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut arows = Vec::with_capacity(regularity.rows.len());
    let mut spectra = Vec::new();
    for &x in cfg.avg_x.iter().filter(|&&x| x <= cfg.frequency_x_max) {
        spectra.push((x, stage("averages", sigma_spectrum(phi, x, geps_kmax(eps_min), 16))?));
    }
    for r in &regularity.rows {
        let freq = spectra
            .iter()
            .find(|(x, _)| *x == r.x)
            .map(|(_, s)| g_eps_from_spectrum(s, r.eps));
        arows.push(AverageRow {
            x: r.x,
            eps: r.eps,
            time_value: r.avg_l2,
            freq_value: freq.map(|g| g.value),
            freq_tail_bound: freq.map(|g| g.tail_bound),
            gap: r.gap,
        });
    }
    drop(spectra);
    let averages = AverageTable {
        rows: arows,
        frequency_x_max: cfg.frequency_x_max,
        regularity,
    };

    let mut sigma = Vec::with_capacity(cfg.sigma_x.len());
    for &x in &cfg.sigma_x {
        let spec = stage("sigma", sigma_spectrum(phi, x, cfg.sigma_kmax, cfg.sigma_bins))?;
        let parseval = stage("sigma", parseval_lattice(phi, x, parseval_kmax(phi, x)))?;
        let h = spec.histogram;
        sigma.push(SigmaSummary {
            x,
            kmax: cfg.sigma_kmax,
            binned_mass: h.binned_mass(),
            tail_mass: h.tail_mass,
            total_mass: h.total_mass,
            cesaro: parseval.cesaro,
            parseval,
            histogram: h,
        });
    }

    let field = stage("growth", GrowthField::compute(phi, &cfg.zs, &cfg.checkpoints, &cfg.step))?;
    let martin_at: Vec<f64> = stage("growth", cfg.zs.iter().map(|&z| martin_eval(&model, z)).collect())?;
    let growth = growth_table(&field, &martin_at);

    let series_table = stage("series", growth_residuals(phi, cfg.series_x, &cfg.series_y, &cfg.step))?;
    let ys = &cfg.series_y;
    let series = SeriesBlock {
        x: cfg.series_x,
        y_window: (
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
        table: series_table,
    };

    let zc = stage(
        "zeros",
        zero_count_detail(phi, cfg.zeros_x, cfg.zeros_window, cfg.zeros_bins, &cfg.step),
    )?;
    let rho = stage("zeros", martin_measure(&model, cfg.zeros_window, cfg.zeros_bins))?;
    let zrows: Vec<ZeroRow> = zc
        .histogram
        .bins()
        .zip(&zc.counts)
        .zip(&rho.masses)
        .map(|(((lo, hi, mass), &count), &martin_mass)| ZeroRow {
            lo,
            hi,
            count,
            mass,
            martin_mass,
        })
        .collect();
    let zeros = ZeroTable {
        x: cfg.zeros_x,
        window: cfg.zeros_window,
        total_mass: zc.histogram.binned_mass(),
        martin_total: rho.binned_mass(),
        rows: zrows,
    };

    let verdict = verdict_block(&averages.regularity, &growth, &cesaro, b_e);
    Ok(RegularityReport {
        scenario: Scenario {
            phi: phi.label(),
            model: format!("{:?}", model.gapset.gaps),
            z_grid: cfg.zs.iter().map(|z| (z.re, z.im)).collect(),
            step: (&cfg.step).into(),
        },
        b_e: b_block,
        cesaro,
        averages,
        sigma,
        growth,
        series,
        zeros,
        verdict,
        martin: model,
    })
}

fn growth_table(field: &GrowthField, martin_at: &[f64]) -> GrowthTable {
    let mut rows = Vec::new();
    let mut per_checkpoint = Vec::with_capacity(field.xs.len());
    for (k, &x) in field.xs.iter().enumerate() {
        let mut max_dev = 0.0f64;
        let mut min_margin = f64::INFINITY;
        let mut at = (f64::NAN, f64::NAN);
        for (i, z) in field.zs.iter().enumerate() {
            let h = field.values[i][k];
            let d = h - martin_at[i];
            rows.push(GrowthRow {
                x,
                re_z: z.re,
                im_z: z.im,
                h,
                martin: martin_at[i],
                deviation: d,
            });
            max_dev = max_dev.max(d.abs());
            if d < min_margin {
                min_margin = d;
                at = (z.re, z.im);
            }
        }
        per_checkpoint.push(CheckpointSummary {
            x,
            max_abs_deviation: max_dev,
            min_margin,
            min_margin_at: at,
            combes_thomas_holds: min_margin >= -COMBES_THOMAS_SLACK,
        });
    }
    GrowthTable { rows, per_checkpoint }
}

fn verdict_block(reg: &RegularityGap, growth: &GrowthTable, cesaro: &CesaroTable, b_e: f64) -> VerdictBlock {
    let slack = gap_slack(b_e);
    let averages_condition = reg.per_eps.iter().all(|s| s.limsup_proxy <= b_e + slack);
    let last = growth.per_checkpoint.last().expect("checkpoints are nonempty");
    let growth_condition = last.max_abs_deviation <= H_TOLERANCE;
    let verdict = if averages_condition && growth_condition {
        Verdict::RegularConsistent
    } else {
        Verdict::Inconclusive
    };
    VerdictBlock {
        verdict,
        averages_condition,
        averages_slack: slack,
        growth_condition,
        growth_max_deviation: last.max_abs_deviation,
        growth_x: last.x,
        cesaro_inequality: cesaro.inequality_holds,
        combes_thomas: growth.per_checkpoint.iter().all(|c| c.combes_thomas_holds),
        note: "finite-x proxies cannot certify failure of a liminf criterion; \
               the verdict is REGULAR-CONSISTENT or INCONCLUSIVE only",
    }
}

impl RegularityReport {
    /// `(file name, contents)` pairs in a fixed order.
    pub fn artifacts(&self) -> Vec<(&'static str, String)> {
        vec![
            ("report.json", to_json(self)),
            ("growth.csv", self.growth_csv()),
            ("sigma.csv", self.sigma_csv()),
            ("averages.csv", self.averages_csv()),
            ("series.csv", self.series.table.to_csv()),
            ("martin.json", self.martin.to_json()),
            ("zeros.csv", self.zeros_csv()),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, text) in self.artifacts() {
            write_file(dir, name, &text).map_err(|e| e.in_stage("output"))?;
        }
        Ok(())
    }

    pub fn growth_csv(&self) -> String {
        let mut csv = Csv::new(&["x", "re_z", "im_z", "h", "martin", "deviation"]);
        for r in &self.growth.rows {
            csv.row(&[
                Cell::F(r.x),
                Cell::F(r.re_z),
                Cell::F(r.im_z),
                Cell::F(r.h),
                Cell::F(r.martin),
                Cell::F(r.deviation),
            ]);
        }
        csv.into_string()
    }

    pub fn sigma_csv(&self) -> String {
        let mut csv = Csv::new(&["x", "lo", "hi", "mass"]);
        for s in &self.sigma {
            for (lo, hi, m) in s.histogram.bins() {
                csv.row(&[Cell::F(s.x), Cell::F(lo), Cell::F(hi), Cell::F(m)]);
            }
        }
        csv.into_string()
    }

    pub fn averages_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(Cell::S(String::new()), Cell::F);
        let mut csv = Csv::new(&["x", "eps", "time_value", "freq_value", "gap"]);
        for r in &self.averages.rows {
            csv.row(&[Cell::F(r.x), Cell::F(r.eps), Cell::F(r.time_value), opt(r.freq_value), Cell::F(r.gap)]);
        }
        csv.into_string()
    }

    pub fn zeros_csv(&self) -> String {
        let mut csv = Csv::new(&["lo", "hi", "count", "mass", "martin_mass"]);
        for r in &self.zeros.rows {
            csv.row(&[
                Cell::F(r.lo),
                Cell::F(r.hi),
                Cell::I(r.count as i64),
                Cell::F(r.mass),
                Cell::F(r.martin_mass),
            ]);
        }
        csv.into_string()
    }

    /// Short human-readable summary for the terminal.
    pub fn summary(&self) -> String {
        let f = fmt_f64;
        let v = &self.verdict;
        let c = &self.cesaro;
        let mut lines = vec![
            format!("phi: {}", self.scenario.phi),
            format!("b_E = {} ({})", f(self.b_e.value), self.b_e.provenance),
            format!(
                "cesaro over x in [{}, {}]: liminf-proxy {}, limsup-proxy {}",
                f(c.proxy_window.0),
                f(c.proxy_window.1),
                f(c.liminf_proxy),
                f(c.limsup_proxy)
            ),
        ];
        let w = self.averages.regularity.proxy_window;
        for s in &self.averages.regularity.per_eps {
            lines.push(format!(
                "eps {}: avg_l2 over x in [{}, {}] in [{}, {}]",
                f(s.eps),
                f(w.0),
                f(w.1),
                f(s.liminf_proxy),
                f(s.limsup_proxy)
            ));
        }
        lines.push(format!(
            "max |h({}, z) - M_E(z)| over the z-grid = {}",
            f(v.growth_x),
            f(v.growth_max_deviation)
        ));
        lines.push(format!(
            "universal inequalities: cesaro {}, combes-thomas {}",
            if v.cesaro_inequality { "ok" } else { "VIOLATED" },
            if v.combes_thomas { "ok" } else { "VIOLATED" }
        ));
        lines.push(format!("verdict: {}", v.verdict.as_str()));
        lines.join("\n") + "\n"
    }
}
