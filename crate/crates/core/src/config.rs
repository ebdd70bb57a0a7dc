//! Experiment configuration (TOML) and the small text parsers shared with
//! the command line.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::martin::GapSet;
use crate::operator::{Family, OperatorData};
use crate::propagation::StepControl;

/// Which set E the report compares against.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelChoice {
    /// `E = ℝ`
    Free,
    /// One gap `(−|c|, |c|)` for `Constant(c)`.
    ConstantAuto,
    Gaps(GapSet),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub phi: OperatorData,
    pub zs: Vec<Complex64>,
    pub checkpoints: Vec<f64>,
    pub avg_x: Vec<f64>,
    pub eps: Vec<f64>,
    /// Frequency-side ε-averages are computed only up to this x.
    pub frequency_x_max: f64,
    pub sigma_x: Vec<f64>,
    pub sigma_kmax: f64,
    pub sigma_bins: usize,
    pub series_x: f64,
    pub series_y: Vec<f64>,
    pub zeros_x: f64,
    pub zeros_window: (f64, f64),
    pub zeros_bins: usize,
    pub model: ModelChoice,
    pub step: StepControl,
    pub output: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    output: Option<String>,
    phi: RawPhi,
    #[serde(default)]
    z_grid: RawZGrid,
    #[serde(default)]
    checkpoints: RawCheckpoints,
    #[serde(default)]
    averages: RawAverages,
    #[serde(default)]
    sigma: RawSigma,
    #[serde(default)]
    series: RawSeries,
    #[serde(default)]
    zeros: RawZeros,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    tolerances: RawTolerances,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhi {
    family: String,
    c: Option<[f64; 2]>,
    alpha: Option<f64>,
    q: Option<f64>,
    period: Option<f64>,
    step: Option<f64>,
    values: Option<Vec<[f64; 2]>>,
    file: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawZGrid {
    re: [f64; 2],
    im: [f64; 2],
    n_re: usize,
    n_im: usize,
    points: Option<Vec<[f64; 2]>>,
}

impl Default for RawZGrid {
    fn default() -> Self {
        Self {
            re: [-2.0, 2.0],
            im: [0.5, 2.0],
            n_re: 5,
            n_im: 4,
            points: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawCheckpoints {
    x: Vec<f64>,
}

impl Default for RawCheckpoints {
    fn default() -> Self {
        Self {
            x: vec![25.0, 50.0, 100.0, 200.0],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawAverages {
    x: Vec<f64>,
    eps: Vec<f64>,
    #[serde(default = "default_frequency_x_max")]
    frequency_x_max: f64,
}

fn default_frequency_x_max() -> f64 {
    1000.0
}

impl Default for RawAverages {
    fn default() -> Self {
        Self {
            x: vec![100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0],
            eps: vec![1.0, 0.5, 0.25],
            frequency_x_max: default_frequency_x_max(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSigma {
    x: Vec<f64>,
    kmax: f64,
    bins: usize,
}

impl Default for RawSigma {
    fn default() -> Self {
        Self {
            x: vec![10.0, 100.0, 1000.0],
            kmax: 20.0,
            bins: 64,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSeries {
    x: f64,
    y: Vec<f64>,
}

impl Default for RawSeries {
    fn default() -> Self {
        Self {
            x: 200.0,
            y: vec![8.0, 16.0, 32.0, 64.0],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawZeros {
    x: f64,
    window: [f64; 2],
    bins: usize,
}

impl Default for RawZeros {
    fn default() -> Self {
        Self {
            x: 100.0,
            window: [-3.0, 3.0],
            bins: 12,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    /// `"free"`, `"constant-auto"`, or a gap list such as `"(-1,1) (2,3)"`.
    gaps: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    max_step: Option<f64>,
    z_scale: Option<f64>,
    phase_per_step: Option<f64>,
    horizon: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    /// Relative paths (output directory, sample files) resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let phi = build_phi(&raw.phi, base)?;

        let zs = match &raw.z_grid.points {
            Some(pts) => pts.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            None => rectangle(&raw.z_grid)?,
        };
        if zs.is_empty() {
            return Err(Error::Config("z grid is empty".into()));
        }
        if zs.iter().any(|z| z.im == 0.0 || !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("z grid points must be finite and non-real".into()));
        }

        let checkpoints = increasing("checkpoints.x", raw.checkpoints.x)?;
        let avg_x = increasing("averages.x", raw.averages.x)?;
        let eps = positive("averages.eps", raw.averages.eps)?;
        let sigma_x = increasing("sigma.x", raw.sigma.x)?;
        let series_y = positive("series.y", raw.series.y)?;
        positive("sigma.kmax", vec![raw.sigma.kmax])?;
        positive("series.x", vec![raw.series.x])?;
        positive("zeros.x", vec![raw.zeros.x])?;
        if raw.sigma.bins < 16 {
            return Err(Error::Config("sigma.bins must be at least 16".into()));
        }
        if raw.zeros.bins == 0 || !(raw.zeros.window[0] < raw.zeros.window[1]) {
            return Err(Error::Config("zeros needs an increasing window and at least one bin".into()));
        }

        let model = match raw.model.gaps.as_deref().map(str::trim) {
            None | Some("free") => ModelChoice::Free,
            Some("constant-auto") => {
                if !matches!(phi.family(), Family::Constant(_)) {
                    return Err(Error::Config("constant-auto requires the constant family".into()));
                }
                ModelChoice::ConstantAuto
            }
            Some(list) => ModelChoice::Gaps(GapSet::parse(list).map_err(as_config)?),
        };

        let d = StepControl::default();
        let t = &raw.tolerances;
        let step = StepControl {
            max_step: t.max_step.unwrap_or(d.max_step),
            z_scale: t.z_scale.unwrap_or(d.z_scale),
            phase_per_step: t.phase_per_step.unwrap_or(d.phase_per_step),
            horizon: t.horizon.unwrap_or(d.horizon),
        };
        positive(
            "tolerances",
            vec![step.max_step, step.z_scale, step.phase_per_step, step.horizon],
        )?;

        Ok(Self {
            phi,
            zs,
            checkpoints,
            avg_x,
            eps,
            frequency_x_max: raw.averages.frequency_x_max,
            sigma_x,
            sigma_kmax: raw.sigma.kmax,
            sigma_bins: raw.sigma.bins,
            series_x: raw.series.x,
            series_y,
            zeros_x: raw.zeros.x,
            zeros_window: (raw.zeros.window[0], raw.zeros.window[1]),
            zeros_bins: raw.zeros.bins,
            model,
            step,
            output: base.join(raw.output.unwrap_or_else(|| "out".into())),
        })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn build_phi(raw: &RawPhi, base: &Path) -> Result<OperatorData> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Config(format!("phi.{name} is required for family `{}`", raw.family)))
    };
    let values = || -> Result<Vec<Complex64>> {
        raw.values
            .as_ref()
            .map(|v| v.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            .ok_or_else(|| Error::Config(format!("phi.values is required for family `{}`", raw.family)))
    };
    let phi = match raw.family.as_str() {
        "zero" => Ok(OperatorData::zero()),
        "constant" => {
            let c = raw.c.ok_or_else(|| Error::Config("phi.c = [re, im] is required".into()))?;
            OperatorData::constant(Complex64::new(c[0], c[1]))
        }
        "chirp" => OperatorData::chirp(need(raw.alpha, "alpha")?),
        "gated-chirp" => OperatorData::gated_chirp(need(raw.alpha, "alpha")?, need(raw.q, "q")?),
        "periodic" => OperatorData::periodic(need(raw.period, "period")?, values()?),
        "grid" => OperatorData::grid(need(raw.step, "step")?, values()?),
        "samples" => {
            let file = raw
                .file
                .as_ref()
                .ok_or_else(|| Error::Config("phi.file is required for family `samples`".into()))?;
            return OperatorData::from_samples_file(base.join(file)).map_err(|e| match e {
                Error::Io { .. } => e,
                other => as_config(other),
            });
        }
        other => Err(Error::Config(format!("unknown phi family `{other}`"))),
    };
    phi.map_err(as_config)
}

fn rectangle(g: &RawZGrid) -> Result<Vec<Complex64>> {
    if g.n_re == 0 || g.n_im == 0 {
        return Err(Error::Config("z grid counts must be positive".into()));
    }
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let res = axis(g.re[0], g.re[1], g.n_re);
    let ims = axis(g.im[0], g.im[1], g.n_im);
    Ok(ims
        .iter()
        .flat_map(|&im| res.iter().map(move |&re| Complex64::new(re, im)))
        .collect())
}

fn positive(name: &str, v: Vec<f64>) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Config(format!("{name} entries must be positive and finite")));
    }
    Ok(v)
}

fn increasing(name: &str, v: Vec<f64>) -> Result<Vec<f64>> {
    let v = positive(name, v)?;
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("{name} must be strictly increasing")));
    }
    Ok(v)
}

/// `zero`, `constant:C`, `chirp:α`, `gated-chirp:α,q`, `file:PATH`.
pub fn parse_phi(spec: &str) -> Result<OperatorData> {
    let spec = spec.trim();
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = || parse_list(args);
    let phi = match name {
        "zero" => Ok(OperatorData::zero()),
        "constant" => OperatorData::constant(parse_complex(args)?),
        "chirp" => match nums()?.as_slice() {
            [a] => OperatorData::chirp(*a),
            _ => Err(Error::Config("chirp takes one parameter: chirp:ALPHA".into())),
        },
        "gated-chirp" => match nums()?.as_slice() {
            [a, q] => OperatorData::gated_chirp(*a, *q),
            _ => Err(Error::Config("gated-chirp takes two parameters: gated-chirp:ALPHA,Q".into())),
        },
        "file" => {
            return OperatorData::from_samples_file(args).map_err(|e| match e {
                Error::Io { .. } => e,
                other => as_config(other),
            })
        }
        other => Err(Error::Config(format!("unknown phi spec `{other}`"))),
    };
    phi.map_err(as_config)
}

/// `3`, `-1.5`, `2i`, `-i`, `1+2i`, `0.5-1e-3i`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Config(format!("cannot parse complex number `{text}`"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|r| Complex64::new(r, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = 0;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = k;
            break;
        }
    }
    let (re, im) = body.split_at(split);
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    let re = if re.is_empty() { 0.0 } else { re.parse::<f64>().map_err(|_| bad())? };
    Ok(Complex64::new(re, im))
}

/// Comma-separated reals.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("cannot parse number `{s}`"))))
        .collect()
}

/// `(a,b)` or `a,b`.
pub fn parse_interval(text: &str) -> Result<(f64, f64)> {
    let inner = text.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    match parse_list(inner)?.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        _ => Err(Error::Config(format!("`{text}` is not an interval (a,b) with a < b"))),
    }
}
