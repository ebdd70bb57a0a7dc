use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dirac_lab::config::{parse_complex, parse_interval, parse_list, parse_phi, ExperimentConfig};
use dirac_lab::martin::{martin_build, GapSet};
use dirac_lab::output::{fmt_f64, write_file, Cell, Csv};
use dirac_lab::propagation::{GrowthField, StepControl};
use dirac_lab::report::run_report;
use dirac_lab::series::growth_residuals;
use dirac_lab::spectral::sigma_spectrum;
use dirac_lab::weyl::weyl_disks;
use dirac_lab::zeros::zero_count_detail;
use dirac_lab::{Complex64, Error, Result};

/// Numerical laboratory for half-line Dirac operators.
///
/// Exit status: 0 on success, 2 for usage/config/input errors, 3 when a
/// computation could not be resolved numerically.
#[derive(Parser)]
#[command(name = "dirac-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// φ specs: `zero`, `constant:C` (C complex, e.g. `1` or `0.5+1i`),
/// `chirp:ALPHA`, `gated-chirp:ALPHA,Q`, `file:PATH` (columns t, Re φ, Im φ).
#[derive(Subcommand)]
enum Command {
    /// Run the full regularity report described by a TOML config.
    Report {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Growth field h(x, z) = (1/x) log|u₁ − u₂| on a z-list and x checkpoints.
    Propagate {
        #[arg(long)]
        phi: String,
        /// Comma-separated complex points, e.g. "1i,0.5+2i".
        #[arg(long, default_value = "1i,2i,1+1i,-1+1i")]
        z: String,
        /// Comma-separated increasing checkpoints.
        #[arg(long, default_value = "25,50,100,200")]
        x: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weyl disk centers and radii at checkpoints, with nesting margins.
    Disks {
        #[arg(long)]
        phi: String,
        #[arg(long, default_value = "2i")]
        z: String,
        #[arg(long, default_value = "1,2,4,8,16")]
        x: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Binned spectral measure σ_x on [−kmax, kmax].
    Sigma {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 20.0)]
        kmax: f64,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual of the two-term growth law along z = iy.
    SeriesCheck {
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 200.0)]
        x: f64,
        #[arg(long, default_value = "8,16,32,64")]
        y: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Martin function model of E = ℝ minus the given gaps.
    Martin {
        /// Gap list such as "(-1,1) (2,3)", or "free".
        #[arg(long)]
        gaps: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Renormalised Dirichlet eigenvalue counting measure on a window.
    Zeros {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        x: f64,
        /// Interval "(a,b)".
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        #[arg(long, default_value_t = 16)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => write_file(dir, name, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn complex_list(text: &str) -> Result<Vec<Complex64>> {
    text.split(',').map(parse_complex).collect()
}

fn run(cmd: Command) -> Result<()> {
    let ctrl = StepControl::default();
    match cmd {
        Command::Report { config, out } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(dir) = out {
                cfg.output = dir;
            }
            let report = run_report(&cfg)?;
            report.write(&cfg.output)?;
            print!("{}", report.summary());
            eprintln!("artifacts written to {}", cfg.output.display());
        }
        Command::Propagate { phi, z, x, out } => {
            let phi = parse_phi(&phi)?;
            let field = GrowthField::compute(&phi, &complex_list(&z)?, &parse_list(&x)?, &ctrl)?;
            emit(out.as_deref(), "growth.csv", &field.to_csv())?;
        }
        Command::Disks { phi, z, x, out } => {
            let phi = parse_phi(&phi)?;
            let xs = parse_list(&x)?;
            let mut csv = Csv::new(&["re_z", "im_z", "x", "re_center", "im_center", "radius", "nesting_margin"]);
            for z in complex_list(&z)? {
                let disks = weyl_disks(&phi, &xs, z, &ctrl)?;
                for (k, d) in disks.iter().enumerate() {
                    let margin = if k == 0 { f64::NAN } else { disks[k - 1].nesting_margin(d) };
                    csv.row(&[
                        Cell::F(z.re),
                        Cell::F(z.im),
                        Cell::F(xs[k]),
                        Cell::F(d.center.re),
                        Cell::F(d.center.im),
                        Cell::F(d.radius),
                        Cell::F(margin),
                    ]);
                }
            }
            emit(out.as_deref(), "disks.csv", csv.as_str())?;
        }
        Command::Sigma { phi, x, kmax, bins, out } => {
            let phi = parse_phi(&phi)?;
            let h = sigma_spectrum(&phi, x, kmax, bins)?.histogram;
            eprintln!(
                "total mass {} = binned {} + outside window {}",
                fmt_f64(h.total_mass),
                fmt_f64(h.binned_mass()),
                fmt_f64(h.tail_mass)
            );
            emit(out.as_deref(), "sigma.csv", &h.to_csv())?;
        }
        Command::SeriesCheck { phi, x, y, out } => {
            let phi = parse_phi(&phi)?;
            let table = growth_residuals(&phi, x, &parse_list(&y)?, &ctrl)?;
            eprintln!(
                "log-log slope {} (increment over [x/2, x]: {}), fitted C {}",
                fmt_f64(table.slope),
                fmt_f64(table.increment_slope),
                fmt_f64(table.fitted_c)
            );
            emit(out.as_deref(), "series.csv", &table.to_csv())?;
        }
        Command::Martin { gaps, out } => {
            let set = if gaps.trim() == "free" { GapSet::free() } else { GapSet::parse(&gaps)? };
            let model = martin_build(&set)?;
            emit(out.as_deref(), "martin.json", &model.to_json())?;
        }
        Command::Zeros { phi, x, window, bins, out } => {
            let phi = parse_phi(&phi)?;
            let zc = zero_count_detail(&phi, x, parse_interval(&window)?, bins, &ctrl)?;
            let mut csv = Csv::new(&["lo", "hi", "count", "mass"]);
            for ((lo, hi, m), &c) in zc.histogram.bins().zip(&zc.counts) {
                csv.row(&[Cell::F(lo), Cell::F(hi), Cell::I(c as i64), Cell::F(m)]);
            }
            eprintln!(
                "total count {}, mass {}",
                zc.counts.iter().sum::<u64>(),
                fmt_f64(zc.histogram.binned_mass())
            );
            emit(out.as_deref(), "zeros.csv", csv.as_str())?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
