//! `wicksell`: simulate Plummer samples, estimate and smooth `Ψ`, and run
//! the Monte Carlo experiments.
//!
//! Exit status is 0 on success, 2 for usage errors, 3 for bad input data,
//! 4 for numerical failures and 5 for I/O failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use wicksell::experiments::{self, linear_grid, replication_rng, ExperimentConfig, ExperimentReport};
use wicksell::formats::{read_observations, write_curve, write_json, write_pairs, write_steps, write_triples};
use wicksell::kernel::kernel_by_name;
use wicksell::lcm::isotonic_psi;
use wicksell::smooth::{SmoothCurve, SourceKind};
use wicksell::{least_concave_majorant, ErrorClass, KernelSpec, NaiveCurve, PlummerModel, SmoothSource};

#[derive(Debug, Error)]
enum CliError {
    #[error("invalid value for {flag}: {reason}")]
    Usage { flag: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] wicksell::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let class = match self {
            CliError::Usage { .. } => ErrorClass::Usage,
            CliError::Core(e) => e.class(),
        };
        match class {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
            ErrorClass::Io => 5,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "wicksell", version, about = "Isotonic estimation for Wicksell-type problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a Plummer-model sample.
    Simulate {
        #[arg(long, default_value_t = 200.0, value_parser = positive)]
        beta: f64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SampleFormat::Pairs)]
        format: SampleFormat,
    },
    /// Evaluate the naive or isotonic estimate of Ψ on a grid.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Isotonic)]
        mode: Mode,
        /// `t0:t1:m`, m evenly spaced points.
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
        #[arg(long)]
        out: PathBuf,
        /// Breakpoints and levels of the isotonic estimate; defaults to
        /// the output path with extension `.steps.csv`.
        #[arg(long)]
        steps_out: Option<PathBuf>,
    },
    /// Kernel-smoothed Ψ or its derivative on a grid.
    Smooth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Isotonic)]
        source: Mode,
        #[arg(long, value_parser = positive)]
        bandwidth: f64,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        derivative: u8,
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
        #[arg(long)]
        out: PathBuf,
        /// triweight, biweight or raised-cosine.
        #[arg(long, default_value = "triweight")]
        kernel: String,
    },
    /// Run a seeded Monte Carlo experiment from a JSON config.
    Experiment {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        config: PathBuf,
        /// Report path, or the output directory for `figures`; defaults to
        /// the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SampleFormat {
    Pairs,
    Triples,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Naive,
    Isotonic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    KwRate,
    LocalGap,
    Clt,
    CltNaive,
    CltIsotonic,
    Figures,
    DerivativeGap,
    Smoothing,
}

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be positive and finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, m] = parts[..] else {
        return Err("expected t0:t1:m".into());
    };
    let num = |v: &str| match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{v}` is not a finite number")),
    };
    let (t0, t1) = (num(a)?, num(b)?);
    let m: usize = m.trim().parse().map_err(|_| format!("`{m}` is not a point count"))?;
    if m == 0 {
        return Err("empty grid (m = 0)".into());
    }
    if t1 < t0 || (m > 1 && t1 == t0) {
        return Err("need t0 < t1".into());
    }
    Ok(Grid(linear_grid(t0, t1, m)))
}

fn simulate(beta: f64, n: u64, seed: u64, out: &Path, format: SampleFormat) -> CliResult<()> {
    let n = n as usize;
    let model = PlummerModel::new(beta)?;
    let sample = model.sample(n, &mut replication_rng(seed, n, 0))?;
    match format {
        SampleFormat::Pairs => write_pairs(out, &sample.observations)?,
        SampleFormat::Triples => write_triples(out, &sample.triples().collect::<Vec<_>>())?,
    }
    Ok(())
}

fn estimate(input: &Path, mode: Mode, grid: &Grid, out: &Path, steps_out: Option<PathBuf>) -> CliResult<()> {
    let (set, _) = read_observations(input)?;
    let curve = NaiveCurve::new(set);
    match mode {
        Mode::Naive => write_curve(out, &grid.0, &curve.psi_grid(&grid.0))?,
        Mode::Isotonic => {
            let steps = isotonic_psi(&least_concave_majorant(&curve));
            let values: Vec<f64> = grid.0.iter().map(|&t| steps.value(t)).collect();
            write_curve(out, &grid.0, &values)?;
            write_steps(steps_out.unwrap_or_else(|| out.with_extension("steps.csv")), &steps)?;
        }
    }
    Ok(())
}

fn smooth_cmd(input: &Path, source: Mode, bandwidth: f64, order: u8, grid: &Grid, out: &Path, kernel: &str) -> CliResult<()> {
    let k = kernel_by_name(kernel).map_err(|e| CliError::Usage {
        flag: "--kernel",
        reason: e.to_string(),
    })?;
    let spec = KernelSpec::new(k, bandwidth)?;
    let (set, _) = read_observations(input)?;
    let kind = match source {
        Mode::Naive => SourceKind::Naive,
        Mode::Isotonic => SourceKind::Isotonic,
    };
    let src = SmoothSource::from_sample(set, kind)?;
    let curve = SmoothCurve::evaluate(&src, &spec, order, &grid.0)?;
    write_curve(out, &curve.grid, &curve.values)?;
    Ok(())
}

fn experiment(kind: Kind, config: &Path, out: Option<PathBuf>) -> CliResult<()> {
    if !config.is_file() {
        return Err(CliError::Usage {
            flag: "--config",
            reason: format!("{} is not a readable file", config.display()),
        });
    }
    let cfg = ExperimentConfig::load(config)?;
    let out = out.or_else(|| cfg.output.clone()).ok_or(CliError::Usage {
        flag: "--out",
        reason: "no output path given and the config has no `output`".into(),
    })?;
    let report: ExperimentReport = match kind {
        Kind::Figures => {
            let files = experiments::figure_reproduction(&cfg, &out)?;
            for p in &files.paths {
                println!("{}", p.display());
            }
            return Ok(());
        }
        Kind::KwRate => experiments::kw_rate(&cfg)?,
        Kind::LocalGap => experiments::local_gap(&cfg)?,
        Kind::Clt => experiments::clt(&cfg)?,
        Kind::CltNaive => experiments::clt_naive(&cfg)?,
        Kind::CltIsotonic => experiments::clt_isotonic(&cfg)?,
        Kind::DerivativeGap => experiments::derivative_gap(&cfg)?,
        Kind::Smoothing => experiments::smoothing_mse(&cfg)?,
    };
    write_json(&out, &report)?;
    for p in &report.per_n {
        println!("n={} median={:.6e} q10={:.6e} q90={:.6e}", p.n, p.median, p.q10, p.q90);
    }
    if let Some(slope) = report.slope {
        println!("slope={slope:.4}");
    }
    for flag in &report.flags {
        println!("flag: {flag}");
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { beta, n, seed, out, format } => simulate(beta, n, seed, &out, format),
        Command::Estimate { input, mode, grid, out, steps_out } => estimate(&input, mode, &grid, &out, steps_out),
        Command::Smooth { input, source, bandwidth, derivative, grid, out, kernel } => {
            smooth_cmd(&input, source, bandwidth, derivative, &grid, &out, &kernel)
        }
        Command::Experiment { kind, config, out } => experiment(kind, &config, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
