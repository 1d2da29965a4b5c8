use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gicband_core::{
    ate_from_curve, default_grid, direct_band, format_coverage_table, plugin_band, pointwise_band,
    run_coverage, transform_band, transform_band_to_qte, worldbank_band, Band, BandConfig,
    BandMethod, BandScale, GicParams, Kernel, PointwiseApprox, ProbabilityGrid,
};

use crate::config::{parse_methods, parse_scale_policy, SimConfig};
use crate::error::{CliError, CliResult};
use crate::io::{load_samples, parse_cols, LoadedSamples};
use crate::output::{emit_bands, write_file, Format};
use crate::qq::{qq_csv, qq_diagnostic_with, DEFAULT_TAIL_TRIM};

#[derive(Debug, Parser)]
#[command(
    name = "gicband",
    version,
    about = "Confidence bands for quantile ratios, growth incidence curves and quantile treatment effects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build confidence bands from two samples
    Band(BandArgs),
    /// Monte Carlo coverage study from a TOML config
    Simulate(SimulateArgs),
    /// QQ diagnostic for the location-scale assumption
    Qq(QqArgs),
    /// Average treatment effect integrated from the quantile curves
    Ate(AteArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// One CSV with two columns, or two CSVs with one column each
    #[arg(long, required = true, num_args = 1..=2, action = clap::ArgAction::Append)]
    input: Vec<PathBuf>,
    /// Column selectors `first,second` (header names or 1-based positions)
    #[arg(long)]
    cols: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Log,
    Ratio,
    Gic,
    Qte,
}

impl From<ScaleArg> for BandScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Log => BandScale::LogQte,
            ScaleArg::Ratio => BandScale::Ratio,
            ScaleArg::Gic => BandScale::Gic,
            ScaleArg::Qte => BandScale::Qte,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Epanechnikov,
    Uniform,
}

#[derive(Debug, Args)]
struct BandArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Nominal coverage 1 - alpha
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// plugin, direct, pointwise, worldbank or all
    #[arg(long, default_value = "direct")]
    method: String,
    #[arg(long, value_enum, default_value = "gic")]
    scale: ScaleArg,
    /// Annualisation exponent m = 1/(t2 - t1) in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Number of equidistant grid points before trimming
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// location_scale, estimate_cs or fixed:<s>
    #[arg(long, default_value = "location_scale")]
    scale_policy: String,
    /// Seed of the bootstrap baseline
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    bootstrap_reps: usize,
    /// Normal instead of log-normal point-wise intervals
    #[arg(long)]
    pointwise_normal: bool,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    kernel: KernelArg,
    /// Output file; with several methods one file per method is written
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the number of replicates
    #[arg(long)]
    reps: Option<usize>,
    /// Override the seed
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report file; the text table always goes to standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QqArgs {
    #[command(flatten)]
    input: InputArgs,
    /// R^2 above which the location-scale model is flagged plausible
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct AteArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of equidistant integration points
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Band(a) => band(a),
        Command::Simulate(a) => simulate(a),
        Command::Qq(a) => qq(a),
        Command::Ate(a) => ate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(input: &InputArgs) -> CliResult<LoadedSamples> {
    let cols = input.cols.as_deref().map(parse_cols).transpose()?;
    let loaded = load_samples(&input.input, cols.as_ref())?;
    if loaded.total_skipped() > 0 {
        eprintln!(
            "skipped {} blank cell(s) (sample 1: {}, sample 2: {})",
            loaded.total_skipped(),
            loaded.skipped[0],
            loaded.skipped[1]
        );
    }
    Ok(loaded)
}

fn check_grid(len: usize) -> CliResult<()> {
    if len < 10 {
        return Err(CliError::Input(format!("--grid {len} is below the minimum of 10")));
    }
    Ok(())
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn band(a: BandArgs) -> CliResult<()> {
    check_grid(a.grid)?;
    let m = GicParams::new(a.m)?;
    let methods = parse_methods(&a.method)?;
    let cfg = BandConfig {
        level: a.level,
        kernel: match a.kernel {
            KernelArg::Epanechnikov => Kernel::Epanechnikov,
            KernelArg::Uniform => Kernel::Uniform,
        },
        scale_policy: parse_scale_policy(&a.scale_policy)?,
        bootstrap_reps: a.bootstrap_reps,
        pointwise: if a.pointwise_normal {
            PointwiseApprox::Normal
        } else {
            PointwiseApprox::LogNormal
        },
        ..BandConfig::default()
    };
    let data = load(&a.input)?;
    let (s1, s2) = (&data.s1, &data.s2);
    let target = BandScale::from(a.scale);

    let mut bands: Vec<Band> = Vec::new();
    for method in methods {
        let grid = default_grid(method, s1.n(), s2.n(), cfg.rates, a.grid)?;
        let band = match method {
            BandMethod::Plugin => plugin_band(s1, s2, &grid, &cfg)?,
            BandMethod::Direct => direct_band(s1, s2, &grid, &cfg)?,
            BandMethod::PointwiseLognormal | BandMethod::PointwiseNormal => {
                pointwise_band(s1, s2, &grid, &cfg, m)?
            }
            BandMethod::WorldbankBootstrap => worldbank_band(s1, s2, &grid, &cfg, m, a.seed)?,
        };
        let band = match target {
            BandScale::Qte => transform_band_to_qte(&band, s1)?,
            other => transform_band(&band, other, m)?,
        };
        for w in &band.warnings {
            eprintln!("{}: {w}", band.method.as_str());
        }
        let d = &band.details;
        if let (Some(s), Some(cs)) = (d.scale_s, d.cs) {
            eprintln!("{}: s = {s:.6}, c_s = {cs:.6}", band.method.as_str());
        }
        bands.push(band);
    }
    if let Some(text) = emit_bands(&bands, a.format, a.out.as_deref())? {
        print!("{text}");
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut config = SimConfig::load(&a.config)?;
    if let Some(r) = a.reps {
        config.reps = r;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let methods = config.methods()?;
    let cfg = config.band_config()?;
    let mut reports = Vec::new();
    for setting in config.settings()? {
        let report = run_coverage(&setting, &methods, &cfg)?;
        for m in &report.methods {
            if let Some(e) = &m.first_error {
                eprintln!(
                    "{} n={} {}: {} failed replicate(s), first: {e}",
                    report.setting,
                    report.n,
                    m.method.as_str(),
                    m.failures
                );
            }
        }
        reports.push(report);
    }
    print!("{}", format_coverage_table(&reports));
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&reports)
            .map_err(|e| CliError::Numerical(format!("cannot serialize report: {e}")))?;
        write_file(out, &(json + "\n"))?;
    }
    Ok(())
}

fn qq(a: QqArgs) -> CliResult<()> {
    let data = load(&a.input)?;
    let d = qq_diagnostic_with(&data.s1, &data.s2, a.threshold, DEFAULT_TAIL_TRIM)?;
    eprintln!(
        "cross-sample QQ R^2 = {:.6} (threshold {}): location_scale_plausible = {}",
        d.r_squared, d.r_squared_threshold, d.location_scale_plausible
    );
    let text = match a.format {
        Format::Json => {
            serde_json::to_string_pretty(&d)
                .map_err(|e| CliError::Numerical(format!("cannot serialize QQ data: {e}")))?
                + "\n"
        }
        Format::Csv => qq_csv(&d),
    };
    write_or_print(a.out.as_ref(), &text)
}

fn ate(a: AteArgs) -> CliResult<()> {
    check_grid(a.grid)?;
    let data = load(&a.input)?;
    let grid = ProbabilityGrid::equidistant(a.grid)?;
    let value = ate_from_curve(&data.s1, &data.s2, &grid)?;
    let json = serde_json::json!({
        "ate": value,
        "grid": a.grid,
        "n1": data.s1.n(),
        "n2": data.s2.n(),
    });
    write_or_print(a.out.as_ref(), &format!("{json:#}\n"))
}
