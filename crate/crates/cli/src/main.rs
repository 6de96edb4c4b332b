//! `spokesense`: file-based terrain recognition pipeline.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spokesense::signal::BandSpec;

#[derive(Parser, Debug)]
#[command(name = "spokesense", version, about = "Terrain recognition from three-channel spoke vibration records")]
struct Cli {
    /// Directory that receives every output file (created if missing)
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Seed for every random choice; falls back to SPOKESENSE_SEED
    #[arg(long, global = true, env = "SPOKESENSE_SEED", default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic vibration records as dataset CSV files (<out>/<profile>.csv)
    Simulate(SimulateArgs),
    /// Extract per-window features from dataset CSV files into <out>/features.csv
    Extract(ExtractArgs),
    /// Train a one-vs-one SVM on a labeled feature CSV and write <out>/model.json
    Train(TrainArgs),
    /// Run repeated stratified hold-out trials and write <out>/confusion.csv
    Evaluate(EvaluateArgs),
    /// Predict the terrain of every window of a record and write <out>/predictions.csv
    Classify(ClassifyArgs),
    /// Rank an unknown terrain against a labeled library and write <out>/distances.csv
    Identify(IdentifyArgs),
    /// Write the magnitude spectrum of one channel to <out>/spectrum_ch<k>.csv
    Spectrum(SpectrumArgs),
    /// Write per-window covariance eigenvalues to <out>/eigen.csv
    Eigen(EigenArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Builtin profile name, or `all` for every builtin
    #[arg(long, required_unless_present = "profile_file", conflicts_with = "profile_file")]
    profile: Option<String>,
    /// Profile JSON file instead of a builtin
    #[arg(long)]
    profile_file: Option<PathBuf>,
    /// Record length in seconds
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    duration: f64,
    /// Sample rate in Hz
    #[arg(long, default_value_t = 1440.0, value_parser = positive)]
    rate: f64,
}

#[derive(Args, Debug, Clone)]
struct WindowArgs {
    /// Analysis window length in seconds
    #[arg(long, default_value_t = 1.5, value_parser = positive)]
    window_seconds: f64,
    /// Fractional overlap of consecutive windows, in [0, 1)
    #[arg(long, default_value_t = 0.5, value_parser = overlap)]
    overlap: f64,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Dataset CSV files; each file's `# label=` (or its file stem) labels its windows
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Bands for channels 1-3 as lo:hi,lo:hi,lo:hi in Hz
    #[arg(long, default_value = "1:50,100:400,400:700", value_parser = bands)]
    bands: [BandSpec; 3],
    /// Histogram bins of the entropy feature
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(2..=4096))]
    entropy_bins: u32,
    /// Append the four position-specific features (22 columns instead of 18)
    #[arg(long)]
    extras: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Args, Debug, Clone)]
struct SvmArgs {
    /// SVM kernel
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    kernel: KernelArg,
    /// Soft-margin penalty C
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    c: f64,
    /// RBF width; by default 1 / (d * median squared distance of up to 256 rows)
    #[arg(long, value_parser = positive)]
    gamma: Option<f64>,
    /// KKT tolerance of the solver
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    tol: f64,
    /// Solver budget in units of max(n, 1000) pair updates
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    max_passes: u32,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Labeled feature CSV
    features: PathBuf,
    #[command(flatten)]
    svm: SvmArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Labeled feature CSV
    features: PathBuf,
    /// Number of hold-out trials
    #[arg(long, default_value_t = 120, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    /// Share of each class held out per trial, in (0, 1)
    #[arg(long, default_value_t = 0.2, value_parser = open_fraction)]
    test_fraction: f64,
    #[command(flatten)]
    svm: SvmArgs,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Model JSON written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV, or a feature CSV with the model's layout
    input: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    /// Labeled feature CSV of the known terrains
    #[arg(long)]
    library: PathBuf,
    /// Unknown terrain: dataset CSV, or feature CSV with the library's layout
    #[arg(long)]
    unknown: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    /// Covariance regularization, as a multiple of trace(S)/d
    #[arg(long, default_value_t = 1e-6, value_parser = non_negative)]
    epsilon_scale: f64,
    /// Measure distances on raw features instead of standardized ones
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Dataset CSV
    input: PathBuf,
    /// Channel to transform (1-3)
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    channel: u8,
}

#[derive(Args, Debug)]
struct EigenArgs {
    /// Dataset CSV files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be non-negative, got {v}"))
    }
}

fn overlap(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1), got {v}"))
    }
}

fn open_fraction(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

fn bands(s: &str) -> Result<[BandSpec; 3], String> {
    let parsed: Vec<BandSpec> = s
        .split(',')
        .map(|b| b.parse::<BandSpec>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let arr: [BandSpec; 3] = parsed
        .try_into()
        .map_err(|v: Vec<BandSpec>| format!("expected three bands, got {}", v.len()))?;
    for b in &arr {
        b.check_shape().map_err(|e| e.to_string())?;
    }
    Ok(arr)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn band_lists() {
        let b = bands("1:50,100:400,400:700").unwrap();
        assert_eq!(b[1], BandSpec::new(100.0, 400.0));
        assert!(bands("1:50,100:400").is_err());
        assert!(bands("1:50,100:400,700:400").is_err());
        assert!(bands("1:50,x:400,400:700").is_err());
    }

    #[test]
    fn ranges() {
        assert!(overlap("0").is_ok() && overlap("1").is_err() && overlap("-0.1").is_err());
        assert!(open_fraction("0.5").is_ok() && open_fraction("1").is_err());
        assert!(positive("inf").is_err() && positive("0").is_err());
        assert!(non_negative("0").is_ok());
    }
}
