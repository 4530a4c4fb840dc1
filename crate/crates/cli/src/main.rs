//! `kda`: population and sample kernel discriminant analysis experiments.

mod args;
mod commands;
mod error;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kda_core::dataprep::TransformPolicy;
use kda_core::rff::RffVariant;
use kda_core::KernelSpec;
use serde::Serialize;
use serde_json::json;

use args::{GridArg, IntList, List};
use error::CliError;
use output::Format;

#[derive(Debug, Parser, Serialize)]
#[command(name = "kda", version, about = "Kernel discriminant analysis for two classes")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Ridge added to the within-class matrix; each fit has its own default.
    #[arg(long, global = true)]
    pub ridge: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Population fits, lambda curve and grids for a Gaussian scenario.
    Scenario(ScenarioArgs),
    /// Random Fourier feature fits for a Gaussian scenario.
    Rff(RffArgs),
    /// Spam pipeline: transform, PCA, split, moment-space fits and test errors.
    Spam(SpamArgs),
    /// Fit one model and save it as JSON.
    Fit(FitArgs),
    /// Evaluate a saved model on a grid.
    Grid(GridArgs),
    /// Score (and classify, if a threshold is stored) points from a CSV file.
    Score(ScoreArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ScenarioArgs {
    /// Scenario number, 1 or 2.
    pub id: u8,
    /// Homogeneous polynomial degrees.
    #[arg(long, default_value = "1..4")]
    pub poly_homo: IntList,
    /// Inhomogeneous polynomial degrees.
    #[arg(long, default_value = "1..4")]
    pub poly_inhomo: IntList,
    /// Truncation degrees for the Gaussian kernel.
    #[arg(long, default_value = "")]
    pub gauss_n: IntList,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Largest degree of the lambda curve.
    #[arg(long, default_value_t = 10)]
    pub lambda_curve: usize,
    /// Points per class for a sample draw with sample-KDA grids.
    #[arg(long)]
    pub sample_n: Option<usize>,
    #[arg(long, default_value = "linear,inhomo:2,gauss:1")]
    pub sample_kernels: List<KernelSpec>,
    #[arg(long, default_value = "-4,4,101")]
    pub grid: GridArg,
}

#[derive(Debug, Args, Serialize)]
pub struct RffArgs {
    pub id: u8,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Feature counts for the lambda curve; all prefixes of one draw.
    #[arg(long, default_value = "1..40")]
    pub d: IntList,
    /// Feature counts at which grids are written.
    #[arg(long, default_value = "2,10,40")]
    pub grid_d: IntList,
    #[arg(long, default_value = "cos")]
    pub variant: VariantArg,
    #[arg(long, default_value = "-4,4,101")]
    pub grid: GridArg,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(transparent)]
pub struct VariantArg(pub RffVariant);

impl std::str::FromStr for VariantArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(VariantArg).map_err(|e: kda_core::KdaError| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(transparent)]
pub struct PolicyArg(pub TransformPolicy);

impl std::str::FromStr for PolicyArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(PolicyArg).map_err(|e: kda_core::KdaError| e.to_string())
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SpamArgs {
    /// Path to the comma-separated spambase data file.
    pub data: PathBuf,
    #[arg(long, default_value = "1..6")]
    pub degrees: IntList,
    #[arg(long, default_value_t = 0.6)]
    pub train_frac: f64,
    #[arg(long, default_value = "logit-log")]
    pub transform_policy: PolicyArg,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    /// Grid for boundary files; defaults to the range of the scores.
    #[arg(long)]
    pub grid: Option<GridArg>,
    #[arg(long, default_value_t = 201)]
    pub grid_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Population,
    Sample,
    Rff,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value_t = Method::Population)]
    pub method: Method,
    /// Scenario supplying the classes (population and rff) or the draw (sample).
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    /// Labelled points for a sample fit instead of a scenario draw.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "linear")]
    pub kernel: KernelSpec,
    /// Truncation degree for population Gaussian-kernel fits.
    #[arg(long, default_value_t = 10)]
    pub truncation: u32,
    /// Points per class for a sample fit from a scenario.
    #[arg(long, default_value_t = 200)]
    pub sample_n: usize,
    /// Number of random features.
    #[arg(long, default_value_t = 40)]
    pub features: usize,
    #[arg(long, default_value = "cos")]
    pub variant: VariantArg,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "model")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    pub model: PathBuf,
    #[arg(long, default_value = "-4,4,101")]
    pub grid: GridArg,
    #[arg(long, default_value = "grid")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    pub model: PathBuf,
    /// CSV of points with a header row; an optional `label` column holds 1/2.
    pub points: PathBuf,
    #[arg(long, default_value = "scores")]
    pub name: String,
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}

impl Cli {
    pub fn config(&self) -> Result<serde_json::Value, CliError> {
        let mut v = serde_json::to_value(self)?;
        v["version"] = json!(env!("CARGO_PKG_VERSION"));
        Ok(v)
    }
}
