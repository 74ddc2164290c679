//! `helmab`: experiment driver for the adapted-bubble Helmholtz solver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helmab_core::assembly::PlaneWaveConvention;
use helmab_core::bubble::BubbleError;
use helmab_core::fdstencil::{StencilError, StencilScheme};
use helmab_core::mu_table::MuTableError;
use helmab_core::verify::{Preset, SampleSet, SweepMethod};
use helmab_core::{Error, Method};

use crate::config::{ConfigError, FileConfig};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_OUT_OF_CALIBRATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "helmab", version, about = "Adapted-bubble finite elements for the Helmholtz equation")]
#[command(after_help = "Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 out-of-calibration.")]
pub struct Cli {
    /// Flat JSON config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one preset problem; writes solution.vtk and summary.json.
    Solve(SolveArgs),
    /// Pollution sweep over wave numbers, methods and angles; writes CSV.
    Sweep(SweepArgs),
    /// Truncation coefficients C1/C2 of a seven-point scheme over a ch grid; writes CSV.
    Coeffs(CoeffsArgs),
    /// Look up or dump the effective mu table.
    Table(TableArgs),
    /// Generate, validate or export a mesh.
    Mesh(MeshArgs),
}

/// Options shared by commands that set up a boundary value problem.
#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// dirichlet-planewave | neumann-strip | robin-source | lshape | lshape-quad | scatterer
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Wave number.
    #[arg(long)]
    pub c: Option<f64>,
    /// Target c·h of the mesh.
    #[arg(long)]
    pub ch: Option<f64>,
    /// Plane-wave angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Plane-wave form: sin-cos is sin(c(x sinθ + y cosθ)), cos-sin swaps them.
    #[arg(long)]
    pub convention: Option<PlaneWaveConvention>,
    /// Fixed bubble sub-mesh resolution instead of the table's.
    #[arg(long = "n-s")]
    pub n_s: Option<usize>,
    /// Clamp mu above the calibrated range instead of failing.
    #[arg(long)]
    pub clamp_mu: bool,
    /// Replacement triangle mu table.
    #[arg(long, value_name = "FILE")]
    pub mu_table_tri: Option<PathBuf>,
    /// Replacement quadrilateral mu table.
    #[arg(long, value_name = "FILE")]
    pub mu_table_quad: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// galerkin | rfb | ab
    #[arg(long)]
    pub method: Option<Method>,
    /// Solve on this mesh file instead of the preset's mesh.
    #[arg(long, value_name = "FILE")]
    pub mesh: Option<PathBuf>,
    /// Error sample points: nodes | nodes-and-centroids
    #[arg(long, value_parser = parse_samples)]
    pub samples: Option<SampleSet>,
    /// Compare against a Galerkin reference solve at this c·h (presets
    /// without an exact solution).
    #[arg(long)]
    pub ch_ref: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated methods, e.g. galerkin,rfb,ab,fd-pseudo-ab(6.8),fd-fourth-order
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<SweepMethod>>,
    /// Comma-separated wave numbers.
    #[arg(long, value_delimiter = ',')]
    pub c_list: Option<Vec<f64>>,
    /// Comma-separated angles in radians.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thetas: Option<Vec<f64>>,
    /// Equally spaced angles in [0, π] (used when --thetas is absent).
    #[arg(long)]
    pub n_theta: Option<usize>,
    /// Fill the timing columns (output is then not reproducible).
    #[arg(long)]
    pub timings: bool,
    /// CSV output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// galerkin | pseudo-rfb | pseudo-ab(MU) | fourth-order
    #[arg(long)]
    pub scheme: Option<StencilScheme>,
    /// Plane-wave angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub ch_min: Option<f64>,
    #[arg(long)]
    pub ch_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub n_ch: Option<usize>,
    /// normalized | printed (printed needs --c)
    #[arg(long)]
    pub form: Option<String>,
    /// Wave number for the printed form.
    #[arg(long)]
    pub c: Option<f64>,
    /// CSV output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// tri | quad
    #[arg(long)]
    pub kind: Option<String>,
    /// Lookup key (c·m for triangles, c·h for quads); dumps the table when absent.
    #[arg(long)]
    pub key: Option<f64>,
    /// Table file to use instead of the built-in one.
    #[arg(long, value_name = "FILE")]
    pub mu_table: Option<PathBuf>,
    /// Clamp keys above the calibrated range.
    #[arg(long)]
    pub clamp_mu: bool,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub ch: Option<f64>,
    /// Validate and inspect this mesh file instead of generating one.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Write the mesh in the native text format.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write the mesh as VTK.
    #[arg(long, value_name = "FILE")]
    pub vtk: Option<PathBuf>,
}

fn parse_samples(s: &str) -> Result<SampleSet, String> {
    match s {
        "nodes" => Ok(SampleSet::Nodes),
        "nodes-and-centroids" => Ok(SampleSet::NodesAndCentroids),
        _ => Err(format!("unknown sample set `{s}` (nodes|nodes-and-centroids)")),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<std::io::Error>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            if e.is_out_of_calibration() {
                return EXIT_OUT_OF_CALIBRATION;
            }
            return match e {
                Error::Mesh(_) | Error::InvalidProblem(_) | Error::TooLarge { .. } => EXIT_CONFIG,
                Error::MuTable(m) => mu_table_code(m),
                Error::Bubble(BubbleError::TooCoarse(_)) => EXIT_CONFIG,
                Error::Stencil(StencilError::InvalidParameter(_)) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            };
        }
        if let Some(m) = cause.downcast_ref::<MuTableError>() {
            return mu_table_code(m);
        }
        if cause.is::<helmab_core::mesh::MeshError>() {
            return EXIT_CONFIG;
        }
    }
    EXIT_NUMERICAL
}

fn mu_table_code(e: &MuTableError) -> u8 {
    match e {
        MuTableError::OutOfCalibration { .. } => EXIT_OUT_OF_CALIBRATION,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = config::pick(cli.threads, &file.threads) {
        if n == 0 {
            return Err(ConfigError("`threads` must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Solve(a) => commands::solve(a, &file),
        Command::Sweep(a) => commands::sweep(a, &file),
        Command::Coeffs(a) => commands::coeffs(a, &file),
        Command::Table(a) => commands::table(a, &file),
        Command::Mesh(a) => commands::mesh(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
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
    fn exit_codes() {
        let cal: anyhow::Error = Error::MuTable(MuTableError::OutOfCalibration {
            key: 4.0,
            max_key: 3.6,
            clamped_mu: 1.0,
            n_s: 10,
        })
        .into();
        assert_eq!(exit_code(&cal), EXIT_OUT_OF_CALIBRATION);
        let cfg: anyhow::Error = ConfigError("x".into()).into();
        assert_eq!(exit_code(&cfg.context("while loading")), EXIT_CONFIG);
        let num: anyhow::Error = Error::Stencil(StencilError::Resonance { ch: 1.0 }).into();
        assert_eq!(exit_code(&num), EXIT_NUMERICAL);
    }
}
