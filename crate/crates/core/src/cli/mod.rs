//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 bad input data, 3 runtime failure.

mod commands;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ngash",
    version,
    about = "Neural precomputed radiance transfer with CGA motor inputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the transfer oracle on a mesh.
    Precompute(PrecomputeArgs),
    /// Project an equirectangular HDR probe onto 9 SH coefficients.
    ProjectLight(ProjectLightArgs),
    /// Rotate SH light coefficients by a unit quaternion.
    RotateLight(RotateLightArgs),
    /// Generate oracle coefficients for every mesh in a directory.
    Dataset(DatasetArgs),
    /// Train the network on a dataset manifest.
    Train(TrainArgs),
    /// Predict transfer coefficients for a mesh.
    Predict(PredictArgs),
    /// Shade vertices from transfer and light coefficients.
    Shade(ShadeArgs),
    /// Compare oracle and network on one mesh.
    Bench(BenchArgs),
    /// Write the JSON bundle read by the viewer.
    ExportBundle(ExportBundleArgs),
    /// Serve a bundle and the viewer over HTTP.
    Serve(ServeArgs),
    /// Write a procedural test mesh.
    MakeMesh(MakeMeshArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Sphere,
    Hemisphere,
}

impl From<ModeArg> for ngash::sh::SampleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sphere => ngash::sh::SampleMode::Sphere,
            ModeArg::Hemisphere => ngash::sh::SampleMode::Hemisphere,
        }
    }
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Samples per axis; the oracle uses samples² directions.
    #[arg(long = "samples", default_value_t = 5)]
    sqrt_n: usize,
    #[arg(long, value_enum, default_value = "sphere")]
    mode: ModeArg,
    /// Trace visibility rays against the mesh.
    #[arg(long)]
    shadowed: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform albedo `r,g,b`, replacing any per-vertex colours.
    #[arg(long, value_parser = parse_rgb)]
    albedo: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
struct PrecomputeArgs {
    mesh: PathBuf,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProjectLightArgs {
    hdr: PathBuf,
    /// Samples per axis.
    #[arg(long = "samples", default_value_t = 100)]
    sqrt_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RotateLightArgs {
    coeffs: PathBuf,
    /// Unit quaternion `w x y z`.
    #[arg(long, num_args = 4, value_names = ["W", "X", "Y", "Z"], allow_negative_numbers = true, required = true)]
    quat: Vec<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    mesh_dir: PathBuf,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long, default_value_t = 0.9)]
    split_fraction: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    manifest: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long = "lr", default_value_t = 1e-3)]
    learning_rate: f64,
    /// Seeds initialisation, shuffling and dropout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides the split fraction recorded in the manifest.
    #[arg(long)]
    split_fraction: Option<f64>,
    /// Overrides the split seed recorded in the manifest.
    #[arg(long)]
    split_seed: Option<u64>,
    /// Hidden widths, e.g. `1024,512,256,128`.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Dropout per hidden layer, e.g. `0.3,0.2,0.1,0.05`.
    #[arg(long, value_delimiter = ',')]
    dropout: Option<Vec<f64>>,
    /// Print progress every this many epochs (0 for none).
    #[arg(long, default_value_t = 10)]
    log_every: usize,
    /// Final weights go here; best-validation weights go to `<out>/best`.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    weights: PathBuf,
    mesh: PathBuf,
    /// Oracle coefficients to report the error against.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ShadeArgs {
    coeffs: PathBuf,
    light: PathBuf,
    #[arg(long, default_value_t = 255.0)]
    intensity: f64,
    #[arg(long, default_value_t = 255.0)]
    divisor: f64,
    /// Per-vertex colour table.
    #[arg(long, short, required_unless_present = "ppm")]
    out: Option<PathBuf>,
    /// Preview image; needs `--mesh`.
    #[arg(long, requires = "mesh")]
    ppm: Option<PathBuf>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    mesh: PathBuf,
    weights: PathBuf,
    /// Defaults to the sampling the weights were trained on.
    #[arg(long = "samples")]
    sqrt_n: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, conflicts_with = "unshadowed")]
    shadowed: bool,
    #[arg(long)]
    unshadowed: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report path.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportBundleArgs {
    mesh: PathBuf,
    /// Transfer coefficients; predicted from `--weights` when absent.
    #[arg(long, required_unless_present = "weights")]
    coeffs: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// `name=path` or `path` (named after the file stem). Repeatable.
    #[arg(long = "light", required = true)]
    lights: Vec<String>,
    #[arg(long, default_value_t = 255.0)]
    intensity: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    bundle: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory with the built viewer; a placeholder page is served otherwise.
    #[arg(long)]
    assets: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Shape {
    Torus,
    Sphere,
    Cube,
    Plane,
}

#[derive(Debug, Args)]
struct MakeMeshArgs {
    #[arg(value_enum)]
    shape: Shape,
    /// Torus rings / sphere stacks / plane cells.
    #[arg(long, default_value_t = 24)]
    rings: usize,
    /// Torus sides / sphere slices.
    #[arg(long, default_value_t = 28)]
    sides: usize,
    /// Torus major radius, sphere radius, cube or plane half-size.
    #[arg(long, default_value_t = 1.0)]
    size: f64,
    #[arg(long, default_value_t = 0.3)]
    minor: f64,
    #[arg(long, short)]
    out: PathBuf,
}

fn parse_rgb(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [r, g, b] if parts.iter().all(|v| v.is_finite() && *v >= 0.0) => Ok([r, g, b]),
        _ => Err("expected three non-negative numbers `r,g,b`".into()),
    }
}

/// Bad flag values that clap cannot check on its own.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Work finished but some inputs were rejected.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct PartialFailure(pub String);

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if e.downcast_ref::<PartialFailure>().is_some() {
        return 2;
    }
    match e.downcast_ref::<ngash::Error>() {
        Some(err) if err.is_data_error() => 2,
        Some(ngash::Error::Contract(_)) => 1,
        _ => 3,
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Precompute(a) => commands::precompute(a),
        Command::ProjectLight(a) => commands::project_light(a),
        Command::RotateLight(a) => commands::rotate_light(a),
        Command::Dataset(a) => commands::dataset(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Shade(a) => commands::shade(a),
        Command::Bench(a) => commands::bench(a),
        Command::ExportBundle(a) => commands::export_bundle(a),
        Command::Serve(a) => serve::serve(a),
        Command::MakeMesh(a) => commands::make_mesh(a),
    }
}
