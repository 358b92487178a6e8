//! `scanfuse` — batch pipeline for synthetic scan generation, multiview
//! registration, and surface deviation measurement.
//!
//! Subcommands mirror the pipeline stages: `synth` and `scan` produce
//! data, `preprocess` cleans it, `register` aligns it, `measure` scores
//! it, `eval` runs the benchmark studies, `convert` translates formats,
//! and `pipeline` chains stages from a config file.
//!
//! Exit codes: 0 success, 1 user/config error, 2 runtime failure. Logs go
//! to stderr; data only to files or stdout.

mod commands;
mod pipeline;

use clap::{Parser, Subcommand};
use scanfuse::Error;

#[derive(Parser)]
#[command(name = "scanfuse", version, about = "Point cloud fusion and inspection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic geometry (benchmark shapes, scan targets).
    #[command(subcommand)]
    Synth(commands::synth::SynthCommand),
    /// Ray-cast partial scans of a mesh from Poisson-disc viewpoints.
    Scan(commands::scan::ScanArgs),
    /// Crop and outlier-filter point clouds.
    Preprocess(commands::preprocess::PreprocessArgs),
    /// Align partial scans into a fused cloud.
    Register(commands::register::RegisterArgs),
    /// Measure a distance metric between a query cloud and a reference.
    Measure(commands::measure::MeasureArgs),
    /// Run the registration or metric benchmark studies.
    #[command(subcommand)]
    Eval(commands::eval::EvalCommand),
    /// Convert between geometry file formats.
    Convert(commands::convert::ConvertArgs),
    /// Run a staged pipeline described by a JSON config.
    Pipeline(pipeline::PipelineArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(cmd) => commands::synth::run(cmd),
        Command::Scan(args) => commands::scan::run(args),
        Command::Preprocess(args) => commands::preprocess::run(args),
        Command::Register(args) => commands::register::run(args),
        Command::Measure(args) => commands::measure::run(args),
        Command::Eval(cmd) => commands::eval::run(cmd),
        Command::Convert(args) => commands::convert::run(args),
        Command::Pipeline(args) => pipeline::run(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            let code = if err.is_user_error() { 1 } else { 2 };
            std::process::exit(code);
        }
    }
}

/// Unit of the coordinates in input files; everything internal is meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Unit {
    M,
    Mm,
}

impl Unit {
    /// Scale factor applied on ingest.
    pub fn to_meters(self) -> f64 {
        match self {
            Unit::M => 1.0,
            Unit::Mm => 0.001,
        }
    }
}

pub(crate) fn scale_cloud(cloud: &mut scanfuse::PointCloud, factor: f64) {
    if factor != 1.0 {
        for p in &mut cloud.points {
            p.coords *= factor;
        }
    }
}

pub(crate) fn parse_range(text: &str) -> Result<(f64, f64), Error> {
    let parts: Vec<&str> = text.split([',', ':']).collect();
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "range `{text}` must be lo,hi or lo:hi"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad range bound `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad range bound `{}`", parts[1])))?;
    Ok((lo, hi))
}
