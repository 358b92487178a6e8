//! `convert` — lossless(ish) translation between geometry formats.
//!
//! Clouds: ply <-> ply (format/precision change). Meshes: obj <-> stl.
//! Poses: json -> json (re-serialization). Cloud/mesh conversions are
//! rejected: there is no surface in a cloud.

use std::path::PathBuf;

use clap::Args;
use scanfuse::io::{
    extension, read_mesh, read_ply, read_poses, write_mesh, write_ply, write_poses, PlyFormat,
    PlyPrecision,
};
use scanfuse::{Error, Result};

#[derive(Args)]
pub struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
    /// PLY output format.
    #[arg(long, value_enum, default_value_t = PlyFormatCli::Binary)]
    ply_format: PlyFormatCli,
    /// Write 32-bit float coordinates instead of 64-bit.
    #[arg(long)]
    f32: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum PlyFormatCli {
    Ascii,
    Binary,
}

pub fn run(args: ConvertArgs) -> Result<()> {
    let from = extension(&args.input)?;
    let to = extension(&args.output)?;
    match (from.as_str(), to.as_str()) {
        ("ply", "ply") => {
            let cloud = read_ply(&args.input)?;
            let format = match args.ply_format {
                PlyFormatCli::Ascii => PlyFormat::Ascii,
                PlyFormatCli::Binary => PlyFormat::BinaryLittleEndian,
            };
            let precision = if args.f32 {
                PlyPrecision::Float32
            } else {
                PlyPrecision::Float64
            };
            write_ply(&args.output, &cloud, format, precision, None)?;
        }
        ("obj" | "stl", "obj" | "stl") => {
            let mesh = read_mesh(&args.input)?;
            write_mesh(&args.output, &mesh)?;
        }
        ("json", "json") => {
            let poses = read_poses(&args.input)?;
            write_poses(&args.output, &poses)?;
        }
        (from, to) => {
            return Err(Error::InvalidParameter(format!(
                "cannot convert `.{from}` to `.{to}`"
            )));
        }
    }
    eprintln!("converted {} -> {}", args.input.display(), args.output.display());
    Ok(())
}
