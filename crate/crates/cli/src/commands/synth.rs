//! `synth shape` and `synth object`.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use scanfuse::io::{write_mesh, write_ply, PlyFormat, PlyPrecision};
use scanfuse::synth::{
    inspection_target, make_metric_pair, PerturbationSpec, ShapeKind,
};
use scanfuse::{Error, Result};

#[derive(Subcommand)]
pub enum SynthCommand {
    /// Benchmark shape fixture: reference.ply, test.ply (offset +0.5 m in
    /// z with optional perturbations), meta.json.
    Shape(ShapeArgs),
    /// Closed blobby scan target with thin ear fins, written as a mesh.
    Object(ObjectArgs),
}

#[derive(Args)]
pub struct ShapeArgs {
    /// plane | slope | sine-wave | triangular-wave
    #[arg(long, value_enum)]
    kind: ShapeCli,
    /// Gaussian noise standard deviation per coordinate (m).
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    /// Hole radius around the x,y-centroid (m).
    #[arg(long, default_value_t = 0.0)]
    hole_radius: f64,
    /// Density control: 0 keeps all points, 1 keeps none.
    #[arg(long, default_value_t = 0.0)]
    sampling_factor: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Write ASCII PLY instead of binary.
    #[arg(long)]
    ascii: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ShapeCli {
    Plane,
    Slope,
    SineWave,
    TriangularWave,
}

impl From<ShapeCli> for ShapeKind {
    fn from(value: ShapeCli) -> Self {
        match value {
            ShapeCli::Plane => ShapeKind::Plane,
            ShapeCli::Slope => ShapeKind::Slope,
            ShapeCli::SineWave => ShapeKind::SineWave,
            ShapeCli::TriangularWave => ShapeKind::TriangularWave,
        }
    }
}

#[derive(Args)]
pub struct ObjectArgs {
    #[arg(long, default_value_t = 48)]
    rings: usize,
    #[arg(long, default_value_t = 96)]
    sectors: usize,
    /// Output mesh path (.obj or .stl).
    #[arg(long)]
    out: PathBuf,
}

pub fn run(command: SynthCommand) -> Result<()> {
    match command {
        SynthCommand::Shape(args) => shape(args),
        SynthCommand::Object(args) => object(args),
    }
}

fn shape(args: ShapeArgs) -> Result<()> {
    let spec = PerturbationSpec {
        noise_std: args.noise_std,
        hole_radius: args.hole_radius,
        sampling_factor: args.sampling_factor,
        rng_seed: args.seed,
    };
    let kind: ShapeKind = args.kind.into();
    let fixture = make_metric_pair(kind, &spec)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::io(args.out_dir.display().to_string(), e))?;
    let format = if args.ascii {
        PlyFormat::Ascii
    } else {
        PlyFormat::BinaryLittleEndian
    };
    write_ply(
        &args.out_dir.join("reference.ply"),
        &fixture.reference,
        format,
        PlyPrecision::Float64,
        None,
    )?;
    write_ply(
        &args.out_dir.join("test.ply"),
        &fixture.test,
        format,
        PlyPrecision::Float64,
        None,
    )?;

    let meta = serde_json::json!({
        "shape": kind,
        "perturbation": spec,
        "gt_distance": fixture.gt_distance,
        "reference_points": fixture.reference.len(),
        "test_points": fixture.test.len(),
        // Conventions the fixture bakes in.
        "noise_model": "isotropic-xyz",
        "perturbation_order": ["hole", "noise", "subsample"],
        "sampling_applied_to": "test",
        "shape_parameters": {
            "slope_rise_m": scanfuse::synth::SLOPE_RISE,
            "wave_amplitude_m": scanfuse::synth::WAVE_AMPLITUDE,
            "sine_cycles": scanfuse::synth::SINE_CYCLES,
            "triangle_cycles": scanfuse::synth::TRIANGLE_CYCLES,
            "segments": scanfuse::synth::DEFAULT_SEGMENTS,
        },
    });
    let path = args.out_dir.join("meta.json");
    std::fs::write(&path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    eprintln!(
        "wrote {} reference + {} test points to {}",
        fixture.reference.len(),
        fixture.test.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn object(args: ObjectArgs) -> Result<()> {
    let mesh = inspection_target(args.rings, args.sectors)?;
    write_mesh(&args.out, &mesh)?;
    eprintln!(
        "wrote scan target with {} triangles to {}",
        mesh.triangle_count(),
        args.out.display()
    );
    Ok(())
}
