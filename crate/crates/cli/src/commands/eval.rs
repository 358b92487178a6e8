//! `eval registration` and `eval metrics` — the benchmark studies.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use scanfuse::evaluation::{
    metric_csv, registration_csv, run_metric_benchmark, run_registration_benchmark, ErrorUnit,
    MetricBenchmarkSpec, RegistrationBenchmarkSpec, SweepKind,
};
use scanfuse::io::read_mesh;
use scanfuse::metrics::MetricKind;
use scanfuse::registration::{MultiviewMethod, PoseGraphParams};
use scanfuse::synth::ShapeKind;
use scanfuse::{Error, Result};

use crate::parse_range;

#[derive(Subcommand)]
pub enum EvalCommand {
    /// Transform-error comparison across methods and perturbation ranges.
    Registration(RegistrationArgs),
    /// Metric deviation across noise, hole, and sampling sweeps.
    Metrics(MetricsArgs),
}

#[derive(Args)]
pub struct RegistrationArgs {
    /// Ground-truth mesh to scan.
    #[arg(long)]
    mesh: PathBuf,
    /// Perturbation brackets, e.g. `0:1,1:3,3:6,6:10,10:15` (mm and deg).
    #[arg(long, default_value = "0:1,1:3,3:6,6:10,10:15")]
    ranges: String,
    /// `all` or a comma list of global-icp,pose-graph,refined-pose-graph.
    #[arg(long, default_value = "all")]
    methods: String,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    views: usize,
    #[arg(long, default_value_t = 4)]
    stride: u32,
    #[arg(long, default_value_t = 0.004)]
    voxel_size: f64,
    #[arg(long, default_value_t = 4.0)]
    distance_mult: f64,
    #[arg(long, default_value_t = 3.0)]
    prune_div: f64,
    /// Report translation entries in millimeters instead of meters.
    #[arg(long)]
    mm: bool,
    /// Record wall-clock runtimes (makes the CSV non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
pub struct MetricsArgs {
    /// `all` or a comma list of plane,slope,sine-wave,triangular-wave.
    #[arg(long, default_value = "all")]
    shapes: String,
    /// `all` or a comma list of noise,hole,sampling.
    #[arg(long, default_value = "all")]
    sweeps: String,
    /// `all` or a comma list of metric names.
    #[arg(long, default_value = "all")]
    metrics: String,
    /// Grid points per sweep.
    #[arg(long, default_value_t = 5)]
    steps: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(command: EvalCommand) -> Result<()> {
    match command {
        EvalCommand::Registration(args) => registration(args),
        EvalCommand::Metrics(args) => metrics(args),
    }
}

fn registration(args: RegistrationArgs) -> Result<()> {
    let mesh = read_mesh(&args.mesh)?;
    let ranges = args
        .ranges
        .split(',')
        .map(parse_range)
        .collect::<Result<Vec<_>>>()?;
    let methods = if args.methods == "all" {
        MultiviewMethod::ALL.to_vec()
    } else {
        args.methods
            .split(',')
            .map(|name| match name.trim() {
                "global-icp" => Ok(MultiviewMethod::GlobalIcp),
                "pose-graph" => Ok(MultiviewMethod::PoseGraph),
                "refined-pose-graph" => Ok(MultiviewMethod::RefinedPoseGraph),
                other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?
    };
    let spec = RegistrationBenchmarkSpec {
        scenario: "eval-registration".into(),
        methods,
        ranges,
        repetitions: args.reps,
        seed: args.seed,
        views: args.views,
        stride: args.stride,
        params: PoseGraphParams {
            voxel_size: args.voxel_size,
            distance_multiplier: args.distance_mult,
            prune_divisor: args.prune_div,
            downsample_min_points: 0,
            ..PoseGraphParams::default()
        },
        error_unit: if args.mm {
            ErrorUnit::Millimeters
        } else {
            ErrorUnit::Meters
        },
        timings: args.timings,
        ..RegistrationBenchmarkSpec::default()
    };
    let rows = run_registration_benchmark(&mesh, &spec)?;
    std::fs::write(&args.out, registration_csv(&rows))
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let shapes = if args.shapes == "all" {
        ShapeKind::ALL.to_vec()
    } else {
        args.shapes
            .split(',')
            .map(|name| {
                ShapeKind::ALL
                    .iter()
                    .copied()
                    .find(|s| s.name() == name.trim())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown shape `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let sweeps = if args.sweeps == "all" {
        SweepKind::ALL.to_vec()
    } else {
        args.sweeps
            .split(',')
            .map(|name| {
                SweepKind::ALL
                    .iter()
                    .copied()
                    .find(|s| s.name() == name.trim())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown sweep `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let metrics = if args.metrics == "all" {
        MetricKind::ALL.to_vec()
    } else {
        args.metrics
            .split(',')
            .map(|name| {
                MetricKind::ALL
                    .iter()
                    .copied()
                    .find(|m| m.name() == name.trim())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown metric `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let spec = MetricBenchmarkSpec {
        shapes,
        metrics,
        sweeps,
        steps: args.steps,
        repetitions: args.reps,
        seed: args.seed,
        ..MetricBenchmarkSpec::default()
    };
    let rows = run_metric_benchmark(&spec)?;
    std::fs::write(&args.out, metric_csv(&rows))
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}
