//! `measure` — one distance metric between a query cloud and a reference
//! cloud or mesh.

use std::path::PathBuf;

use clap::Args;
use scanfuse::io::{extension, read_mesh, read_ply, write_ply, PlyFormat, PlyPrecision};
use scanfuse::metrics::{compute_metric, MetricKind, MetricParams, MetricReference};
use scanfuse::{Error, Result};

use crate::{scale_cloud, Unit};

#[derive(Args)]
pub struct MeasureArgs {
    /// chamfer | hausdorff | earth-movers | plane-lsq | plane-quadratic |
    /// plane-triangulation | cloud-to-mesh
    #[arg(long, value_enum)]
    metric: MetricCli,
    /// Query cloud (.ply).
    #[arg(long)]
    query: PathBuf,
    /// Reference cloud (.ply) or mesh (.obj/.stl) for cloud-to-mesh.
    #[arg(long)]
    reference: PathBuf,
    /// Neighborhood size for the plane-fit metrics.
    #[arg(long)]
    k: Option<usize>,
    /// Report squared distances (Chamfer only).
    #[arg(long)]
    squared: bool,
    /// Report file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write the query cloud with a per-point `distance` property.
    #[arg(long)]
    per_point: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Unit::M)]
    unit: Unit,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MetricCli {
    Chamfer,
    Hausdorff,
    EarthMovers,
    PlaneLsq,
    PlaneQuadratic,
    PlaneTriangulation,
    CloudToMesh,
}

impl From<MetricCli> for MetricKind {
    fn from(value: MetricCli) -> Self {
        match value {
            MetricCli::Chamfer => MetricKind::Chamfer,
            MetricCli::Hausdorff => MetricKind::Hausdorff,
            MetricCli::EarthMovers => MetricKind::EarthMovers,
            MetricCli::PlaneLsq => MetricKind::PlaneLsq,
            MetricCli::PlaneQuadratic => MetricKind::PlaneQuadratic,
            MetricCli::PlaneTriangulation => MetricKind::PlaneTriangulation,
            MetricCli::CloudToMesh => MetricKind::CloudToMesh,
        }
    }
}

pub fn run(args: MeasureArgs) -> Result<()> {
    let scale = args.unit.to_meters();
    let mut query = read_ply(&args.query)?;
    scale_cloud(&mut query, scale);

    let kind: MetricKind = args.metric.into();
    let mut params = MetricParams::default();
    if let Some(k) = args.k {
        params.k_plane = k;
        params.k_triangulation = k;
    }
    params.squared = args.squared;

    let report = match extension(&args.reference)?.as_str() {
        "obj" | "stl" => {
            let mut mesh = read_mesh(&args.reference)?;
            if scale != 1.0 {
                for v in &mut mesh.vertices {
                    v.coords *= scale;
                }
                mesh = scanfuse::TriangleMesh::new(mesh.vertices, mesh.triangles)?;
            }
            compute_metric(kind, &query, &MetricReference::Mesh(&mesh), &params)?
        }
        "ply" => {
            let mut reference = read_ply(&args.reference)?;
            scale_cloud(&mut reference, scale);
            compute_metric(kind, &query, &MetricReference::Cloud(&reference), &params)?
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unsupported reference extension `.{other}`"
            )))
        }
    };

    let json = serde_json::json!({
        "metric": kind,
        "scalar": report.scalar,
        "mean": report.mean,
        "std": report.std,
        "flagged": report.flagged,
        "histogram": report.histogram,
        "query_points": query.len(),
    });
    std::fs::write(&args.out, serde_json::to_string_pretty(&json).unwrap())
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;

    if let Some(path) = &args.per_point {
        let distances = report.per_point.as_deref().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} has no per-point distances to export",
                kind.name()
            ))
        })?;
        write_ply(
            path,
            &query,
            PlyFormat::BinaryLittleEndian,
            PlyPrecision::Float64,
            Some(("distance", distances)),
        )?;
    }
    eprintln!(
        "{}: scalar {:.6} mean {:.6} std {:.6} ({} flagged)",
        kind.name(),
        report.scalar,
        report.mean,
        report.std,
        report.flagged
    );
    Ok(())
}
