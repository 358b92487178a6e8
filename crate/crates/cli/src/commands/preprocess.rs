//! `preprocess` — bounding-box crop and statistical outlier filtering.

use std::path::PathBuf;

use clap::Args;
use nalgebra::Point3;
use scanfuse::geometry::{crop, statistical_outlier_filter, Aabb};
use scanfuse::io::{read_ply, write_ply, PlyFormat, PlyPrecision};
use scanfuse::{Error, Result};

use crate::{scale_cloud, Unit};

#[derive(Args)]
pub struct PreprocessArgs {
    /// Input cloud (.ply).
    #[arg(long)]
    input: PathBuf,
    /// Output cloud (.ply).
    #[arg(long)]
    output: PathBuf,
    /// Crop box `x0,y0,z0,x1,y1,z1` (meters, after unit scaling).
    #[arg(long)]
    crop: Option<String>,
    /// Neighborhood size of the statistical outlier filter.
    #[arg(long, default_value_t = 20)]
    outlier_k: usize,
    /// Outlier threshold in standard deviations; `inf` disables the filter.
    #[arg(long, default_value_t = 2.0)]
    outlier_std: f64,
    #[arg(long, value_enum, default_value_t = Unit::M)]
    unit: Unit,
}

pub fn run(args: PreprocessArgs) -> Result<()> {
    let mut cloud = read_ply(&args.input)?;
    scale_cloud(&mut cloud, args.unit.to_meters());
    let input_count = cloud.len();

    if let Some(text) = &args.crop {
        let values: Vec<f64> = text
            .split(',')
            .map(|w| w.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParameter(format!("bad crop box `{text}`")))?;
        if values.len() != 6 {
            return Err(Error::InvalidParameter(
                "crop box needs 6 numbers: x0,y0,z0,x1,y1,z1".into(),
            ));
        }
        let bounds = Aabb::new(
            Point3::new(values[0], values[1], values[2]),
            Point3::new(values[3], values[4], values[5]),
        );
        cloud = crop(&cloud, &bounds);
    }
    if cloud.is_empty() {
        return Err(Error::DegenerateOutput(
            "crop removed every point".into(),
        ));
    }
    if args.outlier_std.is_finite() {
        cloud = statistical_outlier_filter(&cloud, args.outlier_k, args.outlier_std)?;
    }
    write_ply(
        &args.output,
        &cloud,
        PlyFormat::BinaryLittleEndian,
        PlyPrecision::Float64,
        None,
    )?;
    eprintln!(
        "preprocess: {} -> {} points ({})",
        input_count,
        cloud.len(),
        args.output.display()
    );
    Ok(())
}
