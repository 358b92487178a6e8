//! Quantitative studies: registration error tables and metric deviation
//! sweeps, reproducible from (spec, seed) and emitted as CSV.

mod benchmarks;

pub use benchmarks::{
    generate_scan_set,
    metric_csv, registration_csv, run_metric_benchmark, run_registration_benchmark,
    MetricBenchmarkSpec, MetricRow, RegistrationBenchmarkSpec, RegistrationRow, SweepKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

/// Unit for the translation entries when averaging the homogeneous
/// matrix differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorUnit {
    Meters,
    Millimeters,
}

/// Elementwise transform error plus unambiguous supplements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformError {
    /// Mean absolute difference over the 16 homogeneous entries, per scan.
    pub per_scan: Vec<f64>,
    /// Mean of `per_scan`.
    pub mean_abs: f64,
    /// Mean geodesic rotation error, degrees.
    pub rotation_deg: f64,
    /// Mean Euclidean translation error, meters.
    pub translation_m: f64,
}

/// Compares two pose lists after gauge-fixing both to their first
/// element. `unit` scales the translation entries of the matrices before
/// the elementwise average (the supplements are unit-fixed).
pub fn transform_error(
    gt: &[RigidTransform],
    est: &[RigidTransform],
    unit: ErrorUnit,
) -> Result<TransformError> {
    if gt.len() != est.len() {
        return Err(Error::SizeMismatch {
            left: gt.len(),
            right: est.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::EmptyInput("no poses to compare"));
    }
    let g0 = gt[0].inverse();
    let e0 = est[0].inverse();
    let scale = match unit {
        ErrorUnit::Meters => 1.0,
        ErrorUnit::Millimeters => 1000.0,
    };

    let mut per_scan = Vec::with_capacity(gt.len());
    let mut rot_sum = 0.0;
    let mut trans_sum = 0.0;
    for (g, e) in gt.iter().zip(est) {
        let g = g0.compose(g);
        let e = e0.compose(e);
        let mut gm = g.to_matrix();
        let mut em = e.to_matrix();
        for r in 0..3 {
            gm[(r, 3)] *= scale;
            em[(r, 3)] *= scale;
        }
        let abs_sum: f64 = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .map(|(r, c)| (gm[(r, c)] - em[(r, c)]).abs())
            .sum();
        per_scan.push(abs_sum / 16.0);

        let rel = g.inverse().compose(&e);
        rot_sum += rel.rotation_angle().to_degrees();
        trans_sum += (g.translation - e.translation).norm();
    }
    let n = gt.len() as f64;
    Ok(TransformError {
        mean_abs: per_scan.iter().sum::<f64>() / n,
        per_scan,
        rotation_deg: rot_sum / n,
        translation_m: trans_sum / n,
    })
}
