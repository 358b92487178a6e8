//! Benchmark runners: registration error vs perturbation range, and
//! metric deviation vs perturbation sweeps.
//!
//! Every cell derives its own random stream from (master seed, cell
//! labels), so execution order and parallelism never change results.
//! Wall-clock timings are off by default to keep the CSV byte-identical
//! across runs; `timings` turns them on explicitly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::TriangleMesh;
use crate::metrics::{compute_metric, MetricKind, MetricParams, MetricReference};
use crate::registration::{register_multiview, MultiviewMethod, PoseGraphParams};
use crate::scanner::{perturb_poses, render_scan_with_bvh, select_viewpoints, Bvh, CameraModel,
    ScanRecord, ScanSet};
use crate::synth::{make_metric_pair, make_shape_mesh, PerturbationSpec, ShapeKind,
    DEFAULT_SEGMENTS, GROUND_TRUTH_OFFSET};

use super::{transform_error, ErrorUnit};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistrationBenchmarkSpec {
    pub scenario: String,
    pub methods: Vec<MultiviewMethod>,
    /// Perturbation brackets in mm and degrees (applied to both).
    pub ranges: Vec<(f64, f64)>,
    pub repetitions: usize,
    pub seed: u64,
    pub views: usize,
    pub stride: u32,
    pub camera: CameraModel,
    pub params: PoseGraphParams,
    pub error_unit: ErrorUnit,
    /// Record wall-clock seconds per row (breaks byte-identical reruns).
    pub timings: bool,
}

impl Default for RegistrationBenchmarkSpec {
    fn default() -> Self {
        Self {
            scenario: "registration".into(),
            methods: MultiviewMethod::ALL.to_vec(),
            ranges: vec![(0.0, 1.0), (1.0, 3.0), (3.0, 6.0), (6.0, 10.0), (10.0, 15.0)],
            repetitions: 10,
            seed: 42,
            views: 8,
            stride: 4,
            camera: CameraModel::default(),
            params: PoseGraphParams {
                voxel_size: 0.004,
                distance_multiplier: 4.0,
                prune_divisor: 3.0,
                downsample_min_points: 0,
                ..PoseGraphParams::default()
            },
            error_unit: ErrorUnit::Meters,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistrationRow {
    pub range: (f64, f64),
    pub method: MultiviewMethod,
    pub rep: usize,
    pub mean_abs: f64,
    pub rotation_deg: f64,
    pub translation_m: f64,
    pub runtime_s: Option<f64>,
    pub seed: u64,
    pub failed: bool,
}

/// Renders one scan set of the mesh (fresh viewpoints per repetition).
pub fn generate_scan_set(
    mesh: &TriangleMesh,
    camera: &CameraModel,
    views: usize,
    stride: u32,
    seed: u64,
) -> Result<ScanSet> {
    let bvh = Bvh::build(mesh)?;
    let poses = select_viewpoints(mesh, camera, camera.mid_range(), views, seed)?;
    let records = poses
        .iter()
        .map(|pose| {
            let cloud = render_scan_with_bvh(mesh, &bvh, pose, camera, stride)?;
            Ok(ScanRecord {
                cloud,
                gt_pose: *pose,
                perturbed_pose: *pose,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanSet {
        records,
        mesh_label: format!("mesh-{}tris", mesh.triangle_count()),
        seed,
    })
}

/// Scores every (range, method, repetition) cell: scan, perturb,
/// register, compare against ground truth. Registration failures are
/// recorded per row, not fatal.
pub fn run_registration_benchmark(
    mesh: &TriangleMesh,
    spec: &RegistrationBenchmarkSpec,
) -> Result<Vec<RegistrationRow>> {
    let mut rows = Vec::new();
    for rep in 0..spec.repetitions {
        let scan_seed = derive_seed(spec.seed, &format!("scan-{rep}"));
        let scans = generate_scan_set(mesh, &spec.camera, spec.views, spec.stride, scan_seed)?;
        let gt = scans.gt_poses();
        let clouds = scans.clouds();
        for (range_idx, &range) in spec.ranges.iter().enumerate() {
            let perturb_seed = derive_seed(spec.seed, &format!("perturb-{rep}-{range_idx}"));
            let perturbed = perturb_poses(&scans, range, range, perturb_seed)?;
            let init = perturbed.perturbed_poses();
            for &method in &spec.methods {
                let start = std::time::Instant::now();
                let outcome = register_multiview(&clouds, &init, method, &spec.params);
                let runtime = spec.timings.then(|| start.elapsed().as_secs_f64());
                match outcome.and_then(|est| transform_error(&gt, &est, spec.error_unit)) {
                    Ok(err) => rows.push(RegistrationRow {
                        range,
                        method,
                        rep,
                        mean_abs: err.mean_abs,
                        rotation_deg: err.rotation_deg,
                        translation_m: err.translation_m,
                        runtime_s: runtime,
                        seed: perturb_seed,
                        failed: false,
                    }),
                    Err(_) => rows.push(RegistrationRow {
                        range,
                        method,
                        rep,
                        mean_abs: f64::NAN,
                        rotation_deg: f64::NAN,
                        translation_m: f64::NAN,
                        runtime_s: runtime,
                        seed: perturb_seed,
                        failed: true,
                    }),
                }
            }
        }
    }
    Ok(rows)
}

/// CSV with the fixed column set; `runtime_s` is `na` unless timings were
/// requested.
pub fn registration_csv(rows: &[RegistrationRow]) -> String {
    let mut out = String::from("range,method,rep,mean_abs,rotation_deg,translation_m,runtime_s,seed\n");
    for row in rows {
        let runtime = row
            .runtime_s
            .map_or_else(|| "na".to_string(), |t| format!("{t:.3}"));
        out.push_str(&format!(
            "{}:{},{},{},{},{},{},{},{}\n",
            row.range.0,
            row.range.1,
            row.method.name(),
            row.rep,
            row.mean_abs,
            row.rotation_deg,
            row.translation_m,
            runtime,
            row.seed
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Noise,
    Hole,
    Sampling,
}

impl SweepKind {
    pub const ALL: [SweepKind; 3] = [SweepKind::Noise, SweepKind::Hole, SweepKind::Sampling];

    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Noise => "noise",
            SweepKind::Hole => "hole",
            SweepKind::Sampling => "sampling",
        }
    }

    /// Sweep grid: noise 0.01-0.1 m, hole radius 0.1-1 m, sampling factor
    /// 0-0.9.
    pub fn values(&self, steps: usize) -> Vec<f64> {
        let (lo, hi) = match self {
            SweepKind::Noise => (0.01, 0.1),
            SweepKind::Hole => (0.1, 1.0),
            SweepKind::Sampling => (0.0, 0.9),
        };
        if steps <= 1 {
            return vec![lo];
        }
        (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect()
    }

    fn perturbation(&self, value: f64, seed: u64) -> PerturbationSpec {
        let mut spec = PerturbationSpec::none(seed);
        match self {
            SweepKind::Noise => spec.noise_std = value,
            SweepKind::Hole => spec.hole_radius = value,
            SweepKind::Sampling => spec.sampling_factor = value,
        }
        spec
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricBenchmarkSpec {
    pub shapes: Vec<ShapeKind>,
    pub metrics: Vec<MetricKind>,
    pub sweeps: Vec<SweepKind>,
    /// Grid points per sweep.
    pub steps: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub params: MetricParams,
}

impl Default for MetricBenchmarkSpec {
    fn default() -> Self {
        Self {
            shapes: ShapeKind::ALL.to_vec(),
            metrics: MetricKind::ALL.to_vec(),
            sweeps: SweepKind::ALL.to_vec(),
            steps: 5,
            repetitions: 10,
            seed: 42,
            params: MetricParams::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub shape: ShapeKind,
    pub metric: MetricKind,
    pub sweep: SweepKind,
    pub value: f64,
    /// Mean |estimate - 0.5| over the successful repetitions.
    pub deviation: f64,
    pub reps_used: usize,
    /// Repetitions lost to degenerate fixtures or inapplicable metrics.
    pub missing: usize,
    pub seed: u64,
}

/// Sweeps shape x metric x perturbation and averages the deviation from
/// the 0.5 m ground truth per cell. Degenerate repetitions (hole removes
/// everything, size mismatch for the assignment metric) are recorded as
/// missing.
pub fn run_metric_benchmark(spec: &MetricBenchmarkSpec) -> Result<Vec<MetricRow>> {
    let mut cells = Vec::new();
    for &shape in &spec.shapes {
        for &metric in &spec.metrics {
            for &sweep in &spec.sweeps {
                for value in sweep.values(spec.steps) {
                    cells.push((shape, metric, sweep, value));
                }
            }
        }
    }

    let rows: Vec<MetricRow> = cells
        .par_iter()
        .map(|&(shape, metric, sweep, value)| {
            let cell_seed = derive_seed(
                spec.seed,
                &format!("{}-{}-{}-{value}", shape.name(), metric.name(), sweep.name()),
            );
            let mesh = make_shape_mesh(shape, DEFAULT_SEGMENTS).expect("shape mesh");
            let mut deviations = Vec::new();
            let mut missing = 0usize;
            for rep in 0..spec.repetitions {
                let rep_seed = derive_seed(cell_seed, &format!("rep-{rep}"));
                let perturbation = sweep.perturbation(value, rep_seed);
                let fixture = match make_metric_pair(shape, &perturbation) {
                    Ok(f) => f,
                    Err(_) => {
                        missing += 1;
                        continue;
                    }
                };
                let reference = match metric {
                    MetricKind::CloudToMesh => MetricReference::Mesh(&mesh),
                    _ => MetricReference::Cloud(&fixture.reference),
                };
                match compute_metric(metric, &fixture.test, &reference, &spec.params) {
                    Ok(report) if report.scalar.is_finite() => {
                        deviations.push((report.scalar - GROUND_TRUTH_OFFSET).abs());
                    }
                    _ => missing += 1,
                }
            }
            let deviation = if deviations.is_empty() {
                f64::NAN
            } else {
                deviations.iter().sum::<f64>() / deviations.len() as f64
            };
            MetricRow {
                shape,
                metric,
                sweep,
                value,
                deviation,
                reps_used: deviations.len(),
                missing,
                seed: cell_seed,
            }
        })
        .collect();
    Ok(rows)
}

pub fn metric_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("shape,metric,sweep,value,deviation,reps,missing,seed\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.shape.name(),
            row.metric.name(),
            row.sweep.name(),
            row.value,
            row.deviation,
            row.reps_used,
            row.missing,
            row.seed
        ));
    }
    out
}

fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}
