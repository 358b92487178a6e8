//! `pipeline` — staged execution from a JSON config.
//!
//! Stages run in the fixed order synth|scan -> preprocess -> register ->
//! measure -> eval (any contiguous subsequence). Each stage writes its
//! artifacts under the output directory plus a manifest with input
//! hashes, resolved parameters, output paths, and runtime. Config flags
//! (`--seed`, `--out-dir`) override the file.

use std::path::{Path, PathBuf};

use clap::Args;
use scanfuse::evaluation::{
    metric_csv, registration_csv, run_metric_benchmark, run_registration_benchmark,
    MetricBenchmarkSpec, RegistrationBenchmarkSpec,
};
use scanfuse::geometry::{apply_transform, crop, statistical_outlier_filter, Aabb};
use scanfuse::io::{
    extension, read_mesh, read_ply, read_poses, write_ply, write_poses, PlyFormat, PlyPrecision,
};
use scanfuse::metrics::{compute_metric, MetricKind, MetricParams, MetricReference};
use scanfuse::registration::{register_multiview, MultiviewMethod, PoseGraphParams};
use scanfuse::scanner::{
    perturb_poses, render_scan_with_bvh, select_viewpoints, Bvh, CameraModel, ScanRecord, ScanSet,
};
use scanfuse::synth::{make_metric_pair, PerturbationSpec, ShapeKind};
use scanfuse::{Error, PointCloud, Result};
use serde::{Deserialize, Serialize};

#[derive(Args)]
pub struct PipelineArgs {
    /// Pipeline description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum Stage {
    Synth(SynthStage),
    Scan(ScanStage),
    Preprocess(PreprocessStage),
    Register(RegisterStage),
    Measure(MeasureStage),
    Eval(EvalStage),
}

impl Stage {
    fn name(&self) -> &'static str {
        match self {
            Stage::Synth(_) => "synth",
            Stage::Scan(_) => "scan",
            Stage::Preprocess(_) => "preprocess",
            Stage::Register(_) => "register",
            Stage::Measure(_) => "measure",
            Stage::Eval(_) => "eval",
        }
    }

    fn level(&self) -> u8 {
        match self {
            Stage::Synth(_) | Stage::Scan(_) => 0,
            Stage::Preprocess(_) => 1,
            Stage::Register(_) => 2,
            Stage::Measure(_) => 3,
            Stage::Eval(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthStage {
    pub kind: ShapeKind,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub hole_radius: f64,
    #[serde(default)]
    pub sampling_factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanStage {
    pub mesh: PathBuf,
    #[serde(default = "default_views")]
    pub views: usize,
    #[serde(default = "default_stride")]
    pub stride: u32,
    /// Pose perturbation bracket in mm and degrees.
    #[serde(default)]
    pub perturb: (f64, f64),
    #[serde(default)]
    pub camera: Option<CameraModel>,
}

fn default_views() -> usize {
    8
}
fn default_stride() -> u32 {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessStage {
    /// Crop box as [x0, y0, z0, x1, y1, z1].
    #[serde(default)]
    pub crop: Option<[f64; 6]>,
    #[serde(default = "default_outlier_k")]
    pub outlier_k: usize,
    #[serde(default = "default_outlier_std")]
    pub outlier_std: f64,
}

fn default_outlier_k() -> usize {
    20
}
fn default_outlier_std() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterStage {
    pub method: MultiviewMethod,
    #[serde(default = "default_voxel")]
    pub voxel_size: f64,
    #[serde(default = "default_mult")]
    pub distance_multiplier: f64,
    #[serde(default = "default_div")]
    pub prune_divisor: f64,
    #[serde(default)]
    pub downsample_min_points: usize,
}

fn default_voxel() -> f64 {
    0.004
}
fn default_mult() -> f64 {
    2.0
}
fn default_div() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureStage {
    pub metric: MetricKind,
    /// Explicit reference path; defaults to the synth reference cloud or
    /// the scanned mesh.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub squared: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum EvalStage {
    Registration {
        mesh: PathBuf,
        #[serde(default)]
        reps: Option<usize>,
    },
    Metrics {
        #[serde(default)]
        reps: Option<usize>,
        #[serde(default)]
        steps: Option<usize>,
    },
}

/// Artifacts carried between stages.
#[derive(Default)]
struct PipelineState {
    clouds: Vec<PathBuf>,
    init_poses: Option<PathBuf>,
    gt_mesh: Option<PathBuf>,
    reference_cloud: Option<PathBuf>,
    fused: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest {
    stage: String,
    parameters: serde_json::Value,
    inputs: Vec<ManifestInput>,
    outputs: Vec<String>,
    runtime_s: f64,
}

#[derive(Serialize)]
struct ManifestInput {
    path: String,
    fnv64: String,
}

pub fn run(args: PipelineArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::io(args.config.display().to_string(), e))?;
    let deserializer = &mut serde_json::Deserializer::from_str(&text);
    let mut config: PipelineConfig =
        serde_path_to_error::deserialize(deserializer).map_err(|e| Error::ConfigError {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out_dir) = args.out_dir {
        config.out_dir = out_dir;
    }
    validate(&config)?;

    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;
    let mut state = PipelineState::default();
    for (idx, stage) in config.stages.iter().enumerate() {
        let started = std::time::Instant::now();
        let result = run_stage(&config, idx, stage, &mut state);
        match result {
            Ok((inputs, outputs)) => {
                let manifest = Manifest {
                    stage: stage.name().to_string(),
                    parameters: serde_json::to_value(stage).unwrap(),
                    inputs,
                    outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
                    runtime_s: started.elapsed().as_secs_f64(),
                };
                let path = config
                    .out_dir
                    .join(format!("manifest_{idx:02}_{}.json", stage.name()));
                std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                eprintln!("stage {idx} ({}) ok", stage.name());
            }
            Err(err) => {
                eprintln!("stage {idx} ({}) failed", stage.name());
                return Err(err);
            }
        }
    }
    Ok(())
}

fn validate(config: &PipelineConfig) -> Result<()> {
    if config.stages.is_empty() {
        return Err(Error::ConfigError {
            field: "stages".into(),
            message: "pipeline has no stages".into(),
        });
    }
    let mut level = 0u8;
    for (idx, stage) in config.stages.iter().enumerate() {
        if stage.level() < level {
            return Err(Error::ConfigError {
                field: format!("stages[{idx}]"),
                message: format!(
                    "stage `{}` out of order: stages must follow synth|scan -> preprocess -> register -> measure -> eval",
                    stage.name()
                ),
            });
        }
        level = stage.level();
    }
    Ok(())
}

type StageArtifacts = (Vec<ManifestInput>, Vec<PathBuf>);

fn run_stage(
    config: &PipelineConfig,
    idx: usize,
    stage: &Stage,
    state: &mut PipelineState,
) -> Result<StageArtifacts> {
    let dir = &config.out_dir;
    match stage {
        Stage::Synth(s) => {
            let spec = PerturbationSpec {
                noise_std: s.noise_std,
                hole_radius: s.hole_radius,
                sampling_factor: s.sampling_factor,
                rng_seed: config.seed,
            };
            let fixture = make_metric_pair(s.kind, &spec)?;
            let reference = dir.join("reference.ply");
            let test = dir.join("test.ply");
            write_ply(
                &reference,
                &fixture.reference,
                PlyFormat::BinaryLittleEndian,
                PlyPrecision::Float64,
                None,
            )?;
            write_ply(
                &test,
                &fixture.test,
                PlyFormat::BinaryLittleEndian,
                PlyPrecision::Float64,
                None,
            )?;
            state.clouds = vec![test.clone()];
            state.reference_cloud = Some(reference.clone());
            Ok((Vec::new(), vec![reference, test]))
        }
        Stage::Scan(s) => {
            let mesh = read_mesh(&s.mesh)?;
            let camera = s.camera.unwrap_or_default();
            camera.validate()?;
            let bvh = Bvh::build(&mesh)?;
            let poses =
                select_viewpoints(&mesh, &camera, camera.mid_range(), s.views, config.seed)?;
            let records = poses
                .iter()
                .map(|pose| {
                    let cloud = render_scan_with_bvh(&mesh, &bvh, pose, &camera, s.stride)?;
                    Ok(ScanRecord {
                        cloud,
                        gt_pose: *pose,
                        perturbed_pose: *pose,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let scans = ScanSet {
                records,
                mesh_label: s.mesh.display().to_string(),
                seed: config.seed,
            };
            let scans = perturb_poses(&scans, s.perturb, s.perturb, config.seed)?;

            let scan_dir = dir.join("scans");
            std::fs::create_dir_all(&scan_dir)
                .map_err(|e| Error::io(scan_dir.display().to_string(), e))?;
            let mut outputs = Vec::new();
            state.clouds.clear();
            for (i, record) in scans.records.iter().enumerate() {
                let path = scan_dir.join(format!("scan_{i:03}.ply"));
                write_ply(
                    &path,
                    &record.cloud,
                    PlyFormat::BinaryLittleEndian,
                    PlyPrecision::Float64,
                    None,
                )?;
                state.clouds.push(path.clone());
                outputs.push(path);
            }
            let gt = dir.join("gt_poses.json");
            let init = dir.join("perturbed_poses.json");
            write_poses(&gt, &scans.gt_poses())?;
            write_poses(&init, &scans.perturbed_poses())?;
            outputs.push(gt);
            outputs.push(init.clone());
            state.init_poses = Some(init);
            state.gt_mesh = Some(s.mesh.clone());
            Ok((vec![hash_input(&s.mesh)?], outputs))
        }
        Stage::Preprocess(s) => {
            if state.clouds.is_empty() {
                return Err(Error::ConfigError {
                    field: format!("stages[{idx}]"),
                    message: "preprocess needs clouds from a synth or scan stage".into(),
                });
            }
            let pre_dir = dir.join("preprocessed");
            std::fs::create_dir_all(&pre_dir)
                .map_err(|e| Error::io(pre_dir.display().to_string(), e))?;
            let mut inputs = Vec::new();
            let mut outputs = Vec::new();
            let mut new_clouds = Vec::new();
            for path in &state.clouds {
                inputs.push(hash_input(path)?);
                let mut cloud = read_ply(path)?;
                if let Some(bounds) = s.crop {
                    let aabb = Aabb::new(
                        nalgebra::Point3::new(bounds[0], bounds[1], bounds[2]),
                        nalgebra::Point3::new(bounds[3], bounds[4], bounds[5]),
                    );
                    cloud = crop(&cloud, &aabb);
                }
                if cloud.is_empty() {
                    return Err(Error::DegenerateOutput(format!(
                        "crop removed every point of {}",
                        path.display()
                    )));
                }
                if s.outlier_std.is_finite() {
                    cloud = statistical_outlier_filter(&cloud, s.outlier_k, s.outlier_std)?;
                }
                let out = pre_dir.join(path.file_name().unwrap());
                write_ply(
                    &out,
                    &cloud,
                    PlyFormat::BinaryLittleEndian,
                    PlyPrecision::Float64,
                    None,
                )?;
                new_clouds.push(out.clone());
                outputs.push(out);
            }
            state.clouds = new_clouds;
            Ok((inputs, outputs))
        }
        Stage::Register(s) => {
            if state.clouds.len() < 2 {
                return Err(Error::ConfigError {
                    field: format!("stages[{idx}]"),
                    message: "register needs at least two scans from a scan stage".into(),
                });
            }
            let mut inputs = Vec::new();
            let clouds = state
                .clouds
                .iter()
                .map(|p| {
                    inputs.push(hash_input(p)?);
                    read_ply(p)
                })
                .collect::<Result<Vec<_>>>()?;
            let init = match &state.init_poses {
                Some(path) => {
                    inputs.push(hash_input(path)?);
                    read_poses(path)?
                }
                None => vec![scanfuse::RigidTransform::identity(); clouds.len()],
            };
            let params = PoseGraphParams {
                voxel_size: s.voxel_size,
                distance_multiplier: s.distance_multiplier,
                prune_divisor: s.prune_divisor,
                downsample_min_points: s.downsample_min_points,
                ..PoseGraphParams::default()
            };
            let poses = register_multiview(&clouds, &init, s.method, &params)?;

            let mut fused = PointCloud::default();
            for (cloud, pose) in clouds.iter().zip(&poses) {
                let moved = apply_transform(cloud, pose);
                fused.points.extend_from_slice(&moved.points);
            }
            let fused_path = dir.join("fused.ply");
            let poses_path = dir.join("est_poses.json");
            write_ply(
                &fused_path,
                &fused,
                PlyFormat::BinaryLittleEndian,
                PlyPrecision::Float64,
                None,
            )?;
            write_poses(&poses_path, &poses)?;
            state.fused = Some(fused_path.clone());
            Ok((inputs, vec![fused_path, poses_path]))
        }
        Stage::Measure(s) => {
            let query_path = state.fused.as_ref().or(state.clouds.first()).ok_or_else(|| {
                Error::ConfigError {
                    field: format!("stages[{idx}]"),
                    message: "measure needs a fused cloud or synth stage output".into(),
                }
            })?;
            let mut inputs = vec![hash_input(query_path)?];
            let query = read_ply(query_path)?;
            let mut params = MetricParams::default();
            if let Some(k) = s.k {
                params.k_plane = k;
                params.k_triangulation = k;
            }
            params.squared = s.squared;

            let reference_path = s
                .reference
                .clone()
                .or_else(|| {
                    if s.metric == MetricKind::CloudToMesh {
                        state.gt_mesh.clone()
                    } else {
                        state.reference_cloud.clone()
                    }
                })
                .ok_or_else(|| Error::ConfigError {
                    field: format!("stages[{idx}].reference"),
                    message: "no reference available for the measure stage".into(),
                })?;
            inputs.push(hash_input(&reference_path)?);

            let report = match extension(&reference_path)?.as_str() {
                "obj" | "stl" => {
                    let mesh = read_mesh(&reference_path)?;
                    compute_metric(s.metric, &query, &MetricReference::Mesh(&mesh), &params)?
                }
                _ => {
                    let reference = read_ply(&reference_path)?;
                    compute_metric(s.metric, &query, &MetricReference::Cloud(&reference), &params)?
                }
            };
            let out = dir.join("report.json");
            let json = serde_json::json!({
                "metric": s.metric,
                "scalar": report.scalar,
                "mean": report.mean,
                "std": report.std,
                "flagged": report.flagged,
                "histogram": report.histogram,
            });
            std::fs::write(&out, serde_json::to_string_pretty(&json).unwrap())
                .map_err(|e| Error::io(out.display().to_string(), e))?;
            Ok((inputs, vec![out]))
        }
        Stage::Eval(s) => match s {
            EvalStage::Registration { mesh, reps } => {
                let inputs = vec![hash_input(mesh)?];
                let mesh = read_mesh(mesh)?;
                let spec = RegistrationBenchmarkSpec {
                    repetitions: reps.unwrap_or(10),
                    seed: config.seed,
                    ..RegistrationBenchmarkSpec::default()
                };
                let rows = run_registration_benchmark(&mesh, &spec)?;
                let out = dir.join("table_registration.csv");
                std::fs::write(&out, registration_csv(&rows))
                    .map_err(|e| Error::io(out.display().to_string(), e))?;
                Ok((inputs, vec![out]))
            }
            EvalStage::Metrics { reps, steps } => {
                let spec = MetricBenchmarkSpec {
                    repetitions: reps.unwrap_or(10),
                    steps: steps.unwrap_or(5),
                    seed: config.seed,
                    ..MetricBenchmarkSpec::default()
                };
                let rows = run_metric_benchmark(&spec)?;
                let out = dir.join("table_metrics.csv");
                std::fs::write(&out, metric_csv(&rows))
                    .map_err(|e| Error::io(out.display().to_string(), e))?;
                Ok((Vec::new(), vec![out]))
            }
        },
    }
}

fn hash_input(path: &Path) -> Result<ManifestInput> {
    let data = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in &data {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(ManifestInput {
        path: path.display().to_string(),
        fnv64: format!("{h:016x}"),
    })
}
