//! Pose list files: a JSON array of row-major homogeneous 4x4 matrices.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

pub fn read_poses(path: &Path) -> Result<Vec<RigidTransform>> {
    let data = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&data)
        .map_err(|e| Error::parse(path.display().to_string(), e.column() as u64, e.to_string()))
}

pub fn write_poses(path: &Path, poses: &[RigidTransform]) -> Result<()> {
    let json = serde_json::to_string_pretty(poses)
        .map_err(|e| Error::InvalidParameter(format!("pose serialization failed: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}
