//! Geometry file formats.
//!
//! Point clouds travel as PLY (ASCII or binary little-endian, float or
//! double coordinates, optional normals). Meshes travel as OBJ `v`/`f`
//! records or binary STL. Pose lists serialize as JSON arrays of row-major
//! homogeneous 4x4 matrices.

mod obj;
mod ply;
mod poses;
mod stl;

pub use obj::{read_obj, write_obj};
pub use ply::{read_ply, write_ply, PlyFormat, PlyPrecision};
pub use poses::{read_poses, write_poses};
pub use stl::{read_stl, write_stl};

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

/// Loads a mesh by extension (`.obj` or `.stl`).
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    match extension(path)?.as_str() {
        "obj" => read_obj(path),
        "stl" => read_stl(path),
        other => Err(Error::InvalidParameter(format!(
            "unsupported mesh extension `.{other}` for {}",
            path.display()
        ))),
    }
}

/// Writes a mesh by extension (`.obj` or `.stl`).
pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    match extension(path)?.as_str() {
        "obj" => write_obj(path, mesh),
        "stl" => write_stl(path, mesh),
        other => Err(Error::InvalidParameter(format!(
            "unsupported mesh extension `.{other}` for {}",
            path.display()
        ))),
    }
}

/// Lower-cased file extension; errors when missing.
pub fn extension(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| {
            Error::InvalidParameter(format!("{} has no file extension", path.display()))
        })
}
