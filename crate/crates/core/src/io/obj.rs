//! Wavefront OBJ mesh reader/writer (`v` and `f` records only).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

pub fn read_obj(path: &Path) -> Result<TriangleMesh> {
    let data = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut offset = 0u64;
    for line in data.lines() {
        let trimmed = line.trim();
        let mut words = trimmed.split_whitespace();
        match words.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    *c = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| Error::parse(path.display().to_string(), offset, "malformed vertex record"))?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut indices = Vec::new();
                for word in words {
                    // `f` entries may carry /vt/vn suffixes.
                    let first = word.split('/').next().unwrap_or("");
                    let idx: i64 = first.parse().map_err(|_| {
                        Error::parse(
                            path.display().to_string(),
                            offset,
                            format!("invalid face index `{word}`"),
                        )
                    })?;
                    let resolved = if idx > 0 {
                        (idx - 1) as usize
                    } else if idx < 0 {
                        let back = vertices.len() as i64 + idx;
                        if back < 0 {
                            return Err(Error::parse(
                                path.display().to_string(),
                                offset,
                                format!("relative face index `{idx}` before first vertex"),
                            ));
                        }
                        back as usize
                    } else {
                        return Err(Error::parse(
                            path.display().to_string(),
                            offset,
                            "face index 0 is not valid in OBJ",
                        ));
                    };
                    indices.push(resolved);
                }
                if indices.len() < 3 {
                    return Err(Error::parse(
                        path.display().to_string(),
                        offset,
                        "face with fewer than 3 vertices",
                    ));
                }
                // Fan-triangulate polygons.
                for i in 1..indices.len() - 1 {
                    triangles.push([indices[0], indices[i], indices[i + 1]]);
                }
            }
            _ => {}
        }
        offset += line.len() as u64 + 1;
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for tri in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
