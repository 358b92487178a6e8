//! Binary STL mesh reader/writer.
//!
//! STL stores loose triangles; on read, bit-identical vertices are welded
//! back into an indexed mesh.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

pub fn read_stl(path: &Path) -> Result<TriangleMesh> {
    let data = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if data.len() < 84 {
        return Err(Error::parse(
            path.display().to_string(),
            data.len() as u64,
            "file too short for a binary STL header",
        ));
    }
    let count = u32::from_le_bytes(data[80..84].try_into().unwrap()) as usize;
    let expected = 84 + count * 50;
    if data.len() < expected {
        return Err(Error::parse(
            path.display().to_string(),
            data.len() as u64,
            format!("header declares {count} triangles but file holds fewer"),
        ));
    }

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut index: HashMap<[u32; 3], usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + t * 50;
        let mut tri = [0usize; 3];
        for (v, slot) in tri.iter_mut().enumerate() {
            let off = base + 12 + v * 12; // skip the stored normal
            let fx = f32::from_le_bytes(data[off..off + 4].try_into().unwrap());
            let fy = f32::from_le_bytes(data[off + 4..off + 8].try_into().unwrap());
            let fz = f32::from_le_bytes(data[off + 8..off + 12].try_into().unwrap());
            let key = [fx.to_bits(), fy.to_bits(), fz.to_bits()];
            let id = *index.entry(key).or_insert_with(|| {
                vertices.push(Point3::new(fx as f64, fy as f64, fz as f64));
                vertices.len() - 1
            });
            *slot = id;
        }
        triangles.push(tri);
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_stl(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = Vec::with_capacity(84 + mesh.triangle_count() * 50);
    out.extend_from_slice(&[0u8; 80]);
    out.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    for t in 0..mesh.triangle_count() {
        let n = mesh.normal(t);
        for c in [n.x, n.y, n.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for v in mesh.triangle(t) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
