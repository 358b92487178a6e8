use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

use super::Aabb;

/// Indexed triangle set with derived per-triangle unit normals
/// (counter-clockwise winding).
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    normals: Vec<Vector3<f64>>,
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices and zero-area
    /// triangles.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut normals = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= vertices.len() {
                    return Err(Error::InvalidParameter(format!(
                        "triangle {t} references vertex {i} but mesh has {} vertices",
                        vertices.len()
                    )));
                }
            }
            let cross = (vertices[tri[1]] - vertices[tri[0]])
                .cross(&(vertices[tri[2]] - vertices[tri[0]]));
            let norm = cross.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "triangle {t} is degenerate (area = {})",
                    norm / 2.0
                )));
            }
            normals.push(cross / norm);
        }
        Ok(Self {
            vertices,
            triangles,
            normals,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Corner positions of triangle `t`.
    pub fn triangle(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unit normal of triangle `t` (CCW winding).
    pub fn normal(&self, t: usize) -> Vector3<f64> {
        self.normals[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(&(c - a)).norm() / 2.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn centroid_of(&self, t: usize) -> Point3<f64> {
        let [a, b, c] = self.triangle(t);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Area-weighted centroid of the surface.
    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.triangles.is_empty() {
            return None;
        }
        let mut total = 0.0;
        let mut acc = Vector3::zeros();
        for t in 0..self.triangles.len() {
            let area = self.area(t);
            acc += self.centroid_of(t).coords * area;
            total += area;
        }
        Some(Point3::from(acc / total))
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_index() {
        let verts = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        assert!(TriangleMesh::new(verts, vec![[0, 1, 3]]).is_err());
    }

    #[test]
    fn rejects_degenerate_triangle() {
        let verts = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        assert!(TriangleMesh::new(verts, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn ccw_normal_points_up() {
        let verts = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let mesh = TriangleMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        assert_eq!(mesh.normal(0), Vector3::z());
        assert!((mesh.area(0) - 0.5).abs() < 1e-15);
    }
}
