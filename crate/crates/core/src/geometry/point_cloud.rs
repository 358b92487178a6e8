use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};

use super::Aabb;

/// An ordered set of 3D points with optional per-point unit normals and
/// 3x3 surface covariances.
///
/// The point order is meaningful: filters preserve it and seeded sampling
/// reproduces it, so downstream results are deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub normals: Option<Vec<Vector3<f64>>>,
    pub covariances: Option<Vec<Matrix3<f64>>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3<f64>>) -> Self {
        Self {
            points,
            normals: None,
            covariances: None,
        }
    }

    pub fn with_normals(points: Vec<Point3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::SizeMismatch {
                left: points.len(),
                right: normals.len(),
            });
        }
        Ok(Self {
            points,
            normals: Some(normals),
            covariances: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    /// Checks the structural invariants: finite coordinates, unit normals,
    /// and matching attribute lengths. Covariances must be symmetric PSD.
    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InvalidParameter(
                    "point cloud contains non-finite coordinates".into(),
                ));
            }
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.points.len() {
                return Err(Error::SizeMismatch {
                    left: self.points.len(),
                    right: normals.len(),
                });
            }
            for n in normals {
                if (n.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "normal has norm {} (expected 1)",
                        n.norm()
                    )));
                }
            }
        }
        if let Some(covs) = &self.covariances {
            if covs.len() != self.points.len() {
                return Err(Error::SizeMismatch {
                    left: self.points.len(),
                    right: covs.len(),
                });
            }
            for c in covs {
                if (c - c.transpose()).norm() > 1e-9 {
                    return Err(Error::InvalidParameter(
                        "covariance is not symmetric".into(),
                    ));
                }
                let (evals, _) = super::sym_eigen3(c);
                if evals[0] < -1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "covariance has negative eigenvalue {}",
                        evals[0]
                    )));
                }
            }
        }
        Ok(())
    }

    /// New cloud keeping only the given point indices, attributes included.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| indices.iter().map(|&i| ns[i]).collect()),
            covariances: self
                .covariances
                .as_ref()
                .map(|cs| indices.iter().map(|&i| cs[i]).collect()),
        }
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(&self.points)
    }
}
