use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Rigid SE(3) pose: rotation plus translation, serialized as a row-major
/// homogeneous 4x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

const ORTHONORMAL_TOL: f64 = 1e-9;

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, verifying `R` is a proper rotation within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = Self {
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    /// Same as [`RigidTransform::new`] without validation; callers must
    /// guarantee orthonormality (used on hot paths with trusted inputs).
    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation about a unit `axis` by `angle` radians plus a translation.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        Self {
            rotation: nalgebra::Rotation3::from_axis_angle(
                &nalgebra::Unit::new_normalize(*axis),
                angle,
            )
            .into_inner(),
            translation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gram = self.rotation.transpose() * self.rotation;
        if (gram - Matrix3::identity()).norm() > ORTHONORMAL_TOL * 10.0 {
            return Err(Error::InvalidParameter(format!(
                "rotation is not orthonormal (|R'R - I| = {:.3e})",
                (gram - Matrix3::identity()).norm()
            )));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL * 10.0 {
            return Err(Error::InvalidParameter(format!(
                "rotation determinant {det} is not +1"
            )));
        }
        if !self.translation.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter(
                "translation has non-finite components".into(),
            ));
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Parses a homogeneous matrix; the bottom row must be (0,0,0,1) and
    /// the upper-left block a proper rotation.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidParameter(format!(
                "homogeneous bottom row {:?} is not (0,0,0,1)",
                bottom
            )));
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Geodesic rotation angle in radians.
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Re-orthonormalizes the rotation (nearest rotation via SVD); keeps
    /// long pose-composition chains from drifting.
    pub fn renormalized(&self) -> RigidTransform {
        let svd = self.rotation.svd(true, true);
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * vt;
        }
        RigidTransform {
            rotation: r,
            translation: self.translation,
        }
    }
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.to_matrix();
        let rows: [[f64; 4]; 4] =
            std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]));
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 4]; 4]>::deserialize(deserializer)?;
        let m = Matrix4::from_fn(|r, c| rows[r][c]);
        RigidTransform::from_matrix(&m).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_matches_matrix_product() {
        let a = RigidTransform::from_axis_angle(
            &Vector3::new(1.0, 2.0, 0.5),
            0.7,
            Vector3::new(0.1, -0.2, 0.3),
        );
        let b = RigidTransform::from_axis_angle(
            &Vector3::new(-0.3, 1.0, 2.0),
            -1.2,
            Vector3::new(1.0, 0.0, -0.5),
        );
        let composed = a.compose(&b);
        let product = a.to_matrix() * b.to_matrix();
        assert_relative_eq!(composed.to_matrix(), product, epsilon = 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let t = RigidTransform::from_axis_angle(
            &Vector3::new(0.2, -0.8, 0.1),
            2.1,
            Vector3::new(-0.4, 0.9, 2.0),
        );
        let id = t.compose(&t.inverse());
        assert_relative_eq!(id.to_matrix(), Matrix4::identity(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_rotation() {
        let scaled = Matrix3::identity() * 2.0;
        assert!(RigidTransform::new(scaled, Vector3::zeros()).is_err());
    }

    #[test]
    fn rejects_bad_bottom_row() {
        let mut m = Matrix4::identity();
        m[(3, 0)] = 0.5;
        assert!(RigidTransform::from_matrix(&m).is_err());
    }

    #[test]
    fn serde_row_major_round_trip() {
        let t = RigidTransform::from_axis_angle(
            &Vector3::new(0.0, 0.0, 1.0),
            std::f64::consts::FRAC_PI_2,
            Vector3::new(1.0, 2.0, 3.0),
        );
        let json = serde_json::to_string(&t).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        // Row-major: translation lives in the last column of each row.
        assert_relative_eq!(parsed[0][3].as_f64().unwrap(), 1.0);
        assert_relative_eq!(parsed[1][3].as_f64().unwrap(), 2.0);
        assert_relative_eq!(parsed[2][3].as_f64().unwrap(), 3.0);
        assert_eq!(parsed[3][3].as_f64().unwrap(), 1.0);
        let back: RigidTransform = serde_json::from_str(&json).unwrap();
        assert_relative_eq!(back.to_matrix(), t.to_matrix(), epsilon = 1e-15);
    }
}
