//! SE(3) exponential and logarithm maps.
//!
//! Twists are ordered (rotation, translation): `xi = (omega, rho)`.
//! `exp` uses Rodrigues plus the SE(3) V matrix; both ends switch to
//! Taylor series below a small-angle threshold so the round trip is
//! accurate through the identity.

use nalgebra::{Matrix3, Vector3, Vector6};

use crate::geometry::RigidTransform;

const SMALL_ANGLE: f64 = 1e-8;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Twist to rigid transform.
pub fn exp(xi: &Vector6<f64>) -> RigidTransform {
    let omega = Vector3::new(xi[0], xi[1], xi[2]);
    let rho = Vector3::new(xi[3], xi[4], xi[5]);
    let theta = omega.norm();
    let k = skew(&omega);
    let k2 = k * k;

    let (a, b, c) = if theta < SMALL_ANGLE {
        // sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3
        (
            1.0 - theta * theta / 6.0,
            0.5 - theta * theta / 24.0,
            1.0 / 6.0 - theta * theta / 120.0,
        )
    } else {
        let t2 = theta * theta;
        (
            theta.sin() / theta,
            (1.0 - theta.cos()) / t2,
            (theta - theta.sin()) / (t2 * theta),
        )
    };

    let rotation = Matrix3::identity() + a * k + b * k2;
    let v = Matrix3::identity() + b * k + c * k2;
    RigidTransform::from_parts(rotation, v * rho)
}

/// Rigid transform to twist (inverse of [`exp`]).
pub fn log(t: &RigidTransform) -> Vector6<f64> {
    let r = &t.rotation;
    let cos_theta = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();

    let omega = if theta < SMALL_ANGLE {
        // R ~ I + [w]x; antisymmetric part recovers w.
        Vector3::new(
            (r[(2, 1)] - r[(1, 2)]) / 2.0,
            (r[(0, 2)] - r[(2, 0)]) / 2.0,
            (r[(1, 0)] - r[(0, 1)]) / 2.0,
        )
    } else if theta > std::f64::consts::PI - 1e-6 {
        // Near pi the antisymmetric part vanishes; use the diagonal.
        let mut axis = Vector3::zeros();
        let diag = Vector3::new(r[(0, 0)], r[(1, 1)], r[(2, 2)]);
        let k = diag.imax();
        axis[k] = ((diag[k] - cos_theta) / (1.0 - cos_theta)).max(0.0).sqrt();
        let others: [usize; 2] = match k {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        for &j in &others {
            axis[j] = (r[(k, j)] + r[(j, k)]) / (2.0 * (1.0 - cos_theta) * axis[k]);
        }
        // Fix the sign from an antisymmetric entry when it survives.
        let anti = Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        );
        if anti.dot(&axis) < 0.0 {
            axis = -axis;
        }
        axis.normalize() * theta
    } else {
        let anti = Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        );
        anti * (theta / (2.0 * theta.sin()))
    };

    let k = skew(&omega);
    let k2 = k * k;
    let b = if theta < SMALL_ANGLE {
        0.5 - theta * theta / 24.0
    } else {
        (1.0 - theta.cos()) / (theta * theta)
    };
    let c = if theta < SMALL_ANGLE {
        1.0 / 6.0 - theta * theta / 120.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    };
    let v = Matrix3::identity() + b * k + c * k2;
    let rho = v
        .try_inverse()
        .unwrap_or_else(Matrix3::identity)
        * t.translation;

    Vector6::new(omega.x, omega.y, omega.z, rho.x, rho.y, rho.z)
}
