use std::f64::consts::PI;

use nalgebra::{Rotation2, Vector2};
use serde::{Deserialize, Serialize};

/// Object pose in the (fixed) gripper frame: translation in m, rotation in rad.
///
/// A point `p` in the object frame sits at `R(theta) p + (x, z)` in the
/// gripper frame. Rotation is measured from +X toward +Z.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GraspPose {
    pub x: f64,
    pub z: f64,
    pub theta: f64,
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

impl GraspPose {
    pub fn new(x: f64, z: f64, theta: f64) -> Self {
        Self {
            x,
            z,
            theta: wrap_angle(theta),
        }
    }

    pub fn from_mm_deg(x_mm: f64, z_mm: f64, theta_deg: f64) -> Self {
        Self::new(x_mm * 1e-3, z_mm * 1e-3, theta_deg.to_radians())
    }

    pub fn to_mm_deg(self) -> [f64; 3] {
        [self.x * 1e3, self.z * 1e3, self.theta.to_degrees()]
    }

    pub fn translation(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.z)
    }

    /// Right-handed about the gripper Y axis: positive theta turns +x toward -z.
    pub fn rotation(&self) -> Rotation2<f64> {
        Rotation2::new(-self.theta)
    }

    pub fn to_gripper(&self, p: Vector2<f64>) -> Vector2<f64> {
        self.rotation() * p + self.translation()
    }

    pub fn to_object(&self, p: Vector2<f64>) -> Vector2<f64> {
        self.rotation().inverse() * (p - self.translation())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite() && self.theta.is_finite()
    }

    /// Reflection about the gripper Z axis.
    pub fn mirrored(&self) -> Self {
        Self::new(-self.x, self.z, -self.theta)
    }

    /// Moves a fraction `s` of the way to `to`, rotating the short way round.
    pub fn interpolate(&self, to: &GraspPose, s: f64) -> GraspPose {
        GraspPose::new(
            self.x + (to.x - self.x) * s,
            self.z + (to.z - self.z) * s,
            self.theta + wrap_angle(to.theta - self.theta) * s,
        )
    }
}

/// Weighted planar pose distance; `rotation_weight` converts rad to m.
pub fn distance(a: &GraspPose, b: &GraspPose, rotation_weight: f64) -> f64 {
    let dx = b.x - a.x;
    let dz = b.z - a.z;
    let dth = rotation_weight * wrap_angle(b.theta - a.theta);
    (dx * dx + dz * dz + dth * dth).sqrt()
}
