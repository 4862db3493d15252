use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Rotation quaternion `w + xi + yj + zk`.
///
/// Operations that interpret the quaternion as a rotation assume unit norm;
/// call [`Quaternion::normalize`] on raw regressed values first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn as_vector(self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (angle * 0.5).sin_cos();
        let a = axis / n * s;
        Self::new(c, a.x, a.y, a.z)
    }

    /// Rotation about the camera y axis (the KITTI yaw axis).
    pub fn from_yaw(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::y(), angle)
    }

    pub fn vec(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return domain(format!("cannot normalize quaternion with norm {n}"));
        }
        Ok(Self::new(self.w / n, self.x / n, self.y / n, self.z / n))
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Inverse of a unit quaternion.
    pub fn inverse(&self) -> Self {
        self.conjugate()
    }

    /// `q v q⁻¹` for a unit quaternion.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let u = self.vec();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Shepperd's method; returns the representative with `w >= 0`.
    pub fn from_rotation_matrix(m: &Matrix3<f64>) -> Self {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Self::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        let q = q.normalize().unwrap_or(Self::IDENTITY);
        if q.w < 0.0 {
            -q
        } else {
            q
        }
    }

    /// Geodesic angle between the rotations represented by two unit quaternions.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        // atan2 of the relative rotation stays accurate for tiny angles, unlike acos
        let rel = self.conjugate() * *other;
        2.0 * rel.vec().norm().atan2(rel.w.abs())
    }

    /// Minimal rotation taking unit vector `from` onto unit vector `to`.
    ///
    /// Built from the half-way construction `(1 + a·b, a × b)`, normalized.
    pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Result<Self> {
        let d = from.dot(to);
        if d <= -1.0 + 1e-12 {
            return domain("minimal rotation between antiparallel vectors is undefined");
        }
        let c = from.cross(to);
        Self::new(1.0 + d, c.x, c.y, c.z).normalize()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, r: Quaternion) -> Quaternion {
        let l = self;
        Quaternion::new(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn arb_quat() -> impl Strategy<Value = Quaternion> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
            .prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z).normalize().unwrap())
    }

    #[test]
    fn yaw_quarter_turn_maps_z_to_x() {
        let q = Quaternion::from_yaw(std::f64::consts::FRAC_PI_2);
        let v = q.rotate(&Vector3::z());
        assert_relative_eq!(v, Vector3::x(), epsilon = 1e-12);
    }

    #[test]
    fn antiparallel_minimal_rotation_is_rejected() {
        assert!(Quaternion::rotation_between(&Vector3::z(), &-Vector3::z()).is_err());
    }

    #[test]
    fn zero_quaternion_cannot_be_normalized() {
        assert!(Quaternion::new(0.0, 0.0, 0.0, 0.0).normalize().is_err());
    }

    proptest! {
        #[test]
        fn normalize_yields_unit(q in arb_quat()) {
            prop_assert!((q.norm() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn rotation_preserves_length(q in arb_quat(), x in -10.0..10.0f64, y in -10.0..10.0f64, z in -10.0..10.0f64) {
            let v = Vector3::new(x, y, z);
            prop_assert!((q.rotate(&v).norm() - v.norm()).abs() < 1e-9);
        }

        #[test]
        fn sign_flip_gives_same_matrix(q in arb_quat()) {
            let d = q.to_rotation_matrix() - (-q).to_rotation_matrix();
            prop_assert!(d.abs().max() < 1e-12);
        }

        #[test]
        fn matrix_round_trip(q in arb_quat()) {
            let back = Quaternion::from_rotation_matrix(&q.to_rotation_matrix());
            prop_assert!(back.angle_to(&q) < 1e-7);
        }

        #[test]
        fn rotate_matches_matrix(q in arb_quat(), x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64) {
            let v = Vector3::new(x, y, z);
            prop_assert!((q.rotate(&v) - q.to_rotation_matrix() * v).norm() < 1e-12);
        }

        #[test]
        fn product_composes_rotations(a in arb_quat(), b in arb_quat()) {
            let m = (a * b).to_rotation_matrix() - a.to_rotation_matrix() * b.to_rotation_matrix();
            prop_assert!(m.abs().max() < 1e-12);
        }
    }
}
