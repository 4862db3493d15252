//! The 10D box parametrization and the lifting map from regressed
//! parameters to eight ordered metric corners.
//!
//! Object frame: x spans the width `w`, y the height `h`, z the length `l`.
//! Corner `i` sits at `R · (sx·w/2, sy·h/2, sz·l/2) + t` with the sign
//! triple taken from [`CORNER_SIGNS`]: `(+,+,+), (+,+,−), (+,−,+), (+,−,−),
//! (−,+,+), (−,+,−), (−,−,+), (−,−,−)`. Corners `i` and `7 − i` are opposite.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{CameraIntrinsics, Quaternion, Rect2d};
use crate::error::{domain, Result};
use crate::shape::LatentShape;

/// Sign pattern over `(w, h, l) / 2` for each corner index.
pub const CORNER_SIGNS: [[f64; 3]; 8] = [
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [-1.0, -1.0, -1.0],
];

/// Dataset-wide extent statistics used to decode extent deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtentStats {
    pub mean_w: f64,
    pub mean_h: f64,
    pub mean_l: f64,
    pub std_w: f64,
    pub std_h: f64,
    pub std_l: f64,
}

impl ExtentStats {
    /// `mean` and `std` are ordered `(w, h, l)`.
    pub fn new(mean: [f64; 3], std: [f64; 3]) -> Result<Self> {
        if std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return domain(format!("degenerate extent statistics: std {std:?} must be positive"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return domain("extent means must be finite");
        }
        Ok(Self {
            mean_w: mean[0],
            mean_h: mean[1],
            mean_l: mean[2],
            std_w: std[0],
            std_h: std[1],
            std_l: std[2],
        })
    }

    pub fn mean(&self) -> [f64; 3] {
        [self.mean_w, self.mean_h, self.mean_l]
    }

    pub fn std(&self) -> [f64; 3] {
        [self.std_w, self.std_h, self.std_l]
    }

    /// Metric `(w, h, l)` from deviations expressed in standard deviations.
    pub fn resolve(&self, deviation: [f64; 3]) -> Result<[f64; 3]> {
        let (m, s) = (self.mean(), self.std());
        let e = [0, 1, 2].map(|k| m[k] + deviation[k] * s[k]);
        if e.iter().any(|x| !(*x > 0.0)) {
            return domain(format!("resolved extents {e:?} are not all positive"));
        }
        Ok(e)
    }

    pub fn deviation(&self, extents: [f64; 3]) -> [f64; 3] {
        let (m, s) = (self.mean(), self.std());
        [0, 1, 2].map(|k| (extents[k] - m[k]) / s[k])
    }
}

/// Regression target of the lifting head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftParams {
    /// Allocentric rotation, relative to the viewing ray through `(u, v)`.
    pub q_allo: Quaternion,
    /// Projected 3D centroid in pixels.
    pub u: f64,
    pub v: f64,
    /// Centroid depth in meters.
    pub z: f64,
    /// Extent deviations `(dw, dh, dl)` in multiples of the dataset std.
    pub deviation: [f64; 3],
    pub shape: LatentShape,
}

impl LiftParams {
    pub fn validate(&self, stats: &ExtentStats) -> Result<()> {
        if !(self.z > 0.0) {
            return domain(format!("depth must be positive, got {}", self.z));
        }
        stats.resolve(self.deviation)?;
        Ok(())
    }
}

/// Eight ordered corners in the camera frame (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub corners: [Vector3<f64>; 8],
}

/// Rigid pose and extents recovered from a [`Box3D`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPose {
    pub rotation: Quaternion,
    pub centroid: Vector3<f64>,
    /// `(w, h, l)`
    pub extents: [f64; 3],
}

impl Box3D {
    /// Corners of a box with the given orientation, centroid and `(w, h, l)`.
    pub fn from_pose(rotation: &Matrix3<f64>, centroid: &Vector3<f64>, extents: [f64; 3]) -> Self {
        let half = Vector3::new(extents[0], extents[1], extents[2]) * 0.5;
        let corners = CORNER_SIGNS.map(|s| {
            let local = Vector3::new(s[0], s[1], s[2]).component_mul(&half);
            rotation * local + centroid
        });
        Self { corners }
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.corners.iter().sum::<Vector3<f64>>() / 8.0
    }

    /// Object axes in the camera frame, scaled by the full extent along each.
    fn axes(&self) -> [Vector3<f64>; 3] {
        let c = &self.corners;
        // corner 0 is (+,+,+); flipping one sign at a time gives corners 4, 2, 1
        [c[0] - c[4], c[0] - c[2], c[0] - c[1]]
    }

    /// `(w, h, l)`
    pub fn extents(&self) -> [f64; 3] {
        self.axes().map(|a| a.norm())
    }

    /// Orientation, centroid and extents; the rotation is orthonormalized.
    pub fn recover(&self) -> BoxPose {
        let axes = self.axes();
        let extents = axes.map(|a| a.norm());
        let m = Matrix3::from_columns(&[axes[0] / extents[0], axes[1] / extents[1], axes[2] / extents[2]]);
        // nearest rotation through the polar decomposition
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u2 = u;
            u2.column_mut(2).neg_mut();
            r = u2 * vt;
        }
        BoxPose {
            rotation: Quaternion::from_rotation_matrix(&r),
            centroid: self.centroid(),
            extents,
        }
    }

    /// Heading about the camera y axis under the KITTI `rotation_y` convention
    /// used by [`crate::kitti::record_to_box3d`].
    pub fn yaw(&self) -> f64 {
        let x_axis = self.axes()[0];
        wrap_angle((-x_axis.z).atan2(x_axis.x))
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self {
            corners: self.corners.map(|c| c + offset),
        }
    }

    /// `(min, max)` of the camera-frame y coordinate over all corners.
    pub fn y_range(&self) -> (f64, f64) {
        self.corners
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.y), hi.max(c.y)))
    }
}

/// Minimal rotation from the optical axis onto `ray`.
pub fn view_rotation(ray: &Vector3<f64>) -> Result<Quaternion> {
    let n = ray.norm();
    if !(n > 0.0) {
        return domain("viewing ray must be non-zero");
    }
    Quaternion::rotation_between(&Vector3::z(), &(ray / n))
}

/// Egocentric rotation of an object seen along `ray` with allocentric rotation `q_allo`.
pub fn allo_to_ego(q_allo: &Quaternion, ray: &Vector3<f64>) -> Result<Quaternion> {
    Ok(view_rotation(ray)? * *q_allo)
}

pub fn ego_to_allo(q_ego: &Quaternion, ray: &Vector3<f64>) -> Result<Quaternion> {
    Ok(view_rotation(ray)?.inverse() * *q_ego)
}

/// Builds the eight ordered corners from regressed parameters.
pub fn lift(params: &LiftParams, stats: &ExtentStats, cam: &CameraIntrinsics) -> Result<Box3D> {
    params.validate(stats)?;
    let extents = stats.resolve(params.deviation)?;
    let q_allo = params.q_allo.normalize()?;
    let ray = cam.ray(params.u, params.v);
    let q_ego = allo_to_ego(&q_allo, &ray)?;
    let t = cam.backproject(params.u, params.v, params.z)?;
    Ok(Box3D::from_pose(&q_ego.to_rotation_matrix(), &t, extents))
}

/// Inverse of [`lift`]: the parameters that reproduce `target` exactly.
pub fn recover_lift_params(
    target: &Box3D,
    stats: &ExtentStats,
    cam: &CameraIntrinsics,
    shape: LatentShape,
) -> Result<LiftParams> {
    let pose = target.recover();
    if !(pose.centroid.z > 0.0) {
        return domain("box centroid is behind the camera");
    }
    let [u, v] = cam.project(&pose.centroid);
    let ray = cam.ray(u, v);
    let q_allo = ego_to_allo(&pose.rotation, &ray)?.normalize()?;
    Ok(LiftParams {
        q_allo,
        u,
        v,
        z: pose.centroid.z,
        deviation: stats.deviation(pose.extents),
        shape,
    })
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// KITTI observation angle `α = rotation_y − atan2(x, z)`.
pub fn alpha_from_rotation_y(rotation_y: f64, location: &Vector3<f64>) -> f64 {
    wrap_angle(rotation_y - location.x.atan2(location.z))
}

pub fn rotation_y_from_alpha(alpha: f64, location: &Vector3<f64>) -> f64 {
    wrap_angle(alpha + location.x.atan2(location.z))
}

/// Tight image rectangle around the eight projected corners.
pub fn project_box(b: &Box3D, cam: &CameraIntrinsics) -> Result<Rect2d> {
    let mut r = Rect2d::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in &b.corners {
        if !(c.z > 0.0) {
            return domain(format!("corner {c:?} lies behind the camera"));
        }
        let [u, v] = cam.project(c);
        r.left = r.left.min(u);
        r.top = r.top.min(v);
        r.right = r.right.max(u);
        r.bottom = r.bottom.max(v);
    }
    Ok(r)
}
