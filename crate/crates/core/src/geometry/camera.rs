use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Pinhole intrinsics `K` in the KITTI camera frame (x right, y down, z forward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !cx.is_finite() || !cy.is_finite() || !fx.is_finite() || !fy.is_finite() {
            return domain(format!("invalid intrinsics fx={fx} fy={fy} cx={cx} cy={cy}"));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Pixel coordinates of a camera-frame point. The caller guarantees `p.z > 0`.
    pub fn project(&self, p: &Vector3<f64>) -> [f64; 2] {
        [self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy]
    }

    /// `K⁻¹ (u·z, v·z, z)`; the returned third coordinate is `z` exactly.
    pub fn backproject(&self, u: f64, v: f64, z: f64) -> Result<Vector3<f64>> {
        if !(z > 0.0) {
            return domain(format!("backprojection needs positive depth, got {z}"));
        }
        Ok(Vector3::new(
            (u - self.cx) * z / self.fx,
            (v - self.cy) * z / self.fy,
            z,
        ))
    }

    /// Unit viewing ray through pixel `(u, v)`.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0).normalize()
    }
}

/// Axis-aligned image rectangle in pixels, `(left, top, right, bottom)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2d {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Rect2d {
    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Self {
        Self {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.right > self.left && self.bottom > self.top
    }

    pub fn intersection(&self, other: &Rect2d) -> Option<Rect2d> {
        let r = Rect2d::new(
            self.left.max(other.left),
            self.top.max(other.top),
            self.right.min(other.right),
            self.bottom.min(other.bottom),
        );
        r.is_valid().then_some(r)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.left && u <= self.right && v >= self.top && v <= self.bottom
    }
}
