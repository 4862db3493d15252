//! Metric corner loss and its analytic gradient through the lifting map.

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Box3D, CameraIntrinsics, ExtentStats, LiftParams, Quaternion, CORNER_SIGNS};

/// Mean Euclidean distance between corresponding corners.
pub fn corner_loss(pred: &Box3D, target: &Box3D) -> f64 {
    pred.corners
        .iter()
        .zip(&target.corners)
        .map(|(p, t)| (p - t).norm())
        .sum::<f64>()
        / 8.0
}

/// Euclidean norms of the four gradient blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GradMagnitudes {
    pub rotation: f64,
    pub centroid: f64,
    pub depth: f64,
    pub extents: f64,
}

/// Corner loss together with its gradient split by lifting component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// With respect to the allocentric quaternion, projected onto the sphere's tangent space.
    pub grad_q: [f64; 4],
    /// With respect to `(u, v)` in pixels.
    pub grad_uv: [f64; 2],
    pub grad_z: f64,
    /// With respect to the extent deviations `(dw, dh, dl)`.
    pub grad_whl: [f64; 3],
    pub magnitudes: GradMagnitudes,
}

impl LossBreakdown {
    /// Gradient in the order `(qw, qx, qy, qz, u, v, z, dw, dh, dl)`.
    pub fn flat(&self) -> [f64; 10] {
        let (q, uv, e) = (self.grad_q, self.grad_uv, self.grad_whl);
        [q[0], q[1], q[2], q[3], uv[0], uv[1], self.grad_z, e[0], e[1], e[2]]
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient of `⟨h, R(q) p⟩` with respect to the components of a unit quaternion,
/// using `R(q) p = p + 2w (v × p) + 2 v × (v × p)`.
fn rotation_vjp(q: &Quaternion, p: &Vector3<f64>, h: &Vector3<f64>) -> Vector4<f64> {
    let (w, v) = (q.w, q.vec());
    let gw = 2.0 * v.cross(p).dot(h);
    let gv = 2.0 * w * p.cross(h) + 2.0 * v.dot(p) * h + 2.0 * v.dot(h) * p - 4.0 * p.dot(h) * v;
    Vector4::new(gw, gv.x, gv.y, gv.z)
}

fn project_tangent(g: &Vector4<f64>, q: &Vector4<f64>) -> Vector4<f64> {
    g - q * g.dot(q)
}

/// Corner loss of `lift(params)` against `target` with its analytic gradient.
///
/// The chain rule runs through the translation `K⁻¹(u·z, v·z, z)`, the
/// rotated extents and the view rotation that turns the allocentric
/// quaternion egocentric, which couples the quaternion with `(u, v)`.
/// Corners that coincide with their target contribute a zero subgradient.
pub fn corner_loss_grad(
    params: &LiftParams,
    target: &Box3D,
    stats: &ExtentStats,
    cam: &CameraIntrinsics,
) -> Result<LossBreakdown> {
    params.validate(stats)?;
    let q_allo = params.q_allo.normalize()?;
    let extents = stats.resolve(params.deviation)?;
    let std = stats.std();

    let (u, v, z) = (params.u, params.v, params.z);
    let m = Vector3::new((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
    let m_norm = m.norm();
    let ray = m / m_norm;
    // unnormalized half-way quaternion from the optical axis to the ray
    let qv_raw = Vector4::new(1.0 + ray.z, -ray.y, ray.x, 0.0);
    let qv_raw_norm = qv_raw.norm();
    let q_view = Quaternion::from_vector(&(qv_raw / qv_raw_norm));

    let r_view = q_view.to_rotation_matrix();
    let r_allo = q_allo.to_rotation_matrix();
    let r_ego: Matrix3<f64> = r_view * r_allo;
    let t = m * z;

    let half = Vector3::new(extents[0], extents[1], extents[2]) * 0.5;
    let mut total = 0.0;
    let mut g_t = Vector3::zeros();
    let mut g_q_allo = Vector4::zeros();
    let mut g_q_view = Vector4::zeros();
    let mut g_dev = [0.0; 3];
    for (signs, tc) in CORNER_SIGNS.iter().zip(&target.corners) {
        let s = Vector3::new(signs[0], signs[1], signs[2]);
        let local = s.component_mul(&half);
        let p = r_allo * local;
        let c = r_view * p + t;
        let diff = c - tc;
        let d = diff.norm();
        total += d;
        if d == 0.0 {
            continue;
        }
        let g = diff / (8.0 * d);
        g_t += g;
        let h_view = r_view.transpose() * g;
        g_q_allo += rotation_vjp(&q_allo, &local, &h_view);
        g_q_view += rotation_vjp(&q_view, &p, &g);
        let g_local = r_ego.transpose() * g;
        for k in 0..3 {
            g_dev[k] += g_local[k] * s[k] * 0.5 * std[k];
        }
    }
    total /= 8.0;

    let grad_q = project_tangent(&g_q_allo, &q_allo.as_vector());

    // view quaternion → half-way vector → ray → pixel coordinates
    let g_qv_raw = project_tangent(&g_q_view, &q_view.as_vector()) / qv_raw_norm;
    let g_ray = Vector3::new(g_qv_raw[2], -g_qv_raw[1], g_qv_raw[0]);
    let g_m = (g_ray - ray * ray.dot(&g_ray)) / m_norm;
    let grad_u = g_m.x / cam.fx + g_t.x * z / cam.fx;
    let grad_v = g_m.y / cam.fy + g_t.y * z / cam.fy;
    let grad_z = g_t.dot(&m);

    let grad_q = [grad_q[0], grad_q[1], grad_q[2], grad_q[3]];
    let grad_uv = [grad_u, grad_v];
    Ok(LossBreakdown {
        total,
        grad_q,
        grad_uv,
        grad_z,
        grad_whl: g_dev,
        magnitudes: GradMagnitudes {
            rotation: norm(&grad_q),
            centroid: norm(&grad_uv),
            depth: grad_z.abs(),
            extents: norm(&g_dev),
        },
    })
}
