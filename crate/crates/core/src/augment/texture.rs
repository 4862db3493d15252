//! Projective texturing with mirror completion across the object's lateral plane.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::scene::{Pose, SceneImage};
use crate::shape::TriMesh;

/// Color of vertices that neither face the camera nor have a facing mirror partner.
pub const SENTINEL_COLOR: [u8; 3] = [255, 0, 0];

/// Index of each vertex's mirror image `(−x, y, z)` within `tol`, if any.
pub fn mirror_partners(vertices: &[Vector3<f64>], tol: f64) -> Vec<Option<usize>> {
    let key = |p: &Vector3<f64>| ((p.x / tol).round() as i64, (p.y / tol).round() as i64, (p.z / tol).round() as i64);
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, v) in vertices.iter().enumerate() {
        cells.entry(key(v)).or_default().push(i);
    }
    vertices
        .iter()
        .map(|v| {
            let m = Vector3::new(-v.x, v.y, v.z);
            let (kx, ky, kz) = key(&m);
            let mut best: Option<(usize, f64)> = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        for &j in cells.get(&(kx + dx, ky + dy, kz + dz)).into_iter().flatten() {
                            let d = (vertices[j] - m).norm();
                            if d <= tol && best.map_or(true, |(_, b)| d < b) {
                                best = Some((j, d));
                            }
                        }
                    }
                }
            }
            best.map(|(j, _)| j)
        })
        .collect()
}

/// Colors camera-facing vertices from the image and completes the rest by symmetry.
///
/// A vertex faces the camera when its posed normal points against the
/// viewing ray. Facing vertices that project outside the image are treated
/// as unresolved.
pub fn texture_mesh(mesh: &TriMesh, pose: &Pose, image: &SceneImage) -> TriMesh {
    let normals = mesh.vertex_normals();
    let r = pose.matrix();
    let cam = &image.calib;
    let direct: Vec<Option<[u8; 3]>> = mesh
        .vertices
        .iter()
        .zip(&normals)
        .map(|(v, n)| {
            let p = pose.apply(v);
            if !(p.z > 0.0) || (r * n).dot(&p) >= 0.0 {
                return None;
            }
            let [u, vv] = cam.project(&p);
            image
                .sample_bilinear(u, vv)
                .map(|c| c.map(|x| x.round().clamp(0.0, 255.0) as u8))
        })
        .collect();
    let scale = mesh
        .bounds()
        .map_or(1.0, |(lo, hi)| (hi - lo).norm().max(1e-12));
    let partners = mirror_partners(&mesh.vertices, 1e-6 * scale);
    let colors = direct
        .iter()
        .zip(&partners)
        .map(|(d, m)| d.or_else(|| m.and_then(|j| direct[j])).unwrap_or(SENTINEL_COLOR))
        .collect();
    TriMesh {
        vertices: mesh.vertices.clone(),
        triangles: mesh.triangles.clone(),
        colors: Some(colors),
    }
}
