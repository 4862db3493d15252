//! Z-buffered triangle rasterization with perspective-correct color interpolation.

use nalgebra::Vector2;

use super::scene::{Pose, SceneImage};
use crate::shape::TriMesh;

/// Color used for meshes without vertex colors.
pub const DEFAULT_MESH_COLOR: [u8; 3] = [128, 128, 128];

/// Depth buffer seeded from the image depth, `+∞` where there is none.
pub fn depth_buffer(image: &SceneImage) -> Vec<f64> {
    match &image.depth {
        Some(d) => d.iter().map(|&z| z as f64).collect(),
        None => vec![f64::INFINITY; image.width * image.height],
    }
}

/// `cross(b − a, p − a)` from a canonical endpoint order, so that the two
/// triangles sharing an edge see exactly opposite values.
fn edge(a: &Vector2<f64>, b: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    let f = |a: &Vector2<f64>, b: &Vector2<f64>| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (a.x, a.y) <= (b.x, b.y) {
        f(a, b)
    } else {
        -f(b, a)
    }
}

/// Tie rule for pixel centers exactly on an edge: of the two directions an
/// edge is traversed in, exactly one owns it.
fn owns_edge(a: &Vector2<f64>, b: &Vector2<f64>) -> bool {
    let d = b - a;
    d.y > 0.0 || (d.y == 0.0 && d.x < 0.0)
}

/// Draws `mesh` under `pose` into `image`, testing and updating `zbuf`.
/// Image depth, when present, is updated too. Returns written pixel indices.
pub fn rasterize_into(mesh: &TriMesh, pose: &Pose, image: &mut SceneImage, zbuf: &mut [f64]) -> Vec<usize> {
    let cam = image.calib;
    let (w, h) = (image.width, image.height);
    let world: Vec<_> = mesh.vertices.iter().map(|v| pose.apply(v)).collect();
    let mut written = Vec::new();
    for t in &mesh.triangles {
        let p = t.map(|i| world[i]);
        if p.iter().any(|q| !(q.z > 1e-9)) {
            continue;
        }
        let mut s = p.map(|q| Vector2::new(cam.fx * q.x / q.z + cam.cx, cam.fy * q.y / q.z + cam.cy));
        let mut inv_z = p.map(|q| 1.0 / q.z);
        let mut col = t.map(|i| mesh.colors.as_ref().map_or(DEFAULT_MESH_COLOR, |c| c[i]));
        let mut area = edge(&s[0], &s[1], &s[2]);
        if !(area.abs() > 1e-12) {
            continue;
        }
        if area < 0.0 {
            s.swap(1, 2);
            inv_z.swap(1, 2);
            col.swap(1, 2);
            area = -area;
        }
        let lo = s[0].inf(&s[1]).inf(&s[2]);
        let hi = s[0].sup(&s[1]).sup(&s[2]);
        let x0 = lo.x.ceil().max(0.0);
        let y0 = lo.y.ceil().max(0.0);
        let x1 = hi.x.floor().min(w as f64 - 1.0);
        let y1 = hi.y.floor().min(h as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let edges = [(1, 2), (2, 0), (0, 1)];
        let owned = edges.map(|(a, b)| owns_edge(&s[a], &s[b]));
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let q = Vector2::new(x as f64, y as f64);
                let mut bary = [0.0; 3];
                let mut inside = true;
                for (k, (a, b)) in edges.iter().enumerate() {
                    let e = edge(&s[*a], &s[*b], &q);
                    if e < 0.0 || (e == 0.0 && !owned[k]) {
                        inside = false;
                        break;
                    }
                    bary[k] = e / area;
                }
                if !inside {
                    continue;
                }
                let iz: f64 = (0..3).map(|k| bary[k] * inv_z[k]).sum();
                let z = 1.0 / iz;
                let idx = y * w + x;
                if !(z < zbuf[idx]) {
                    continue;
                }
                zbuf[idx] = z;
                let mut c = [0u8; 3];
                for (ch, out) in c.iter_mut().enumerate() {
                    let v: f64 = (0..3).map(|k| bary[k] * inv_z[k] * col[k][ch] as f64).sum::<f64>() * z;
                    *out = v.round().clamp(0.0, 255.0) as u8;
                }
                image.set_pixel(x, y, c);
                if let Some(d) = image.depth.as_mut() {
                    d[idx] = z as f32;
                }
                written.push(idx);
            }
        }
    }
    written.sort_unstable();
    written.dedup();
    written
}

/// Composites `mesh` onto a copy of `image`.
pub fn rasterize(mesh: &TriMesh, pose: &Pose, image: &SceneImage) -> SceneImage {
    let mut out = image.clone();
    let mut zbuf = depth_buffer(image);
    rasterize_into(mesh, pose, &mut out, &mut zbuf);
    out
}
