//! Mesh → TSDF conversion.
//!
//! Unsigned distances are computed exactly inside the truncation band by
//! splatting each triangle over the voxels within `τ` of its bounds. Signs
//! come from signed crossing counts of +x rays through every voxel row,
//! using a top-left tie rule so rays through shared edges and vertices are
//! counted once.

use nalgebra::{Vector2, Vector3};

use super::{TriMesh, TsdfGrid};
use crate::error::{domain, Error, Result};

/// Default truncation in voxels.
pub const DEFAULT_TRUNCATION_VOXELS: f64 = 3.0;

/// Converts a watertight mesh, centering the grid on the mesh bounds.
pub fn mesh_to_tsdf(mesh: &TriMesh, dims: [usize; 3], voxel_size: f64, truncation: f64) -> Result<TsdfGrid> {
    let Some((lo, hi)) = mesh.bounds() else {
        return domain("cannot convert an empty mesh");
    };
    let center = (lo + hi) * 0.5;
    let half_span = Vector3::new(dims[0] as f64 - 1.0, dims[1] as f64 - 1.0, dims[2] as f64 - 1.0) * (voxel_size * 0.5);
    mesh_to_tsdf_at(mesh, dims, voxel_size, truncation, center - half_span)
}

/// Converts a watertight mesh into a grid with an explicit origin.
pub fn mesh_to_tsdf_at(
    mesh: &TriMesh,
    dims: [usize; 3],
    voxel_size: f64,
    truncation: f64,
    origin: Vector3<f64>,
) -> Result<TsdfGrid> {
    mesh.validate()?;
    if mesh.triangles.is_empty() {
        return domain("mesh has no triangles");
    }
    let mut grid = TsdfGrid::empty(dims, voxel_size, origin, truncation)?;
    let inside = inside_mask(mesh, &grid)?;
    let dist = band_distances(mesh, &grid);
    let t = truncation as f32;
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let idx = grid.index(i, j, k);
                let d = dist[idx].min(t);
                grid.set(i, j, k, if inside[idx] { -d } else { d });
            }
        }
    }
    Ok(grid)
}

/// Exact unsigned distances, capped at `τ`.
fn band_distances(mesh: &TriMesh, grid: &TsdfGrid) -> Vec<f32> {
    let dims = grid.dims();
    let tau = grid.truncation();
    let h = grid.voxel_size();
    let origin = grid.origin();
    let mut dist = vec![tau as f32; grid.len()];
    let range = |lo: f64, hi: f64, axis: usize| -> Option<(usize, usize)> {
        let a = ((lo - tau - origin[axis]) / h).ceil().max(0.0);
        let b = ((hi + tau - origin[axis]) / h).floor().min(dims[axis] as f64 - 1.0);
        (a <= b).then_some((a as usize, b as usize))
    };
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i]);
        let lo = a.inf(&b).inf(&c);
        let hi = a.sup(&b).sup(&c);
        let (Some(rx), Some(ry), Some(rz)) = (range(lo.x, hi.x, 0), range(lo.y, hi.y, 1), range(lo.z, hi.z, 2)) else {
            continue;
        };
        for k in rz.0..=rz.1 {
            for j in ry.0..=ry.1 {
                for i in rx.0..=rx.1 {
                    let p = grid.position(i, j, k);
                    let d = point_triangle_distance(&p, &a, &b, &c) as f32;
                    let idx = grid.index(i, j, k);
                    if d < dist[idx] {
                        dist[idx] = d;
                    }
                }
            }
        }
    }
    dist
}

/// Inside/outside classification from signed +x ray crossings per voxel row.
fn inside_mask(mesh: &TriMesh, grid: &TsdfGrid) -> Result<Vec<bool>> {
    let [nx, ny, nz] = grid.dims();
    let h = grid.voxel_size();
    let origin = grid.origin();
    // bucket triangles by the rows their (y, z) bounds touch
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); ny * nz];
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = t.map(|i| mesh.vertices[i]);
        let (ylo, yhi) = (a.y.min(b.y).min(c.y), a.y.max(b.y).max(c.y));
        let (zlo, zhi) = (a.z.min(b.z).min(c.z), a.z.max(b.z).max(c.z));
        // padded by one row: bounds lying exactly on a row must not be lost to rounding
        let j0 = ((ylo - origin.y) / h).ceil().max(1.0) - 1.0;
        let j1 = ((yhi - origin.y) / h).floor().min(ny as f64 - 2.0) + 1.0;
        let k0 = ((zlo - origin.z) / h).ceil().max(1.0) - 1.0;
        let k1 = ((zhi - origin.z) / h).floor().min(nz as f64 - 2.0) + 1.0;
        if j0 > j1 || k0 > k1 {
            continue;
        }
        for k in k0 as usize..=k1 as usize {
            for j in j0 as usize..=j1 as usize {
                rows[j + ny * k].push(ti);
            }
        }
    }

    let mut inside = vec![false; nx * ny * nz];
    let mut bad_rays = Vec::new();
    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            let p = Vector2::new(origin.y + j as f64 * h, origin.z + k as f64 * h);
            crossings.clear();
            for &ti in &rows[j + ny * k] {
                let t = mesh.triangles[ti];
                let [a, b, c] = t.map(|i| mesh.vertices[i]);
                if let Some(hit) = row_crossing(&p, &a, &b, &c) {
                    crossings.push(hit);
                }
            }
            if crossings.is_empty() {
                continue;
            }
            if crossings.iter().map(|c| c.1).sum::<i32>() != 0 {
                bad_rays.push((j, k));
                continue;
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut winding = 0;
            let mut next = 0;
            for i in 0..nx {
                let x = origin.x + i as f64 * h;
                while next < crossings.len() && crossings[next].0 < x {
                    winding += crossings[next].1;
                    next += 1;
                }
                inside[i + nx * (j + ny * k)] = winding > 0;
            }
        }
    }
    if !bad_rays.is_empty() {
        return Err(Error::SignAmbiguity { rays: bad_rays });
    }
    Ok(inside)
}

/// Intersection of the +x line through `(y, z) = p` with a triangle:
/// `(x, +1)` when entering the solid, `(x, −1)` when leaving.
fn row_crossing(p: &Vector2<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<(f64, i32)> {
    let pa = Vector2::new(a.y, a.z);
    let pb = Vector2::new(b.y, b.z);
    let pc = Vector2::new(c.y, c.z);
    let area = cross2(&(pb - pa), &(pc - pa));
    if area == 0.0 {
        return None;
    }
    // orient the projected triangle counter-clockwise
    let (v, x, sign) = if area > 0.0 {
        ([pa, pb, pc], [a.x, b.x, c.x], -1)
    } else {
        ([pa, pc, pb], [a.x, c.x, b.x], 1)
    };
    let mut w = [0.0; 3];
    for e in 0..3 {
        let (from, to) = (v[(e + 1) % 3], v[(e + 2) % 3]);
        let ew = edge_function(&from, &to, p);
        let d = to - from;
        let top_left = d.y < 0.0 || (d.y == 0.0 && d.x > 0.0);
        if ew < 0.0 || (ew == 0.0 && !top_left) {
            return None;
        }
        w[e] = ew;
    }
    let total = w[0] + w[1] + w[2];
    let xi = (w[0] * x[0] + w[1] * x[1] + w[2] * x[2]) / total;
    Some((xi, sign))
}

/// `cross2(to − from, p − from)` evaluated from a canonical endpoint order, so
/// the two triangles sharing an edge see exactly opposite values.
fn edge_function(from: &Vector2<f64>, to: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    if (from.x, from.y) <= (to.x, to.y) {
        cross2(&(to - from), &(p - from))
    } else {
        -cross2(&(from - to), &(p - to))
    }
}

#[inline]
fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Euclidean distance from `p` to triangle `abc` (closest-point regions).
pub fn point_triangle_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm()
}

fn closest_point_on_triangle(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}
