//! Level-set extraction.
//!
//! Each grid cube is split into six tetrahedra around its main diagonal;
//! every cube uses the same split, so faces shared by neighbouring cubes are
//! triangulated identically and the output is watertight. Edge vertices are
//! shared between cells and placed by linear interpolation. Triangles are
//! wound so their normals point towards values above the level (outward for
//! a negative-inside TSDF).

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{TriMesh, TsdfGrid};
use crate::error::{Error, Result};

const CUBE_OFFSETS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

const TETRAHEDRA: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 3, 2, 7],
    [0, 2, 6, 7],
    [0, 6, 4, 7],
    [0, 4, 5, 7],
    [0, 5, 1, 7],
];

struct Extractor<'a> {
    grid: &'a TsdfGrid,
    level: f64,
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    edge_vertex: HashMap<(usize, usize), usize>,
}

impl Extractor<'_> {
    fn node_position(&self, node: usize) -> Vector3<f64> {
        let [nx, ny, _] = self.grid.dims();
        let (i, j, k) = (node % nx, (node / nx) % ny, node / (nx * ny));
        self.grid.position(i, j, k)
    }

    fn edge_point(&mut self, a: usize, b: usize) -> usize {
        let (a, b) = (a.min(b), a.max(b));
        if let Some(&v) = self.edge_vertex.get(&(a, b)) {
            return v;
        }
        let va = self.grid.values()[a] as f64;
        let vb = self.grid.values()[b] as f64;
        let t = (self.level - va) / (vb - va);
        let pa = self.node_position(a);
        let pb = self.node_position(b);
        let p = pa + (pb - pa) * t;
        self.vertices.push(p);
        let id = self.vertices.len() - 1;
        self.edge_vertex.insert((a, b), id);
        id
    }

    fn emit(&mut self, tri: [usize; 3], toward_positive: &Vector3<f64>) {
        let [a, b, c] = tri.map(|i| self.vertices[i]);
        let n = (b - a).cross(&(c - a));
        if n.dot(toward_positive) >= 0.0 {
            self.triangles.push(tri);
        } else {
            self.triangles.push([tri[0], tri[2], tri[1]]);
        }
    }

    fn tetrahedron(&mut self, nodes: [usize; 4]) {
        let values = nodes.map(|n| self.grid.values()[n] as f64);
        let below: Vec<usize> = (0..4).filter(|&i| values[i] < self.level).collect();
        let above: Vec<usize> = (0..4).filter(|&i| values[i] >= self.level).collect();
        if below.is_empty() || above.is_empty() {
            return;
        }
        let centroid = |idx: &[usize], ex: &Self| -> Vector3<f64> {
            idx.iter().map(|&i| ex.node_position(nodes[i])).sum::<Vector3<f64>>() / idx.len() as f64
        };
        let direction = centroid(&above, self) - centroid(&below, self);
        match (below.len(), above.len()) {
            (1, 3) | (3, 1) => {
                let (lone, others) = if below.len() == 1 { (below[0], &above) } else { (above[0], &below) };
                let tri = [0, 1, 2].map(|k| self.edge_point(nodes[lone], nodes[others[k]]));
                self.emit(tri, &direction);
            }
            (2, 2) => {
                // the pair holding local vertex 0 goes first so a negated grid emits the same vertices
                let (first, second) = if below[0] == 0 { (&below, &above) } else { (&above, &below) };
                let (a, b, c, d) = (nodes[first[0]], nodes[first[1]], nodes[second[0]], nodes[second[1]]);
                let ac = self.edge_point(a, c);
                let ad = self.edge_point(a, d);
                let bd = self.edge_point(b, d);
                let bc = self.edge_point(b, c);
                self.emit([ac, ad, bd], &direction);
                self.emit([ac, bd, bc], &direction);
            }
            _ => unreachable!(),
        }
    }
}

/// Triangulates the `level` set of `grid` in the grid's metric frame.
pub fn marching_cubes(grid: &TsdfGrid, level: f64) -> Result<TriMesh> {
    let values = grid.values();
    let has_below = values.iter().any(|&v| (v as f64) < level);
    let has_above = values.iter().any(|&v| (v as f64) >= level);
    if !has_below || !has_above {
        return Err(Error::EmptySurface);
    }
    let [nx, ny, nz] = grid.dims();
    let mut ex = Extractor {
        grid,
        level,
        vertices: Vec::new(),
        triangles: Vec::new(),
        edge_vertex: HashMap::new(),
    };
    for k in 0..nz.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            for i in 0..nx.saturating_sub(1) {
                let corners = CUBE_OFFSETS.map(|o| grid.index(i + o[0], j + o[1], k + o[2]));
                let below = corners.iter().filter(|&&c| (values[c] as f64) < level).count();
                if below == 0 || below == 8 {
                    continue;
                }
                for tet in TETRAHEDRA {
                    ex.tetrahedron(tet.map(|t| corners[t]));
                }
            }
        }
    }
    let mut mesh = TriMesh {
        vertices: ex.vertices,
        triangles: ex.triangles,
        colors: None,
    };
    mesh.remove_degenerate();
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_grid(n: usize, h: f64, r: f64) -> TsdfGrid {
        let o = -(n as f64 - 1.0) * h / 2.0;
        TsdfGrid::from_fn([n, n, n], h, Vector3::new(o, o, o), 3.0 * h, |p| p.norm() - r).unwrap()
    }

    #[test]
    fn sphere_vertices_near_radius() {
        let g = sphere_grid(32, 0.1, 1.0);
        let m = marching_cubes(&g, 0.0).unwrap();
        assert!(!m.triangles.is_empty());
        for v in &m.vertices {
            assert!((v.norm() - 1.0).abs() < g.voxel_diagonal());
        }
        // outward winding
        for t in &m.triangles {
            let [a, b, c] = t.map(|i| m.vertices[i]);
            assert!((b - a).cross(&(c - a)).dot(&(a + b + c)) > 0.0);
        }
    }

    #[test]
    fn plane_is_exact() {
        let c = 0.537;
        let g = TsdfGrid::from_fn([12, 9, 7], 0.2, Vector3::zeros(), 10.0, |p| p.x - c).unwrap();
        let m = marching_cubes(&g, 0.0).unwrap();
        assert!(!m.vertices.is_empty());
        for v in &m.vertices {
            assert!((v.x - c).abs() < 1e-6);
        }
        for t in &m.triangles {
            let [a, b, cc] = t.map(|i| m.vertices[i]);
            assert!((b - a).cross(&(cc - a)).x > 0.0);
        }
    }

    #[test]
    fn sign_flip_inverts_winding() {
        let g = sphere_grid(20, 0.13, 0.9);
        let m = marching_cubes(&g, 0.0).unwrap();
        let f = marching_cubes(&g.negated(), 0.0).unwrap();
        assert_eq!(m.vertices, f.vertices);
        assert_eq!(m.flipped().triangles, f.triangles);
    }

    #[test]
    fn single_sign_grid_has_no_surface() {
        let g = TsdfGrid::empty([4, 4, 4], 1.0, Vector3::zeros(), 1.0).unwrap();
        assert!(matches!(marching_cubes(&g, 0.0), Err(Error::EmptySurface)));
    }

    #[test]
    fn output_is_closed() {
        let g = sphere_grid(24, 0.1, 0.8);
        let m = marching_cubes(&g, 0.0).unwrap();
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for t in &m.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
        }
        assert!(edges.values().all(|&v| v == 0));
    }
}
