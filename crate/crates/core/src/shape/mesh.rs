use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Indexed triangle mesh with optional per-vertex RGB.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub colors: Option<Vec<[u8; 3]>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let m = Self {
            vertices,
            triangles,
            colors: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::Domain(format!("triangle {t:?} indexes past {n} vertices")));
        }
        if let Some(c) = &self.colors {
            if c.len() != n {
                return Err(Error::Domain(format!("{} colors for {n} vertices", c.len())));
            }
        }
        Ok(())
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Drops triangles whose area is at most `1e-12`.
    pub fn remove_degenerate(&mut self) {
        let keep: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .copied()
            .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2] && self.triangle_area(t) > 1e-12)
            .collect();
        self.triangles = keep;
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    /// Area-weighted vertex normals (outward for counter-clockwise winding).
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.vertices.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            let n = (b - a).cross(&(c - a));
            for &i in t {
                normals[i] += n;
            }
        }
        normals
            .into_iter()
            .map(|n| {
                let l = n.norm();
                if l > 0.0 {
                    n / l
                } else {
                    n
                }
            })
            .collect()
    }

    pub fn with_uniform_color(mut self, rgb: [u8; 3]) -> Self {
        self.colors = Some(vec![rgb; self.vertices.len()]);
        self
    }

    /// Reverses the winding of every triangle.
    pub fn flipped(&self) -> Self {
        let mut m = self.clone();
        for t in &mut m.triangles {
            t.swap(1, 2);
        }
        m
    }

    /// Icosahedron subdivided `levels` times and pushed onto a sphere.
    pub fn icosphere(radius: f64, levels: usize) -> Self {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vector3<f64>> = [
            (-1.0, p, 0.0),
            (1.0, p, 0.0),
            (-1.0, -p, 0.0),
            (1.0, -p, 0.0),
            (0.0, -1.0, p),
            (0.0, 1.0, p),
            (0.0, -1.0, -p),
            (0.0, 1.0, -p),
            (p, 0.0, -1.0),
            (p, 0.0, 1.0),
            (-p, 0.0, -1.0),
            (-p, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
        .collect();
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..levels {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for [a, b, c] in triangles {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            triangles = next;
        }
        Self {
            vertices: vertices.into_iter().map(|v| v * radius).collect(),
            triangles,
            colors: None,
        }
    }

    /// Closed axis-aligned box centered at the origin, outward winding.
    pub fn cuboid(half: Vector3<f64>) -> Self {
        let vertices: Vec<Vector3<f64>> = (0..8)
            .map(|i| {
                Vector3::new(
                    if i & 1 == 0 { -half.x } else { half.x },
                    if i & 2 == 0 { -half.y } else { half.y },
                    if i & 4 == 0 { -half.z } else { half.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 4, 6],
            [0, 6, 2],
            [1, 3, 7],
            [1, 7, 5],
            [0, 1, 5],
            [0, 5, 4],
            [2, 6, 7],
            [2, 7, 3],
            [0, 2, 3],
            [0, 3, 1],
            [4, 5, 7],
            [4, 7, 6],
        ];
        Self {
            vertices,
            triangles,
            colors: None,
        }
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// ASCII PLY; per-vertex `uchar` RGB is written when colors are present.
    pub fn write_ply<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ply\nformat ascii 1.0")?;
        writeln!(w, "element vertex {}", self.vertices.len())?;
        writeln!(w, "property double x\nproperty double y\nproperty double z")?;
        if self.colors.is_some() {
            writeln!(w, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
        }
        writeln!(w, "element face {}", self.triangles.len())?;
        writeln!(w, "property list uchar int vertex_indices\nend_header")?;
        for (i, v) in self.vertices.iter().enumerate() {
            match &self.colors {
                Some(c) => writeln!(w, "{} {} {} {} {} {}", v.x, v.y, v.z, c[i][0], c[i][1], c[i][2])?,
                None => writeln!(w, "{} {} {}", v.x, v.y, v.z)?,
            }
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    /// Reads the ASCII PLY layout produced by [`TriMesh::write_ply`]
    /// (float or double coordinates, optional uchar RGB, triangle faces).
    pub fn read_ply<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format("unexpected end of PLY".into()))?
                .map_err(Error::from)
        };
        if next_line()?.trim() != "ply" {
            return Err(Error::Format("missing PLY magic".into()));
        }
        let (mut n_vertex, mut n_face) = (0usize, 0usize);
        let mut vertex_props: Vec<String> = Vec::new();
        let mut current = String::new();
        loop {
            let line = next_line()?;
            let tok: Vec<&str> = line.split_whitespace().collect();
            match tok.as_slice() {
                ["format", fmt, ..] if *fmt != "ascii" => {
                    return Err(Error::Format(format!("unsupported PLY format {fmt}")))
                }
                ["element", name, count] => {
                    let count: usize = count.parse().map_err(|_| Error::Format(line.clone()))?;
                    current = name.to_string();
                    match *name {
                        "vertex" => n_vertex = count,
                        "face" => n_face = count,
                        _ => {}
                    }
                }
                ["property", _, name] if current == "vertex" => vertex_props.push(name.to_string()),
                ["end_header"] => break,
                _ => {}
            }
        }
        let idx = |name: &str| vertex_props.iter().position(|p| p == name);
        let (ix, iy, iz) = match (idx("x"), idx("y"), idx("z")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::Format("PLY vertex lacks x/y/z".into())),
        };
        let rgb = match (idx("red"), idx("green"), idx("blue")) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        let mut vertices = Vec::with_capacity(n_vertex);
        let mut colors = rgb.map(|_| Vec::with_capacity(n_vertex));
        for _ in 0..n_vertex {
            let line = next_line()?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad PLY value {t}"))))
                .collect::<Result<_>>()?;
            if vals.len() < vertex_props.len() {
                return Err(Error::Format(format!("short PLY vertex line: {line}")));
            }
            vertices.push(Vector3::new(vals[ix], vals[iy], vals[iz]));
            if let (Some((r, g, b)), Some(c)) = (rgb, colors.as_mut()) {
                c.push([vals[r] as u8, vals[g] as u8, vals[b] as u8]);
            }
        }
        let mut triangles = Vec::with_capacity(n_face);
        for _ in 0..n_face {
            let line = next_line()?;
            let vals: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| Error::Format(format!("bad PLY index {t}"))))
                .collect::<Result<_>>()?;
            if vals.first() != Some(&3) || vals.len() != 4 {
                return Err(Error::Format(format!("only triangle faces are supported: {line}")));
            }
            triangles.push([vals[1], vals[2], vals[3]]);
        }
        let mesh = Self {
            vertices,
            triangles,
            colors,
        };
        mesh.validate()?;
        Ok(mesh)
    }
}
