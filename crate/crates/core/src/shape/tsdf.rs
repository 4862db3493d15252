use std::io::{Read, Write};

use nalgebra::Vector3;

use crate::error::{domain, Error, Result};

/// Default grid resolution of the shape space.
pub const DEFAULT_DIMS: [usize; 3] = [128, 128, 256];

const MAGIC: &[u8; 4] = b"TSDF";

/// Truncated signed distance volume, negative inside.
///
/// Sample `(i, j, k)` sits at `origin + voxel_size · (i, j, k)` and is stored
/// at `i + nx·(j + ny·k)` (x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct TsdfGrid {
    dims: [usize; 3],
    voxel_size: f64,
    origin: Vector3<f64>,
    truncation: f64,
    values: Vec<f32>,
}

impl TsdfGrid {
    /// Grid filled with `+truncation` (empty space).
    pub fn empty(dims: [usize; 3], voxel_size: f64, origin: Vector3<f64>, truncation: f64) -> Result<Self> {
        let n = Self::check_layout(dims, voxel_size, truncation)?;
        Ok(Self {
            dims,
            voxel_size,
            origin,
            truncation,
            values: vec![truncation as f32; n],
        })
    }

    /// Values are clamped into `[−τ, τ]`.
    pub fn from_values(
        dims: [usize; 3],
        voxel_size: f64,
        origin: Vector3<f64>,
        truncation: f64,
        mut values: Vec<f32>,
    ) -> Result<Self> {
        let n = Self::check_layout(dims, voxel_size, truncation)?;
        if values.len() != n {
            return domain(format!("{} values for dims {dims:?}", values.len()));
        }
        let t = truncation as f32;
        for v in &mut values {
            if v.is_nan() {
                return domain("TSDF values must not be NaN");
            }
            *v = v.clamp(-t, t);
        }
        Ok(Self {
            dims,
            voxel_size,
            origin,
            truncation,
            values,
        })
    }

    /// Samples `f(position)` at every voxel, clamped to `±τ`.
    pub fn from_fn(
        dims: [usize; 3],
        voxel_size: f64,
        origin: Vector3<f64>,
        truncation: f64,
        f: impl Fn(&Vector3<f64>) -> f64,
    ) -> Result<Self> {
        let mut g = Self::empty(dims, voxel_size, origin, truncation)?;
        let t = truncation;
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = g.position(i, j, k);
                    let idx = g.index(i, j, k);
                    g.values[idx] = f(&p).clamp(-t, t) as f32;
                }
            }
        }
        Ok(g)
    }

    fn check_layout(dims: [usize; 3], voxel_size: f64, truncation: f64) -> Result<usize> {
        if dims.iter().any(|&d| d == 0) {
            return domain(format!("grid dims {dims:?} must be positive"));
        }
        if !(voxel_size > 0.0) || !(truncation > 0.0) {
            return domain("voxel size and truncation must be positive");
        }
        Ok(dims[0] * dims[1] * dims[2])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f32) {
        let idx = self.index(i, j, k);
        let t = self.truncation as f32;
        self.values[idx] = v.clamp(-t, t);
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.voxel_size
    }

    pub fn voxel_diagonal(&self) -> f64 {
        self.voxel_size * 3f64.sqrt()
    }

    /// Same geometry with every value negated.
    pub fn negated(&self) -> Self {
        let mut g = self.clone();
        for v in &mut g.values {
            *v = -*v;
        }
        g
    }

    /// Little-endian: magic `TSDF`, dims as 3×u32, voxel size f64, origin 3×f64,
    /// truncation f64, then f32 values in x-fastest order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for d in self.dims {
            let d = u32::try_from(d).map_err(|_| Error::Format("grid dimension exceeds u32".into()))?;
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&self.voxel_size.to_le_bytes())?;
        for c in self.origin.iter() {
            w.write_all(&c.to_le_bytes())?;
        }
        w.write_all(&self.truncation.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a TSDF file".into()));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *d = u32::from_le_bytes(b) as usize;
        }
        let mut f64s = [0.0f64; 5];
        for x in &mut f64s {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *x = f64::from_le_bytes(b);
        }
        let n = Self::check_layout(dims, f64s[0], f64s[4])?;
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let g = Self {
            dims,
            voxel_size: f64s[0],
            origin: Vector3::new(f64s[1], f64s[2], f64s[3]),
            truncation: f64s[4],
            values,
        };
        let t = g.truncation as f32;
        if g.values.iter().any(|v| !(*v >= -t && *v <= t)) {
            return Err(Error::Format("TSDF value outside truncation band".into()));
        }
        Ok(g)
    }
}
