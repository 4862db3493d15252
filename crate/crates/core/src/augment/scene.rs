//! Camera images with optional metric depth.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Quaternion};

/// Rigid object-to-camera transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Quaternion,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Quaternion, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix()
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }
}

/// RGB image, row-major with 3 bytes per pixel. Pixel `(x, y)` is centered
/// on image coordinates `(u, v) = (x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
    /// Meters per pixel, `+∞` where unknown.
    pub depth: Option<Vec<f32>>,
    pub calib: CameraIntrinsics,
}

impl SceneImage {
    pub fn filled(width: usize, height: usize, color: [u8; 3], calib: CameraIntrinsics) -> Self {
        Self {
            width,
            height,
            rgb: color.iter().copied().cycle().take(width * height * 3).collect(),
            depth: None,
            calib,
        }
    }

    pub fn with_depth(mut self, depth: Vec<f32>) -> Result<Self> {
        if depth.len() != self.width * self.height {
            return Err(Error::Format(format!(
                "depth has {} samples, image has {} pixels",
                depth.len(),
                self.width * self.height
            )));
        }
        self.depth = Some(depth);
        Ok(self)
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.rgb[i..i + 3].copy_from_slice(&c);
    }

    /// Bilinear color at `(u, v)`; `None` outside the pixel-center hull.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        if !(u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64) {
            return None;
        }
        let x0 = (u.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (v.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let (fx, fy) = (u - x0 as f64, v - y0 as f64);
        let mut out = [0.0; 3];
        let (a, b, c, d) = (self.pixel(x0, y0), self.pixel(x1, y0), self.pixel(x0, y1), self.pixel(x1, y1));
        for k in 0..3 {
            let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
            let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
            out[k] = top * (1.0 - fy) + bottom * fy;
        }
        Some(out)
    }

    pub fn load_png(path: &Path, calib: CameraIntrinsics) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        Ok(Self {
            width: img.width() as usize,
            height: img.height() as usize,
            rgb: img.into_raw(),
            depth: None,
            calib,
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.rgb.clone())
            .ok_or_else(|| Error::Format("pixel buffer does not match dimensions".into()))?;
        buf.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    /// Raw little-endian `f32` depth, row-major, no header.
    pub fn write_depth<W: Write>(&self, mut w: W) -> Result<()> {
        let depth = self.depth.as_ref().ok_or_else(|| Error::Format("image has no depth".into()))?;
        for d in depth {
            w.write_all(&d.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_depth<R: Read>(mut r: R, width: usize, height: usize) -> Result<Vec<f32>> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 4 * width * height {
            return Err(Error::Format(format!(
                "depth raster has {} bytes, expected {}",
                bytes.len(),
                4 * width * height
            )));
        }
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calib() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 16.0, 8.0).unwrap()
    }

    #[test]
    fn bilinear_on_gradient() {
        let mut img = SceneImage::filled(4, 2, [0, 0, 0], calib());
        for y in 0..2 {
            for x in 0..4 {
                img.set_pixel(x, y, [(x * 10) as u8, (y * 100) as u8, 7]);
            }
        }
        assert_eq!(img.sample_bilinear(1.5, 0.25).unwrap(), [15.0, 25.0, 7.0]);
        assert_eq!(img.sample_bilinear(3.0, 1.0).unwrap(), [30.0, 100.0, 7.0]);
        assert!(img.sample_bilinear(3.01, 0.0).is_none());
        assert!(img.sample_bilinear(-0.5, 0.0).is_none());
    }

    #[test]
    fn png_and_depth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = SceneImage::filled(5, 3, [10, 20, 30], calib());
        img.set_pixel(4, 2, [1, 2, 3]);
        let img = img.with_depth((0..15).map(|i| i as f32 * 0.5).collect()).unwrap();
        let p = dir.path().join("a.png");
        img.save_png(&p).unwrap();
        let back = SceneImage::load_png(&p, calib()).unwrap();
        assert_eq!(back.rgb, img.rgb);
        let mut raw = Vec::new();
        img.write_depth(&mut raw).unwrap();
        assert_eq!(SceneImage::read_depth(&raw[..], 5, 3).unwrap(), img.depth.unwrap());
        assert!(SceneImage::read_depth(&raw[..8], 5, 3).is_err());
    }
}
