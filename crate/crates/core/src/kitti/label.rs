//! KITTI label and prediction lines.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{alpha_from_rotation_y, Box3D, Rect2d};

pub const DONT_CARE: &str = "DontCare";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub class_name: String,
    pub truncation: f64,
    pub occlusion: i32,
    pub alpha: f64,
    pub bbox2d: Rect2d,
    /// `(h, w, l)` in meters, in file order.
    pub dimensions: [f64; 3],
    /// Bottom center of the box in the camera frame.
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl DetectionRecord {
    pub fn is_dont_care(&self) -> bool {
        self.class_name == DONT_CARE
    }

    pub fn height(&self) -> f64 {
        self.dimensions[0]
    }

    /// Extents in lifting order `(w, h, l)`.
    pub fn extents_whl(&self) -> [f64; 3] {
        let [h, w, l] = self.dimensions;
        [w, h, l]
    }

    pub fn location_vec(&self) -> Vector3<f64> {
        Vector3::from(self.location)
    }

    /// Single label line at two-decimal precision, without a trailing newline.
    pub fn to_line(&self) -> String {
        let b = &self.bbox2d;
        let [h, w, l] = self.dimensions;
        let [x, y, z] = self.location;
        let mut s = format!(
            "{} {:.2} {} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2}",
            self.class_name,
            self.truncation,
            self.occlusion,
            self.alpha,
            b.left,
            b.top,
            b.right,
            b.bottom,
            h,
            w,
            l,
            x,
            y,
            z,
            self.rotation_y
        );
        if let Some(score) = self.score {
            let _ = write!(s, " {score:.2}");
        }
        s
    }
}

fn field<T: std::str::FromStr>(tok: &str, name: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("field '{name}' is not numeric: '{tok}'"),
    })
}

/// Parses label text; blank lines are skipped, line numbers in errors are 1-based.
pub fn parse_label_file(text: &str) -> Result<Vec<DetectionRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 15 && toks.len() != 16 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 15 or 16 fields, found {}", toks.len()),
            });
        }
        let f = |k: usize, name: &str| field::<f64>(toks[k], name, line);
        let rec = DetectionRecord {
            class_name: toks[0].to_string(),
            truncation: f(1, "truncated")?,
            occlusion: field::<i32>(toks[2], "occluded", line)?,
            alpha: f(3, "alpha")?,
            bbox2d: Rect2d::new(f(4, "left")?, f(5, "top")?, f(6, "right")?, f(7, "bottom")?),
            dimensions: [f(8, "height")?, f(9, "width")?, f(10, "length")?],
            location: [f(11, "x")?, f(12, "y")?, f(13, "z")?],
            rotation_y: f(14, "rotation_y")?,
            score: if toks.len() == 16 { Some(f(15, "score")?) } else { None },
        };
        if !rec.is_dont_care() && rec.score.is_none() && rec.location[2] > 0.0 {
            let expected = alpha_from_rotation_y(rec.rotation_y, &rec.location_vec());
            let diff = crate::geometry::wrap_angle(expected - rec.alpha).abs();
            if diff > 1e-2 {
                log::warn!("line {line}: alpha {} inconsistent with rotation_y (expected {expected:.3})", rec.alpha);
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn serialize_records(records: &[DetectionRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

pub fn read_label_file(path: &Path) -> Result<Vec<DetectionRecord>> {
    parse_label_file(&std::fs::read_to_string(path)?)
}

pub fn write_label_file(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    std::fs::write(path, serialize_records(records))?;
    Ok(())
}

pub fn rotation_y_matrix(ry: f64) -> Matrix3<f64> {
    let (s, c) = ry.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Box with `(w, h, l)` along object `(x, y, z)`, rotated by `rotation_y`
/// about the camera y-axis; the bottom-center location is lifted by `h/2`.
pub fn record_to_box3d(rec: &DetectionRecord) -> Result<Box3D> {
    let [w, h, l] = rec.extents_whl();
    if !(w > 0.0 && h > 0.0 && l > 0.0) {
        return domain(format!("non-positive dimensions {:?}", rec.dimensions));
    }
    let centroid = rec.location_vec() - Vector3::new(0.0, h / 2.0, 0.0);
    Ok(Box3D::from_pose(&rotation_y_matrix(rec.rotation_y), &centroid, [w, h, l]))
}

/// Record describing `b`, the inverse of [`record_to_box3d`] for yaw-only boxes.
pub fn box3d_to_record(b: &Box3D, class_name: &str, bbox2d: Rect2d, score: Option<f64>) -> DetectionRecord {
    let [w, h, l] = b.extents();
    let c = b.centroid();
    let location = [c.x, c.y + h / 2.0, c.z];
    let ry = b.yaw();
    DetectionRecord {
        class_name: class_name.to_string(),
        truncation: 0.0,
        occlusion: 0,
        alpha: alpha_from_rotation_y(ry, &Vector3::from(location)),
        bbox2d,
        dimensions: [h, w, l],
        location,
        rotation_y: ry,
        score,
    }
}
