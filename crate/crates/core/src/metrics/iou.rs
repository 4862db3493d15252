//! Overlap measures for image rectangles, ground-plane footprints and yaw-only boxes.

use serde::{Deserialize, Serialize};

use super::polygon::{self, Point};
use crate::error::{Error, Result};
use crate::geometry::{Box3D, Rect2d};
use crate::kitti::{record_to_box3d, DetectionRecord};

/// Tolerance on the horizontal components of a box's vertical axis.
pub const GRAVITY_TOLERANCE: f64 = 1e-6;

pub fn iou_2d(a: &Rect2d, b: &Rect2d) -> f64 {
    let Some(inter) = a.intersection(b) else {
        return 0.0;
    };
    let i = inter.area();
    let union = a.area() + b.area() - i;
    if union <= 0.0 {
        return 0.0;
    }
    (i / union).clamp(0.0, 1.0)
}

/// Rectangle in the ground plane with `w` along the rotated x axis and `l`
/// along the rotated z axis, under the same yaw convention as the 3D boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    /// `(x, z)` in meters.
    pub center: [f64; 2],
    /// `(w, l)` in meters.
    pub size: [f64; 2],
    pub yaw: f64,
}

impl RotatedRect {
    pub fn new(center: [f64; 2], size: [f64; 2], yaw: f64) -> Self {
        Self { center, size, yaw }
    }

    pub fn from_record(rec: &DetectionRecord) -> Self {
        let [_, w, l] = rec.dimensions;
        Self::new([rec.location[0], rec.location[2]], [w, l], rec.rotation_y)
    }

    pub fn area(&self) -> f64 {
        self.size[0] * self.size[1]
    }

    /// Corners in counter-clockwise order in `(x, z)`.
    pub fn polygon(&self) -> [Point; 4] {
        let (s, c) = self.yaw.sin_cos();
        // rotated object axes projected to (x, z)
        let ax = [c * self.size[0] * 0.5, -s * self.size[0] * 0.5];
        let az = [s * self.size[1] * 0.5, c * self.size[1] * 0.5];
        let [cx, cz] = self.center;
        let p = |sx: f64, sz: f64| [cx + sx * ax[0] + sz * az[0], cz + sx * ax[1] + sz * az[1]];
        let poly = [p(-1.0, -1.0), p(1.0, -1.0), p(1.0, 1.0), p(-1.0, 1.0)];
        if polygon::signed_area(&poly) < 0.0 {
            [poly[3], poly[2], poly[1], poly[0]]
        } else {
            poly
        }
    }
}

pub fn iou_bev(a: &RotatedRect, b: &RotatedRect) -> f64 {
    polygon::convex_iou(&a.polygon(), &b.polygon())
}

/// Convex hull of the corners projected onto the x–z plane.
pub fn footprint(b: &Box3D) -> Vec<Point> {
    let pts: Vec<Point> = b.corners.iter().map(|c| [c.x, c.z]).collect();
    polygon::convex_hull(&pts)
}

/// Ground-plane IoU of arbitrary boxes through their footprint hulls.
pub fn iou_bev_boxes(a: &Box3D, b: &Box3D) -> f64 {
    polygon::convex_iou(&footprint(a), &footprint(b))
}

pub fn is_gravity_aligned(b: &Box3D) -> bool {
    let up = b.corners[0] - b.corners[2];
    let n = up.norm();
    n > 0.0 && up.x.abs() <= GRAVITY_TOLERANCE * n && up.z.abs() <= GRAVITY_TOLERANCE * n
}

/// Volume IoU of yaw-only boxes: footprint intersection times vertical overlap.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> Result<f64> {
    for (name, bx) in [("first", a), ("second", b)] {
        if !is_gravity_aligned(bx) {
            return Err(Error::UnsupportedGeometry(format!(
                "{name} box is not gravity aligned; 3D IoU supports yaw-only boxes"
            )));
        }
    }
    let (fa, fb) = (footprint(a), footprint(b));
    let (ya, yb) = (a.y_range(), b.y_range());
    if ya == yb {
        // equal vertical extents: the height factors cancel
        return Ok(polygon::convex_iou(&fa, &fb));
    }
    let overlap_y = (ya.1.min(yb.1) - ya.0.max(yb.0)).max(0.0);
    let inter = polygon::intersection_area(&fa, &fb) * overlap_y;
    let va = polygon::area(&fa) * (ya.1 - ya.0);
    let vb = polygon::area(&fb) * (yb.1 - yb.0);
    let union = va + vb - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Which overlap the evaluator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OverlapMetric {
    #[serde(rename = "2D")]
    Box2d,
    #[serde(rename = "BEV")]
    Bev,
    #[serde(rename = "3D")]
    Box3d,
}

impl OverlapMetric {
    pub const ALL: [OverlapMetric; 3] = [OverlapMetric::Box2d, OverlapMetric::Bev, OverlapMetric::Box3d];

    pub fn as_str(&self) -> &'static str {
        match self {
            OverlapMetric::Box2d => "2D",
            OverlapMetric::Bev => "BEV",
            OverlapMetric::Box3d => "3D",
        }
    }
}

/// Record converted once for repeated overlap queries.
#[derive(Debug, Clone)]
pub(crate) struct PreparedRecord {
    pub bbox: Rect2d,
    pub footprint: Vec<Point>,
    pub footprint_area: f64,
    pub y_range: (f64, f64),
}

impl PreparedRecord {
    pub fn new(rec: &DetectionRecord) -> Result<Self> {
        let footprint = if rec.is_dont_care() {
            Vec::new()
        } else {
            footprint(&record_to_box3d(rec)?)
        };
        let y = rec.location[1];
        Ok(Self {
            bbox: rec.bbox2d,
            footprint_area: polygon::area(&footprint),
            footprint,
            y_range: (y - rec.dimensions[0], y),
        })
    }

    pub fn overlap(&self, other: &PreparedRecord, metric: OverlapMetric) -> f64 {
        match metric {
            OverlapMetric::Box2d => iou_2d(&self.bbox, &other.bbox),
            OverlapMetric::Bev | OverlapMetric::Box3d => {
                let inter_area = polygon::intersection_area(&self.footprint, &other.footprint);
                if metric == OverlapMetric::Bev || self.y_range == other.y_range {
                    let union = self.footprint_area + other.footprint_area - inter_area;
                    return if union > 0.0 { (inter_area / union).clamp(0.0, 1.0) } else { 0.0 };
                }
                let (ya, yb) = (self.y_range, other.y_range);
                let overlap_y = (ya.1.min(yb.1) - ya.0.max(yb.0)).max(0.0);
                let inter = inter_area * overlap_y;
                let union = self.footprint_area * (ya.1 - ya.0) + other.footprint_area * (yb.1 - yb.0) - inter;
                if union > 0.0 {
                    (inter / union).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
        }
    }
}
