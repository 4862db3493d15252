//! Random collision-free placement of synthetic objects.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::{Pose, SceneImage};
use crate::error::{domain, Error, Result};
use crate::geometry::{allo_to_ego, Box3D, CameraIntrinsics, Quaternion};
use crate::kitti::{box3d_to_record, parse_label_file, record_to_box3d};
use crate::metrics::{footprint, polygon};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig {
    /// Range of the camera-frame depth of the placed centroid, meters.
    pub z_range: (f64, f64),
    pub max_retries: usize,
    /// Bound on the rotation perturbation, radians.
    pub max_perturbation: f64,
    /// Perturb about a random axis instead of the camera y axis.
    pub full_rotation: bool,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self {
            z_range: (5.0, 60.0),
            max_retries: 100,
            max_perturbation: 10f64.to_radians(),
            full_rotation: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementSample {
    /// Pixel the centroid projects to.
    pub pixel_ray: [f64; 2],
    /// Camera-frame depth of the centroid along that pixel's ray.
    pub depth_along_ray: f64,
    pub rotation_perturbation: f64,
    pub perturbation_axis: [f64; 3],
    pub source_allocentric: Quaternion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub sample: PlacementSample,
    pub pose: Pose,
    pub box3d: Box3D,
    /// Number of draws including the accepted one.
    pub attempts: usize,
}

/// Egocentric pose and box for a sample: the perturbed allocentric rotation is
/// re-expressed relative to the new viewing ray.
pub fn placement_pose(sample: &PlacementSample, extents: [f64; 3], cam: &CameraIntrinsics) -> Result<(Pose, Box3D)> {
    let [u, v] = sample.pixel_ray;
    let centroid = cam.backproject(u, v, sample.depth_along_ray)?;
    let perturb = Quaternion::from_axis_angle(&Vector3::from(sample.perturbation_axis), sample.rotation_perturbation);
    let q_allo = (perturb * sample.source_allocentric).normalize()?;
    let q_ego = allo_to_ego(&q_allo, &centroid)?;
    let pose = Pose::new(q_ego, centroid);
    Ok((pose, Box3D::from_pose(&pose.matrix(), &centroid, extents)))
}

/// The yaw-only box a label line at two-decimal precision describes for `b`.
pub fn labelled_box(b: &Box3D) -> Result<Box3D> {
    let rec = box3d_to_record(b, "Car", crate::geometry::Rect2d::new(0.0, 0.0, 1.0, 1.0), None);
    let snapped = parse_label_file(&rec.to_line())?;
    record_to_box3d(&snapped[0])
}

fn overlaps_any(fp: &[polygon::Point], existing: &[Vec<polygon::Point>]) -> bool {
    existing.iter().any(|e| polygon::intersection_area(fp, e) > 0.0)
}

pub fn draw_sample<R: Rng + ?Sized>(
    rng: &mut R,
    image: &SceneImage,
    source_allocentric: &Quaternion,
    cfg: &PlacementConfig,
) -> PlacementSample {
    let u = rng.gen_range(0.0..(image.width - 1) as f64);
    let v = rng.gen_range(0.0..(image.height - 1) as f64);
    let z = rng.gen_range(cfg.z_range.0..=cfg.z_range.1);
    let angle = if cfg.max_perturbation > 0.0 {
        rng.gen_range(-cfg.max_perturbation..=cfg.max_perturbation)
    } else {
        0.0
    };
    let axis = if cfg.full_rotation {
        loop {
            let a = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = a.norm();
            if n > 1e-3 && n <= 1.0 {
                break a / n;
            }
        }
    } else {
        Vector3::y()
    };
    PlacementSample {
        pixel_ray: [u, v],
        depth_along_ray: z,
        rotation_perturbation: angle,
        perturbation_axis: [axis.x, axis.y, axis.z],
        source_allocentric: *source_allocentric,
    }
}

/// Draws placements until one lies fully in front of the camera and its
/// footprint, and that of its label box, share no area with any existing box.
pub fn sample_placement<R: Rng + ?Sized>(
    rng: &mut R,
    image: &SceneImage,
    existing: &[Box3D],
    source_allocentric: &Quaternion,
    extents: [f64; 3],
    cfg: &PlacementConfig,
) -> Result<Placement> {
    if !(cfg.z_range.0 > 0.0 && cfg.z_range.1 >= cfg.z_range.0) {
        return domain(format!("invalid depth range {:?}", cfg.z_range));
    }
    if image.width < 2 || image.height < 2 {
        return domain("image too small for placement");
    }
    let footprints: Vec<_> = existing.iter().map(footprint).collect();
    for attempt in 1..=cfg.max_retries.max(1) {
        let sample = draw_sample(rng, image, source_allocentric, cfg);
        let (pose, box3d) = placement_pose(&sample, extents, &image.calib)?;
        if box3d.corners.iter().any(|c| !(c.z > 0.1)) {
            continue;
        }
        if overlaps_any(&footprint(&box3d), &footprints) || overlaps_any(&footprint(&labelled_box(&box3d)?), &footprints) {
            continue;
        }
        return Ok(Placement {
            sample,
            pose,
            box3d,
            attempts: attempt,
        });
    }
    Err(Error::PlacementFailed(cfg.max_retries.max(1)))
}
