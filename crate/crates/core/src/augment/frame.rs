//! Compositing synthetic cars into a labelled frame.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bank::MeshBank;
use super::placement::{labelled_box, sample_placement, Placement, PlacementConfig};
use super::raster::{depth_buffer, rasterize_into};
use super::scene::SceneImage;
use crate::error::{domain, Error, Result};
use crate::geometry::{project_box, Box3D, Quaternion, Rect2d};
use crate::kitti::{box3d_to_record, parse_label_file, record_to_box3d, DetectionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// At most this many cars are inserted; the count is drawn from `1..=k_max`.
    pub k_max: usize,
    pub placement: PlacementConfig,
    pub class_name: String,
    /// Fill DontCare rectangles with uniform noise.
    pub dont_care_noise: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            k_max: 3,
            placement: PlacementConfig::default(),
            class_name: "Car".into(),
            dont_care_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AddedObject {
    pub mesh_id: String,
    pub placement: Placement,
    pub record: DetectionRecord,
    /// Pixel indices (`y·width + x`) that show this car in the output.
    pub pixels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentOutput {
    pub image: SceneImage,
    pub labels: Vec<DetectionRecord>,
    pub added: Vec<AddedObject>,
    pub failed_placements: usize,
}

fn clip_to_image(r: &Rect2d, width: usize, height: usize) -> Rect2d {
    Rect2d::new(
        r.left.clamp(0.0, (width - 1) as f64),
        r.top.clamp(0.0, (height - 1) as f64),
        r.right.clamp(0.0, (width - 1) as f64),
        r.bottom.clamp(0.0, (height - 1) as f64),
    )
}

/// Label line for an inserted car, snapped to file precision.
fn added_record(b: &Box3D, image: &SceneImage, class_name: &str) -> Result<DetectionRecord> {
    let full = project_box(b, &image.calib)?;
    let clipped = clip_to_image(&full, image.width, image.height);
    let mut rec = box3d_to_record(b, class_name, clipped, None);
    rec.truncation = if full.area() > 0.0 {
        (1.0 - clipped.area() / full.area()).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(parse_label_file(&rec.to_line())?.remove(0))
}

fn fill_noise<R: Rng + ?Sized>(image: &mut SceneImage, r: &Rect2d, rng: &mut R) {
    let c = clip_to_image(r, image.width, image.height);
    for y in c.top.ceil() as usize..=c.bottom.floor() as usize {
        for x in c.left.ceil() as usize..=c.right.floor() as usize {
            image.set_pixel(x, y, rng.gen());
        }
    }
}

/// Inserts up to `k_max` distinct bank meshes at collision-free poses and
/// appends one label per inserted car. Existing labels are kept unchanged.
pub fn augment_frame<R: Rng + ?Sized>(
    image: &SceneImage,
    labels: &[DetectionRecord],
    bank: &MeshBank,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<AugmentOutput> {
    let mut out = AugmentOutput {
        image: image.clone(),
        labels: labels.to_vec(),
        added: Vec::new(),
        failed_placements: 0,
    };
    if cfg.k_max == 0 {
        return Ok(out);
    }
    if bank.is_empty() {
        return domain("mesh bank is empty");
    }
    if cfg.dont_care_noise {
        for l in labels.iter().filter(|l| l.is_dont_care()) {
            fill_noise(&mut out.image, &l.bbox2d, rng);
        }
    }

    let mut existing: Vec<Box3D> = labels
        .iter()
        .filter(|l| !l.is_dont_care())
        .filter_map(|l| record_to_box3d(l).ok())
        .collect();
    let count = rng.gen_range(1..=cfg.k_max).min(bank.len());
    let mut placed = Vec::new();
    for i in sample(rng, bank.len(), count).into_iter() {
        let entry = &bank.entries[i];
        let (mesh, extents) = entry.centered()?;
        let source = entry.meta.source_allocentric.unwrap_or(Quaternion::IDENTITY);
        match sample_placement(rng, image, &existing, &source, extents, &cfg.placement) {
            Ok(p) => {
                existing.push(p.box3d);
                existing.push(labelled_box(&p.box3d)?);
                placed.push((entry.meta.id.clone(), mesh, p));
            }
            Err(Error::PlacementFailed(_)) => out.failed_placements += 1,
            Err(e) => return Err(e),
        }
    }

    // far to near so nearer cars win even without an input depth map
    placed.sort_by(|a, b| b.2.pose.translation.z.total_cmp(&a.2.pose.translation.z));
    let mut zbuf = depth_buffer(image);
    let mut owner: Vec<Option<usize>> = vec![None; image.width * image.height];
    for (k, (_, mesh, p)) in placed.iter().enumerate() {
        for idx in rasterize_into(mesh, &p.pose, &mut out.image, &mut zbuf) {
            owner[idx] = Some(k);
        }
    }
    for (k, (id, _, p)) in placed.into_iter().enumerate() {
        let record = added_record(&p.box3d, image, &cfg.class_name)?;
        let pixels = (0..owner.len()).filter(|&i| owner[i] == Some(k)).collect();
        out.labels.push(record.clone());
        out.added.push(AddedObject {
            mesh_id: id,
            placement: p,
            record,
            pixels,
        });
    }
    Ok(out)
}
