//! Loading frames, prediction filtering and per-frame seeding.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use roi10d::kitti::{read_label_file, read_split, KittiLayout};
use roi10d::metrics::{nms, EvalFrame, NmsMode};
use roi10d::DetectionRecord;

use crate::args::Cli;
use crate::failure::DataError;

/// Frames of the configured split with predictions after NMS.
#[derive(Debug, Clone, Serialize)]
pub struct LoadedFrames {
    #[serde(skip)]
    pub frames: Vec<EvalFrame>,
    /// Frames without a prediction file, evaluated with zero predictions.
    pub missing_predictions: Vec<String>,
    pub predictions_before_nms: usize,
    pub predictions_after_nms: usize,
}

pub fn split_ids(cli: &Cli) -> Result<Vec<String>> {
    let path = cli.split_path()?;
    let ids = read_split(&path).with_context(|| format!("reading split {}", path.display()))?;
    if ids.is_empty() {
        return Err(DataError(format!("split {} lists no frames", path.display())).into());
    }
    Ok(ids)
}

/// Class filter, then 2D-NMS, then BEV-NMS. Kept predictions stay in score order.
pub fn filter_predictions(preds: Vec<DetectionRecord>, class: &str, nms2d: f64, nms_bev: f64) -> Result<Vec<DetectionRecord>> {
    let preds: Vec<DetectionRecord> = preds.into_iter().filter(|p| p.class_name == class).collect();
    if let Some(i) = preds.iter().position(|p| p.score.is_none()) {
        return Err(DataError(format!("prediction {i} of class {class} has no score")).into());
    }
    let keep = nms(&preds, NmsMode::Iou2d, nms2d)?;
    let preds: Vec<DetectionRecord> = keep.into_iter().map(|k| preds[k].clone()).collect();
    let keep = nms(&preds, NmsMode::Bev, nms_bev)?;
    Ok(keep.into_iter().map(|k| preds[k].clone()).collect())
}

fn load_frame(layout: &KittiLayout, pred_dir: &Path, id: &str, cli: &Cli) -> Result<(EvalFrame, bool, usize)> {
    let label = layout.label(id);
    let gts = read_label_file(&label).with_context(|| format!("reading ground truth {}", label.display()))?;
    let pred_path: PathBuf = pred_dir.join(format!("{id}.txt"));
    let (preds, missing) = if pred_path.is_file() {
        let p = read_label_file(&pred_path).with_context(|| format!("reading predictions {}", pred_path.display()))?;
        (p, false)
    } else {
        (Vec::new(), true)
    };
    let before = preds.iter().filter(|p| p.class_name == cli.common.class_name).count();
    let preds = filter_predictions(preds, &cli.common.class_name, cli.common.nms2d, cli.common.nms_bev)
        .with_context(|| format!("filtering predictions of frame {id}"))?;
    Ok((
        EvalFrame {
            id: id.to_string(),
            gts,
            preds,
        },
        missing,
        before,
    ))
}

/// Loads ground truth and predictions for every split frame in parallel;
/// results keep split order.
pub fn load_frames(cli: &Cli, pred_dir: &Path) -> Result<LoadedFrames> {
    let layout = KittiLayout::new(cli.data_root()?);
    let ids = split_ids(cli)?;
    let loaded: Vec<(EvalFrame, bool, usize)> = ids
        .par_iter()
        .map(|id| load_frame(&layout, pred_dir, id, cli))
        .collect::<Result<_>>()?;
    let mut out = LoadedFrames {
        frames: Vec::with_capacity(loaded.len()),
        missing_predictions: Vec::new(),
        predictions_before_nms: 0,
        predictions_after_nms: 0,
    };
    for (frame, missing, before) in loaded {
        if missing {
            log::warn!("no predictions for frame {}", frame.id);
            out.missing_predictions.push(frame.id.clone());
        }
        out.predictions_before_nms += before;
        out.predictions_after_nms += frame.preds.len();
        out.frames.push(frame);
    }
    Ok(out)
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Generator for one unit of work, independent of scheduling order.
pub fn task_rng(seed: u64, key: &str) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&fnv1a(key.as_bytes()).to_le_bytes());
    ChaCha8Rng::from_seed(s)
}

pub fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

pub fn write(p: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(p, contents).with_context(|| format!("writing {}", p.display()))
}

pub fn write_json(p: &Path, value: &impl Serialize) -> Result<()> {
    write(p, serde_json::to_string_pretty(value)? + "\n")
}
