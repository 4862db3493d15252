//! Greedy non-maximum suppression.

use serde::{Deserialize, Serialize};

use super::iou::{iou_2d, OverlapMetric, PreparedRecord};
use crate::error::{domain, Result};
use crate::kitti::DetectionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NmsMode {
    Iou2d,
    Bev,
}

/// Indices sorted by descending score, earlier index first on ties.
pub fn score_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Generic greedy suppression: a candidate is dropped iff its overlap with an
/// already kept candidate exceeds `threshold`. Returns kept indices in score order.
pub fn nms_by(scores: &[f64], threshold: f64, mut overlap: impl FnMut(usize, usize) -> f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(scores) {
        if kept.iter().all(|&k| overlap(k, i) <= threshold) {
            kept.push(i);
        }
    }
    kept
}

/// Suppression over scored records; returns kept indices in score order.
pub fn nms(dets: &[DetectionRecord], mode: NmsMode, threshold: f64) -> Result<Vec<usize>> {
    let mut scores = Vec::with_capacity(dets.len());
    for (i, d) in dets.iter().enumerate() {
        match d.score {
            Some(s) => scores.push(s),
            None => return domain(format!("detection {i} has no score")),
        }
    }
    Ok(match mode {
        NmsMode::Iou2d => nms_by(&scores, threshold, |a, b| iou_2d(&dets[a].bbox2d, &dets[b].bbox2d)),
        NmsMode::Bev => {
            let prepared = dets.iter().map(PreparedRecord::new).collect::<Result<Vec<_>>>()?;
            nms_by(&scores, threshold, |a, b| prepared[a].overlap(&prepared[b], OverlapMetric::Bev))
        }
    })
}
