//! Recall binned by ground-truth depth or heading.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ap::EvalFrame;
use super::iou::{OverlapMetric, PreparedRecord};
use crate::error::{domain, Result};
use crate::kitti::{classify_difficulty, DetectionRecord, Difficulty};

/// Ground-truth attribute used for binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinAxis {
    /// Camera-frame `z` of the box location, meters.
    Depth,
    /// `rotation_y` in radians; 0 faces the camera's right.
    Azimuth,
}

impl BinAxis {
    pub fn value(&self, rec: &DetectionRecord) -> f64 {
        match self {
            BinAxis::Depth => rec.location[2],
            BinAxis::Azimuth => rec.rotation_y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub axis: BinAxis,
    pub edges: Vec<f64>,
}

impl BinSpec {
    pub fn new(axis: BinAxis, edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("bin edges must be strictly increasing with at least two entries");
        }
        Ok(Self { axis, edges })
    }

    /// Uniform bins of `width` covering `[lo, hi]`; the last bin may be narrower.
    pub fn uniform(axis: BinAxis, lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(hi > lo) {
            return domain(format!("invalid uniform bins: [{lo}, {hi}] with width {width}"));
        }
        let n = ((hi - lo) / width - 1e-9).ceil().max(1.0) as usize;
        let mut edges: Vec<f64> = (0..n).map(|i| lo + i as f64 * width).collect();
        edges.push(hi);
        Self::new(axis, edges)
    }

    pub fn depth(width_m: f64, max_depth: f64) -> Result<Self> {
        Self::uniform(BinAxis::Depth, 0.0, max_depth, width_m)
    }

    pub fn azimuth(width_rad: f64) -> Result<Self> {
        Self::uniform(BinAxis::Azimuth, -PI, PI, width_rad)
    }

    /// Bin index; the last bin is closed on the right.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let n = self.edges.len() - 1;
        if !(x >= self.edges[0] && x <= self.edges[n]) {
            return None;
        }
        Some(self.edges.partition_point(|e| *e <= x).saturating_sub(1).min(n - 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedRecall {
    pub axis: BinAxis,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub hits: Vec<usize>,
    /// `None` for empty bins.
    pub recall: Vec<Option<f64>>,
}

impl BinnedRecall {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lo,hi,count,hits,recall\n");
        for i in 0..self.counts.len() {
            let r = self.recall[i].map_or("NA".to_string(), |r| format!("{r}"));
            let _ = writeln!(s, "{},{},{},{},{}", self.edges[i], self.edges[i + 1], self.counts[i], self.hits[i], r);
        }
        s
    }
}

/// Fraction of ground-truth boxes per bin with at least one prediction of
/// BEV IoU ≥ `accept` in the same frame. Ground truth is filtered by class
/// and difficulty as in the AP evaluation.
pub fn binned_recall(
    frames: &[EvalFrame],
    class_name: &str,
    difficulty: Difficulty,
    spec: &BinSpec,
    accept: f64,
) -> Result<BinnedRecall> {
    let nbins = spec.edges.len() - 1;
    let mut counts = vec![0; nbins];
    let mut hits = vec![0; nbins];
    for frame in frames {
        let preds = frame
            .preds
            .iter()
            .filter(|p| p.class_name == class_name)
            .map(PreparedRecord::new)
            .collect::<Result<Vec<_>>>()?;
        for g in frame.gts.iter().filter(|g| g.class_name == class_name) {
            if !classify_difficulty(g).counts_for(difficulty) {
                continue;
            }
            let Some(b) = spec.bin_of(spec.axis.value(g)) else {
                continue;
            };
            counts[b] += 1;
            let gp = PreparedRecord::new(g)?;
            if preds.iter().any(|p| p.overlap(&gp, OverlapMetric::Bev) >= accept) {
                hits[b] += 1;
            }
        }
    }
    let recall = counts
        .iter()
        .zip(&hits)
        .map(|(&c, &h)| (c > 0).then(|| h as f64 / c as f64))
        .collect();
    Ok(BinnedRecall {
        axis: spec.axis,
        edges: spec.edges.clone(),
        counts,
        hits,
        recall,
    })
}
