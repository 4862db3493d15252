//! Evaluation reports in CSV and JSON.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ap::{average_precision, ApPoints, EvalConfig, EvalFrame, PrCurve};
use super::iou::OverlapMetric;
use crate::error::{Error, Result};
use crate::kitti::Difficulty;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApEntry {
    pub metric: OverlapMetric,
    pub difficulty: Difficulty,
    /// `None` when there is no ground truth at this difficulty.
    pub ap: Option<f64>,
    pub curve: Option<PrCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub class_name: String,
    pub iou_threshold: f64,
    pub points: ApPoints,
    pub num_frames: usize,
    pub entries: Vec<ApEntry>,
}

impl EvalReport {
    pub fn get(&self, metric: OverlapMetric, difficulty: Difficulty) -> Option<&ApEntry> {
        self.entries.iter().find(|e| e.metric == metric && e.difficulty == difficulty)
    }

    /// One row per metric, one column per difficulty, AP in percent.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,easy,moderate,hard\n");
        for m in OverlapMetric::ALL {
            s.push_str(m.as_str());
            for d in Difficulty::EVALUATED {
                match self.get(m, d).and_then(|e| e.ap) {
                    Some(ap) => {
                        let _ = write!(s, ",{:.2}", ap * 100.0);
                    }
                    None => s.push_str(",NA"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Every precision–recall sample: `metric,difficulty,rank,recall,precision`.
    pub fn pr_csv(&self) -> String {
        let mut s = String::from("metric,difficulty,rank,recall,precision\n");
        for e in &self.entries {
            if let Some(c) = &e.curve {
                for (k, (r, p)) in c.samples.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{},{},{}", e.metric.as_str(), e.difficulty.as_str(), k + 1, r, p);
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// AP for every metric and difficulty.
pub fn evaluate(frames: &[EvalFrame], class_name: &str, iou_threshold: f64, points: ApPoints) -> Result<EvalReport> {
    let mut entries = Vec::new();
    for metric in OverlapMetric::ALL {
        for difficulty in Difficulty::EVALUATED {
            let cfg = EvalConfig {
                class_name: class_name.to_string(),
                difficulty,
                metric,
                iou_threshold,
                points,
            };
            let (ap, curve) = match average_precision(frames, &cfg) {
                Ok(c) => (Some(c.ap), Some(c)),
                Err(Error::NoGroundTruth) => (None, None),
                Err(e) => return Err(e),
            };
            entries.push(ApEntry {
                metric,
                difficulty,
                ap,
                curve,
            });
        }
    }
    Ok(EvalReport {
        class_name: class_name.to_string(),
        iou_threshold,
        points,
        num_frames: frames.len(),
        entries,
    })
}
