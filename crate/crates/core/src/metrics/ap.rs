//! Average precision with KITTI-style ignore regions.

use serde::{Deserialize, Serialize};

use super::iou::{OverlapMetric, PreparedRecord};
use crate::error::{Error, Result};
use crate::kitti::{classify_difficulty, DetectionRecord, Difficulty};

/// Ground truth and predictions for one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalFrame {
    pub id: String,
    pub gts: Vec<DetectionRecord>,
    pub preds: Vec<DetectionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApPoints {
    /// Recall grid `0, 0.1, …, 1`.
    Eleven,
    /// Recall grid `1/40, 2/40, …, 1`.
    Forty,
}

impl ApPoints {
    pub fn recall_grid(&self) -> Vec<f64> {
        match self {
            ApPoints::Eleven => (0..=10).map(|i| i as f64 / 10.0).collect(),
            ApPoints::Forty => (1..=40).map(|i| i as f64 / 40.0).collect(),
        }
    }

    pub fn count(&self) -> usize {
        match self {
            ApPoints::Eleven => 11,
            ApPoints::Forty => 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub class_name: String,
    pub difficulty: Difficulty,
    pub metric: OverlapMetric,
    pub iou_threshold: f64,
    pub points: ApPoints,
}

/// Precision–recall samples, one per ranked prediction, plus the interpolated AP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// `(recall, precision)` in descending-score order.
    pub samples: Vec<(f64, f64)>,
    /// `(recall level, interpolated precision)`.
    pub interpolated: Vec<(f64, f64)>,
    pub ap: f64,
    pub num_gt: usize,
    pub true_positives: usize,
    pub false_positives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    TruePositive,
    FalsePositive,
    Ignored,
}

/// Greedy matching inside one frame. Returns `(score, outcome)` per prediction
/// of the class and the number of counted ground-truth boxes.
fn match_frame(frame: &EvalFrame, cfg: &EvalConfig) -> Result<(Vec<(f64, Outcome)>, usize)> {
    let gts: Vec<(&DetectionRecord, bool)> = frame
        .gts
        .iter()
        .filter(|g| g.class_name == cfg.class_name)
        .map(|g| (g, classify_difficulty(g).counts_for(cfg.difficulty)))
        .collect();
    let dont_care: Vec<PreparedRecord> = frame
        .gts
        .iter()
        .filter(|g| g.is_dont_care())
        .map(PreparedRecord::new)
        .collect::<Result<_>>()?;
    let gt_prep = gts.iter().map(|(g, _)| PreparedRecord::new(g)).collect::<Result<Vec<_>>>()?;
    let num_valid = gts.iter().filter(|(_, valid)| *valid).count();

    let preds: Vec<&DetectionRecord> = frame.preds.iter().filter(|p| p.class_name == cfg.class_name).collect();
    let mut scores = Vec::with_capacity(preds.len());
    for p in &preds {
        scores.push(p.score.ok_or_else(|| Error::Domain(format!("prediction in frame '{}' has no score", frame.id)))?);
    }
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::with_capacity(preds.len());
    for i in super::nms::score_order(&scores) {
        let p = PreparedRecord::new(preds[i])?;
        // best valid match first, then an ignored one
        let mut best: Option<(usize, f64)> = None;
        for pass_valid in [true, false] {
            for (j, (_, valid)) in gts.iter().enumerate() {
                if taken[j] || *valid != pass_valid {
                    continue;
                }
                let o = p.overlap(&gt_prep[j], cfg.metric);
                if o >= cfg.iou_threshold && best.map_or(true, |(_, b)| o > b) {
                    best = Some((j, o));
                }
            }
            if best.is_some() {
                break;
            }
        }
        let outcome = match best {
            Some((j, _)) => {
                taken[j] = true;
                if gts[j].1 {
                    Outcome::TruePositive
                } else {
                    Outcome::Ignored
                }
            }
            None if dont_care.iter().any(|dc| covered_by(&p, dc, cfg.iou_threshold)) => Outcome::Ignored,
            None => Outcome::FalsePositive,
        };
        out.push((scores[i], outcome));
    }
    Ok((out, num_valid))
}

/// Fraction of the prediction's image box inside the DontCare region.
fn covered_by(p: &PreparedRecord, dc: &PreparedRecord, threshold: f64) -> bool {
    let area = p.bbox.area();
    area > 0.0 && p.bbox.intersection(&dc.bbox).map_or(0.0, |r| r.area()) / area >= threshold
}

pub fn average_precision(frames: &[EvalFrame], cfg: &EvalConfig) -> Result<PrCurve> {
    let mut ranked: Vec<(f64, usize, usize, Outcome)> = Vec::new();
    let mut num_gt = 0;
    for (fi, frame) in frames.iter().enumerate() {
        let (matches, n) = match_frame(frame, cfg)?;
        num_gt += n;
        ranked.extend(matches.into_iter().enumerate().map(|(k, (s, o))| (s, fi, k, o)));
    }
    if num_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    ranked.retain(|r| r.3 != Outcome::Ignored);
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut samples = Vec::with_capacity(ranked.len());
    for r in &ranked {
        match r.3 {
            Outcome::TruePositive => tp += 1,
            _ => fp += 1,
        }
        samples.push((tp as f64 / num_gt as f64, tp as f64 / (tp + fp) as f64));
    }
    let interpolated: Vec<(f64, f64)> = cfg
        .points
        .recall_grid()
        .into_iter()
        .map(|level| {
            let p = samples
                .iter()
                .filter(|(r, _)| *r >= level - 1e-12)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max);
            (level, p)
        })
        .collect();
    let ap = interpolated.iter().map(|(_, p)| p).sum::<f64>() / interpolated.len() as f64;
    Ok(PrCurve {
        samples,
        interpolated,
        ap,
        num_gt,
        true_positives: tp,
        false_positives: fp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect2d;

    pub(crate) fn gt(left: f64, x: f64) -> DetectionRecord {
        DetectionRecord {
            class_name: "Car".into(),
            truncation: 0.0,
            occlusion: 0,
            alpha: 0.0,
            bbox2d: Rect2d::new(left, 100.0, left + 60.0, 160.0),
            dimensions: [1.5, 1.6, 3.9],
            location: [x, 1.5, 20.0],
            rotation_y: 0.0,
            score: None,
        }
    }

    fn pred(r: &DetectionRecord, score: f64) -> DetectionRecord {
        DetectionRecord {
            score: Some(score),
            ..r.clone()
        }
    }

    fn cfg(metric: OverlapMetric) -> EvalConfig {
        EvalConfig {
            class_name: "Car".into(),
            difficulty: Difficulty::Moderate,
            metric,
            iou_threshold: 0.7,
            points: ApPoints::Eleven,
        }
    }

    #[test]
    fn perfect_predictions_give_one() {
        let gts = vec![gt(0.0, -5.0), gt(200.0, 5.0)];
        let frame = EvalFrame {
            id: "0".into(),
            preds: vec![pred(&gts[0], 0.2), pred(&gts[1], 0.9)],
            gts,
        };
        for m in OverlapMetric::ALL {
            let c = average_precision(std::slice::from_ref(&frame), &cfg(m)).unwrap();
            assert!((c.ap - 1.0).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn no_predictions_give_zero() {
        let frame = EvalFrame {
            id: "0".into(),
            gts: vec![gt(0.0, 0.0)],
            preds: vec![],
        };
        assert_eq!(average_precision(&[frame], &cfg(OverlapMetric::Box2d)).unwrap().ap, 0.0);
    }

    #[test]
    fn empty_ground_truth_is_not_available() {
        let frame = EvalFrame {
            id: "0".into(),
            gts: vec![],
            preds: vec![pred(&gt(0.0, 0.0), 0.5)],
        };
        assert!(matches!(average_precision(&[frame], &cfg(OverlapMetric::Box2d)), Err(Error::NoGroundTruth)));
    }

    #[test]
    fn ignored_regions_do_not_count() {
        let mut hard = gt(300.0, 8.0);
        hard.occlusion = 2;
        let mut dc = gt(500.0, 0.0);
        dc.class_name = crate::kitti::DONT_CARE.into();
        dc.bbox2d = Rect2d::new(480.0, 80.0, 600.0, 200.0);
        let easy = gt(0.0, 0.0);
        let frame = EvalFrame {
            id: "0".into(),
            preds: vec![pred(&easy, 0.5), pred(&hard, 0.9), pred(&gt(510.0, 30.0), 0.95)],
            gts: vec![easy, hard, dc],
        };
        let c = average_precision(&[frame], &cfg(OverlapMetric::Box2d)).unwrap();
        assert_eq!((c.num_gt, c.true_positives, c.false_positives), (1, 1, 0));
        assert_eq!(c.ap, 1.0);
    }

    #[test]
    fn adding_a_top_true_positive_never_hurts() {
        let gts = vec![gt(0.0, -5.0), gt(200.0, 5.0)];
        let fp = pred(&gt(400.0, 9.0), 0.8);
        let mut frame = EvalFrame {
            id: "0".into(),
            preds: vec![fp, pred(&gts[0], 0.5)],
            gts,
        };
        let before = average_precision(std::slice::from_ref(&frame), &cfg(OverlapMetric::Bev)).unwrap().ap;
        frame.preds.push(pred(&frame.gts[1].clone(), 0.95));
        let after = average_precision(&[frame], &cfg(OverlapMetric::Bev)).unwrap().ap;
        assert!(after >= before);
    }
}
