//! Difficulty levels, extent statistics and split files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DetectionRecord;
use crate::error::{domain, Result};
use crate::geometry::ExtentStats;

/// Ordered from strictest to loosest; `Ignored` never counts as ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

impl Difficulty {
    pub const EVALUATED: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn as_str(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
            Difficulty::Ignored => "ignored",
        }
    }

    /// Whether an object of this level is ground truth when evaluating `target`.
    pub fn counts_for(&self, target: Difficulty) -> bool {
        *self != Difficulty::Ignored && *self <= target
    }
}

/// Thresholds: `(min height px, max occlusion, max truncation)`.
const GATES: [(Difficulty, f64, i32, f64); 3] = [
    (Difficulty::Easy, 40.0, 0, 0.15),
    (Difficulty::Moderate, 25.0, 1, 0.30),
    (Difficulty::Hard, 25.0, 2, 0.50),
];

pub fn classify_difficulty(rec: &DetectionRecord) -> Difficulty {
    let height = rec.bbox2d.height();
    GATES
        .iter()
        .find(|(_, h, occ, trunc)| height >= *h && rec.occlusion <= *occ && rec.truncation <= *trunc)
        .map_or(Difficulty::Ignored, |g| g.0)
}

/// Per-class extent statistics as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassExtentStats {
    pub class: String,
    /// `(w, h, l)`
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl ClassExtentStats {
    pub fn to_stats(&self) -> Result<ExtentStats> {
        ExtentStats::new(self.mean, self.std)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Mean and population standard deviation of `(w, h, l)` over records of `class`.
pub fn compute_extent_stats<'a>(
    records: impl IntoIterator<Item = &'a DetectionRecord>,
    class: &str,
) -> Result<ClassExtentStats> {
    let dims: Vec<[f64; 3]> = records
        .into_iter()
        .filter(|r| r.class_name == class)
        .map(|r| r.extents_whl())
        .collect();
    if dims.len() < 2 {
        return domain(format!("need at least 2 '{class}' records for extent statistics, found {}", dims.len()));
    }
    let n = dims.len() as f64;
    let mean = [0, 1, 2].map(|k| dims.iter().map(|d| d[k]).sum::<f64>() / n);
    let std = [0, 1, 2].map(|k| (dims.iter().map(|d| (d[k] - mean[k]).powi(2)).sum::<f64>() / n).sqrt());
    if std.iter().any(|s| !(*s > 0.0)) {
        return domain(format!("degenerate extent statistics for '{class}': std {std:?}"));
    }
    Ok(ClassExtentStats {
        class: class.to_string(),
        mean,
        std,
    })
}

pub fn parse_split(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
}

pub fn read_split(path: &Path) -> Result<Vec<String>> {
    Ok(parse_split(&std::fs::read_to_string(path)?))
}

/// Standard directory layout below a KITTI object root.
#[derive(Debug, Clone)]
pub struct KittiLayout {
    pub root: PathBuf,
}

impl KittiLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn label(&self, frame: &str) -> PathBuf {
        self.root.join("label_2").join(format!("{frame}.txt"))
    }

    pub fn calib(&self, frame: &str) -> PathBuf {
        self.root.join("calib").join(format!("{frame}.txt"))
    }

    pub fn image(&self, frame: &str) -> PathBuf {
        self.root.join("image_2").join(format!("{frame}.png"))
    }

    pub fn split(&self, name: &str) -> PathBuf {
        self.root.join("splits").join(format!("{name}.txt"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect2d;

    fn rec(height: f64, occ: i32, trunc: f64) -> DetectionRecord {
        DetectionRecord {
            class_name: "Car".into(),
            truncation: trunc,
            occlusion: occ,
            alpha: 0.0,
            bbox2d: Rect2d::new(100.0, 100.0, 150.0, 100.0 + height),
            dimensions: [1.5, 1.6, 3.9],
            location: [0.0, 1.5, 20.0],
            rotation_y: 0.0,
            score: None,
        }
    }

    #[test]
    fn difficulty_examples() {
        assert_eq!(classify_difficulty(&rec(50.0, 0, 0.0)), Difficulty::Easy);
        assert_eq!(classify_difficulty(&rec(30.0, 1, 0.2)), Difficulty::Moderate);
        assert_eq!(classify_difficulty(&rec(20.0, 0, 0.0)), Difficulty::Ignored);
        assert_eq!(classify_difficulty(&rec(30.0, 2, 0.45)), Difficulty::Hard);
        assert_eq!(classify_difficulty(&rec(300.0, 3, 0.0)), Difficulty::Ignored);
    }

    #[test]
    fn difficulty_is_monotone() {
        let heights = [10.0, 24.9, 25.0, 39.9, 40.0, 80.0];
        let truncs = [0.0, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6];
        for &h in &heights {
            for occ in 0..4 {
                for &t in &truncs {
                    let d = classify_difficulty(&rec(h, occ, t));
                    for &h2 in heights.iter().filter(|x| **x >= h) {
                        for occ2 in 0..=occ {
                            for &t2 in truncs.iter().filter(|x| **x <= t) {
                                assert!(classify_difficulty(&rec(h2, occ2, t2)) <= d);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn counts_for_is_cumulative() {
        assert!(Difficulty::Easy.counts_for(Difficulty::Hard));
        assert!(!Difficulty::Hard.counts_for(Difficulty::Moderate));
        assert!(!Difficulty::Ignored.counts_for(Difficulty::Hard));
    }

    #[test]
    fn two_point_statistics() {
        let mut a = rec(50.0, 0, 0.0);
        a.dimensions = [1.0, 1.0, 1.0];
        let mut b = a.clone();
        b.dimensions = [3.0, 3.0, 3.0];
        let s = compute_extent_stats([&a, &b], "Car").unwrap();
        assert_eq!(s.mean, [2.0; 3]);
        assert_eq!(s.std, [1.0; 3]);
    }

    #[test]
    fn degenerate_statistics_are_rejected() {
        let mut a = rec(50.0, 0, 0.0);
        a.dimensions = [2.0, 2.0, 4.0];
        assert!(compute_extent_stats([&a, &a.clone()], "Car").is_err());
        assert!(compute_extent_stats([&a], "Car").is_err());
        assert!(compute_extent_stats([&a, &a], "Van").is_err());
    }

    #[test]
    fn stats_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = ClassExtentStats {
            class: "Car".into(),
            mean: [1.63, 1.53, 3.88],
            std: [0.1, 0.14, 0.43],
        };
        let p = dir.path().join("car.json");
        s.save(&p).unwrap();
        assert_eq!(ClassExtentStats::load(&p).unwrap(), s);
        assert!(std::fs::read_to_string(&p).unwrap().contains("\"class\""));
    }

    #[test]
    fn split_parsing() {
        assert_eq!(parse_split("000001\n\n 000007 \n"), vec!["000001", "000007"]);
    }
}
