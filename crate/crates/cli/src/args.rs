//! Command-line arguments. Every flag can also be set through an environment
//! variable with the `ROI10D_` prefix, e.g. `ROI10D_DATA_ROOT`.
//!
//! The parsed structure doubles as the run configuration embedded in reports.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::failure::ConfigError;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "roi10d", version, about = "Monocular 3D box lifting, evaluation and augmentation tools")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// KITTI object root with label_2/, calib/, image_2/ and splits/.
    #[arg(long, global = true, env = "ROI10D_DATA_ROOT")]
    pub data_root: Option<PathBuf>,
    /// Split name under <data-root>/splits/ or a path to a split file.
    #[arg(long, global = true, env = "ROI10D_SPLIT", default_value = "val")]
    pub split: String,
    /// Object class to evaluate or synthesize.
    #[arg(long = "class", global = true, env = "ROI10D_CLASS", default_value = "Car")]
    pub class_name: String,
    /// 2D-NMS threshold applied to predictions.
    #[arg(long, global = true, env = "ROI10D_NMS2D", default_value_t = 0.65)]
    pub nms2d: f64,
    /// BEV-NMS threshold applied after 2D-NMS.
    #[arg(long, global = true, env = "ROI10D_NMS_BEV", default_value_t = 0.05)]
    pub nms_bev: f64,
    /// IoU threshold for AP; reports also include 0.5.
    #[arg(long, global = true, env = "ROI10D_IOU", default_value_t = 0.7)]
    pub iou: f64,
    #[arg(long, global = true, env = "ROI10D_AP_POINTS", default_value = "11")]
    pub ap_points: ApPointsArg,
    #[arg(long, global = true, env = "ROI10D_DEPTH_BIN_M", default_value_t = 5.0)]
    pub depth_bin_m: f64,
    #[arg(long, global = true, env = "ROI10D_AZIMUTH_BIN_DEG", default_value_t = 20.0)]
    pub azimuth_bin_deg: f64,
    #[arg(long, global = true, env = "ROI10D_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = "ROI10D_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "ROI10D_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ApPointsArg {
    #[value(name = "11")]
    Eleven,
    #[value(name = "40")]
    Forty,
}

impl From<ApPointsArg> for roi10d::metrics::ApPoints {
    fn from(a: ApPointsArg) -> Self {
        match a {
            ApPointsArg::Eleven => roi10d::metrics::ApPoints::Eleven,
            ApPointsArg::Forty => roi10d::metrics::ApPoints::Forty,
        }
    }
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// AP for 2D, BEV and 3D boxes over easy/moderate/hard.
    Evaluate(EvaluateArgs),
    /// Controlled lifting-loss experiment from perturbed initializations.
    OptimizeDemo(OptimizeArgs),
    /// Per-class median shapes and interpolation strips from a codebook.
    Shape(ShapeArgs),
    /// Composite synthetic cars into the frames of a split.
    Augment(AugmentArgs),
    /// Recall binned by depth and azimuth.
    RecallBins(RecallArgs),
    /// Per-class extent statistics from the labels of a split.
    Stats,
    /// Writes a small synthetic shape codebook.
    MakeCodebook(MakeCodebookArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evaluate(_) => "evaluate",
            Command::OptimizeDemo(_) => "optimize-demo",
            Command::Shape(_) => "shape",
            Command::Augment(_) => "augment",
            Command::RecallBins(_) => "recall-bins",
            Command::Stats => "stats",
            Command::MakeCodebook(_) => "make-codebook",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Directory of prediction files named <frame>.txt.
    #[arg(long, env = "ROI10D_PRED_DIR")]
    pub pred_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum StepRuleArg {
    Polyak,
    Momentum,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    /// Target instance as a KITTI label line.
    #[arg(long, env = "ROI10D_LABEL")]
    pub label: String,
    /// Calibration file with a P2 entry; KITTI defaults when omitted.
    #[arg(long, env = "ROI10D_CALIB")]
    pub calib: Option<PathBuf>,
    /// Extent statistics JSON as written by `stats`; car defaults when omitted.
    #[arg(long, env = "ROI10D_STATS")]
    pub stats: Option<PathBuf>,
    #[arg(long, env = "ROI10D_RUNS", default_value_t = 10)]
    pub runs: usize,
    #[arg(long, env = "ROI10D_MAX_ITER", default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, env = "ROI10D_WARMUP", default_value_t = 500)]
    pub warmup: usize,
    /// Step rule after warm-up.
    #[arg(long, env = "ROI10D_STEP_RULE", default_value = "polyak")]
    pub step_rule: StepRuleArg,
    /// Largest initial rotation error in degrees.
    #[arg(long, env = "ROI10D_MAX_ROTATION_DEG", default_value_t = 20.0)]
    pub max_rotation_deg: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShapeArgs {
    /// Codebook directory with index.json and <id>.tsdf files.
    #[arg(long, env = "ROI10D_CODEBOOK")]
    pub codebook: PathBuf,
    /// Class tags for medians; all tags present in the codebook when omitted.
    #[arg(long = "tag", env = "ROI10D_TAGS", value_delimiter = ',')]
    pub tags: Vec<String>,
    /// Interpolation pairs as `idA:idB`.
    #[arg(long = "pair", env = "ROI10D_PAIRS", value_delimiter = ',')]
    pub pairs: Vec<String>,
    /// Meshes per interpolation strip.
    #[arg(long, env = "ROI10D_STEPS", default_value_t = 5)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AugmentArgs {
    /// Mesh bank directory with <id>.json and <id>.ply files.
    #[arg(long, env = "ROI10D_BANK")]
    pub bank: PathBuf,
    /// At most this many cars per frame.
    #[arg(long, env = "ROI10D_K_MAX", default_value_t = 3)]
    pub k_max: usize,
    /// Fill DontCare regions with noise.
    #[arg(long, env = "ROI10D_DONT_CARE_NOISE")]
    pub dont_care_noise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum DifficultyArg {
    Easy,
    Moderate,
    Hard,
}

impl From<DifficultyArg> for roi10d::kitti::Difficulty {
    fn from(d: DifficultyArg) -> Self {
        match d {
            DifficultyArg::Easy => roi10d::kitti::Difficulty::Easy,
            DifficultyArg::Moderate => roi10d::kitti::Difficulty::Moderate,
            DifficultyArg::Hard => roi10d::kitti::Difficulty::Hard,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecallArgs {
    #[arg(long, env = "ROI10D_PRED_DIR")]
    pub pred_dir: PathBuf,
    /// A ground-truth box counts as recalled at BEV IoU at or above this value.
    #[arg(long, env = "ROI10D_RECALL_IOU", default_value_t = 0.5)]
    pub recall_iou: f64,
    /// Ground truth up to this difficulty is binned.
    #[arg(long, env = "ROI10D_DIFFICULTY", default_value = "hard")]
    pub difficulty: DifficultyArg,
    #[arg(long, env = "ROI10D_MAX_DEPTH", default_value_t = 80.0)]
    pub max_depth: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MakeCodebookArgs {
    /// Entries per class tag.
    #[arg(long, env = "ROI10D_PER_TAG", default_value_t = 3)]
    pub per_tag: usize,
    /// Grid resolution along each axis.
    #[arg(long, env = "ROI10D_RESOLUTION", default_value_t = 32)]
    pub resolution: usize,
}

fn unit_interval(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError(format!("--{name} must be positive, got {v}")))
    }
}

pub fn existing_dir(name: &str, p: &Path) -> Result<(), ConfigError> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(ConfigError(format!("--{name} {} is not a directory", p.display())))
    }
}

fn existing_file(name: &str, p: &Path) -> Result<(), ConfigError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(ConfigError(format!("--{name} {} is not a file", p.display())))
    }
}

impl Cli {
    pub fn data_root(&self) -> Result<&Path, ConfigError> {
        self.common
            .data_root
            .as_deref()
            .ok_or_else(|| ConfigError(format!("{} needs --data-root", self.command.name())))
    }

    /// The split file: an existing path as given, otherwise `<data-root>/splits/<name>.txt`.
    pub fn split_path(&self) -> Result<PathBuf, ConfigError> {
        let direct = PathBuf::from(&self.common.split);
        if direct.is_file() {
            return Ok(direct);
        }
        let p = self.data_root()?.join("splits").join(format!("{}.txt", self.common.split));
        if p.is_file() {
            Ok(p)
        } else {
            Err(ConfigError(format!("split '{}' not found (looked for {})", self.common.split, p.display())))
        }
    }

    /// Checks thresholds and input paths before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.common;
        unit_interval("nms2d", c.nms2d)?;
        unit_interval("nms-bev", c.nms_bev)?;
        unit_interval("iou", c.iou)?;
        positive("depth-bin-m", c.depth_bin_m)?;
        positive("azimuth-bin-deg", c.azimuth_bin_deg)?;
        let needs_data = !matches!(self.command, Command::OptimizeDemo(_) | Command::Shape(_) | Command::MakeCodebook(_));
        if needs_data {
            existing_dir("data-root", self.data_root()?)?;
            self.split_path()?;
        }
        match &self.command {
            Command::Evaluate(a) => existing_dir("pred-dir", &a.pred_dir)?,
            Command::RecallBins(a) => {
                existing_dir("pred-dir", &a.pred_dir)?;
                unit_interval("recall-iou", a.recall_iou)?;
                positive("max-depth", a.max_depth)?;
            }
            Command::OptimizeDemo(a) => {
                if let Some(p) = &a.calib {
                    existing_file("calib", p)?;
                }
                if let Some(p) = &a.stats {
                    existing_file("stats", p)?;
                }
                if a.runs == 0 {
                    return Err(ConfigError("--runs must be at least 1".into()));
                }
                if a.warmup > a.max_iter {
                    return Err(ConfigError("--warmup exceeds --max-iter".into()));
                }
                positive("max-rotation-deg", a.max_rotation_deg)?;
            }
            Command::Shape(a) => {
                existing_dir("codebook", &a.codebook)?;
                if a.steps < 2 {
                    return Err(ConfigError("--steps must be at least 2".into()));
                }
            }
            Command::Augment(a) => existing_dir("bank", &a.bank)?,
            Command::MakeCodebook(a) => {
                if a.per_tag == 0 || a.resolution < 8 {
                    return Err(ConfigError("--per-tag must be positive and --resolution at least 8".into()));
                }
            }
            Command::Stats => {}
        }
        Ok(())
    }
}
