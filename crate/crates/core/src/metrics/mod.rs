//! Overlap measures, suppression, average precision and binned recall.

mod ap;
mod iou;
mod nms;
pub mod polygon;
mod recall;
mod report;

pub use ap::{average_precision, ApPoints, EvalConfig, EvalFrame, PrCurve};
pub use iou::{footprint, iou_2d, iou_3d, iou_bev, iou_bev_boxes, is_gravity_aligned, OverlapMetric, RotatedRect};
pub use nms::{nms, nms_by, score_order, NmsMode};
pub use recall::{binned_recall, BinAxis, BinSpec, BinnedRecall};
pub use report::{evaluate, ApEntry, EvalReport};
