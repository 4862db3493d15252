//! KITTI object labels, calibration, difficulty levels and split files.

mod calib;
mod dataset;
mod label;

pub use calib::{parse_calibration, read_calibration, FrameCalibration};
pub use dataset::{
    classify_difficulty, compute_extent_stats, parse_split, read_split, ClassExtentStats, Difficulty, KittiLayout,
};
pub use label::{
    box3d_to_record, parse_label_file, read_label_file, record_to_box3d, rotation_y_matrix, serialize_records,
    write_label_file, DetectionRecord, DONT_CARE,
};
