//! Pinhole camera math, quaternion algebra and the lifting map.

mod camera;
mod lifting;
mod quaternion;

pub use camera::{CameraIntrinsics, Rect2d};
pub use lifting::{
    alpha_from_rotation_y, allo_to_ego, ego_to_allo, lift, project_box, recover_lift_params,
    rotation_y_from_alpha, view_rotation, wrap_angle, Box3D, BoxPose, ExtentStats, LiftParams,
    CORNER_SIGNS,
};
pub use quaternion::Quaternion;
