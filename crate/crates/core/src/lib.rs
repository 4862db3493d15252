//! Geometry core for monocular 2D-to-3D detection lifting.
//!
//! * [`geometry`]: pinhole camera, quaternions, the 10D lifting map and
//!   allocentric/egocentric conversions.
//! * [`loss`]: the metric corner loss with analytic gradients, separate-term
//!   baselines and the controlled single-instance optimization.
//! * [`kitti`]: label/calibration/split I/O, difficulty binning, extent statistics.
//! * [`metrics`]: 2D, BEV and 3D IoU, NMS, average precision and binned recall.
//! * [`shape`]: TSDF grids, mesh conversion, marching cubes, latent hypersphere
//!   operations, Weiszfeld medians and the autoencoder loss functional.
//! * [`augment`]: projective texturing, z-buffer rasterization and synthetic
//!   3D augmentation.

pub mod augment;
pub mod error;
pub mod geometry;
pub mod kitti;
pub mod loss;
pub mod metrics;
pub mod shape;

pub use error::{Error, Result};
pub use geometry::{Box3D, CameraIntrinsics, ExtentStats, LiftParams, Quaternion, Rect2d};
pub use kitti::DetectionRecord;
pub use shape::{LatentShape, TsdfGrid, TriMesh};
