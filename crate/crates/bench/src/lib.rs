//! Seeded inputs shared by the benchmarks.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roi10d::geometry::lift;
use roi10d::shape::LATENT_DIM;
use roi10d::{Box3D, CameraIntrinsics, DetectionRecord, ExtentStats, LatentShape, LiftParams, Quaternion, Rect2d, TsdfGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kitti_camera() -> CameraIntrinsics {
    CameraIntrinsics::new(721.5377, 721.5377, 609.5593, 172.854).expect("valid intrinsics")
}

pub fn car_stats() -> ExtentStats {
    ExtentStats::new([1.63, 1.53, 3.88], [0.10, 0.14, 0.43]).expect("valid stats")
}

pub fn random_params<R: Rng>(rng: &mut R) -> LiftParams {
    LiftParams {
        q_allo: Quaternion::from_yaw(rng.gen_range(-3.1..3.1)),
        u: rng.gen_range(200.0..1000.0),
        v: rng.gen_range(120.0..250.0),
        z: rng.gen_range(8.0..50.0),
        deviation: [0; 3].map(|_| rng.gen_range(-1.5..1.5)),
        shape: LatentShape::canonical(LATENT_DIM),
    }
}

/// A lifting instance and a target box from different parameters.
pub fn lifting_pair<R: Rng>(rng: &mut R) -> (LiftParams, Box3D) {
    let target = lift(&random_params(rng), &car_stats(), &kitti_camera()).expect("lift");
    (random_params(rng), target)
}

/// Scored car detections packed into a small area so that NMS has work to do.
pub fn detections<R: Rng>(rng: &mut R, n: usize) -> Vec<DetectionRecord> {
    (0..n)
        .map(|_| {
            let (left, top) = (rng.gen_range(0.0..400.0), rng.gen_range(100.0..200.0));
            DetectionRecord {
                class_name: "Car".into(),
                truncation: 0.0,
                occlusion: 0,
                alpha: 0.0,
                bbox2d: Rect2d::new(left, top, left + rng.gen_range(30.0..120.0), top + rng.gen_range(30.0..80.0)),
                dimensions: [1.5, 1.6, 3.9],
                location: [rng.gen_range(-8.0..8.0), 1.6, rng.gen_range(10.0..30.0)],
                rotation_y: rng.gen_range(-3.1..3.1),
                score: Some(rng.gen()),
            }
        })
        .collect()
}

/// Analytic sphere distance field on an `n³` grid spanning `[-1, 1]³`.
pub fn sphere_grid(n: usize) -> TsdfGrid {
    let h = 2.0 / (n as f64 - 1.0);
    TsdfGrid::from_fn([n; 3], h, Vector3::repeat(-1.0), 3.0 * h, |p| p.norm() - 0.8).expect("valid grid")
}
