//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p roi10d --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roi10d::augment::{augment_frame, AugmentConfig, MeshBank, MeshBankEntry, MeshMeta, SceneImage};
use roi10d::geometry::{lift, project_box};
use roi10d::kitti::{
    classify_difficulty, parse_label_file, read_label_file, record_to_box3d, rotation_y_matrix, serialize_records,
    Difficulty,
};
use roi10d::loss::{corner_loss, corner_loss_grad, optimize_instance, OptimConfig};
use roi10d::metrics::polygon::intersection_area;
use roi10d::metrics::{
    average_precision, footprint, iou_2d, iou_3d, iou_bev, nms, ApPoints, EvalConfig, EvalFrame, NmsMode,
    OverlapMetric, RotatedRect,
};
use roi10d::shape::{
    marching_cubes, median_objective, mesh_to_tsdf, normalize_latent, shape_loss, slerp, tsdf_ae_loss,
    weiszfeld_median, ClassTag, LATENT_DIM,
};
use roi10d::{Box3D, CameraIntrinsics, DetectionRecord, ExtentStats, LatentShape, LiftParams, Quaternion, Rect2d, TriMesh, TsdfGrid};

fn report(name: &str, pass: bool, detail: impl AsRef<str>) {
    println!("{} {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "{name} failed: {}", detail.as_ref());
}

fn kitti_cam() -> CameraIntrinsics {
    CameraIntrinsics::new(721.5377, 721.5377, 609.5593, 172.854).unwrap()
}

fn car_stats() -> ExtentStats {
    ExtentStats::new([1.63, 1.53, 3.88], [0.1, 0.14, 0.43]).unwrap()
}

fn random_unit_quat(rng: &mut impl Rng) -> Quaternion {
    loop {
        let v = [0; 4].map(|_| rng.gen_range(-1.0..1.0));
        let q = Quaternion::from_array(v);
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return q.normalize().unwrap();
        }
    }
}

fn random_axis(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let a = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = a.norm();
        if n > 0.1 && n <= 1.0 {
            return a / n;
        }
    }
}

fn random_params(rng: &mut impl Rng, z: f64) -> LiftParams {
    LiftParams {
        q_allo: random_unit_quat(rng),
        u: rng.gen_range(200.0..1000.0),
        v: rng.gen_range(100.0..250.0),
        z,
        deviation: [0; 3].map(|_| rng.gen_range(-2.0..2.0)),
        shape: LatentShape::canonical(6),
    }
}

/// Relative error with an absolute floor on the denominator, so entries
/// that are zero up to cancellation do not dominate.
const GRAD_FLOOR: f64 = 1e-4;

#[test]
fn gradient_matches_finite_differences() {
    let start = Instant::now();
    let (cam, stats) = (kitti_cam(), car_stats());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for _ in 0..1000 {
        let (zt, zp) = (rng.gen_range(5.0..50.0), rng.gen_range(5.0..50.0));
        let target = lift(&random_params(&mut rng, zt), &stats, &cam).unwrap();
        let p = random_params(&mut rng, zp);
        let g = corner_loss_grad(&p, &target, &stats, &cam).unwrap().flat();
        let loss_at = |x: &[f64; 10]| {
            let q = LiftParams {
                q_allo: Quaternion::new(x[0], x[1], x[2], x[3]),
                u: x[4],
                v: x[5],
                z: x[6],
                deviation: [x[7], x[8], x[9]],
                shape: p.shape.clone(),
            };
            corner_loss(&lift(&q, &stats, &cam).unwrap(), &target)
        };
        let q = p.q_allo.to_array();
        let x0 = [q[0], q[1], q[2], q[3], p.u, p.v, p.z, p.deviation[0], p.deviation[1], p.deviation[2]];
        for k in 0..10 {
            let (mut xp, mut xm) = (x0, x0);
            xp[k] += h;
            xm[k] -= h;
            let fd = (loss_at(&xp) - loss_at(&xm)) / (2.0 * h);
            let abs = (fd - g[k]).abs();
            worst_abs = worst_abs.max(abs);
            worst_rel = worst_rel.max(abs / fd.abs().max(g[k].abs()).max(GRAD_FLOOR));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "gradient finite differences",
        worst_rel < 1e-4 && secs < 10.0,
        format!("1000 instances, worst relative error {worst_rel:.2e} (abs {worst_abs:.2e}), {secs:.2} s"),
    );
}

#[test]
fn controlled_convergence() {
    let start = Instant::now();
    let (cam, stats) = (kitti_cam(), car_stats());
    let cfg = OptimConfig::default();
    let (mut converged, mut monotone, mut worst_rise) = (0, 0, 0.0f64);
    let mut finals = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = LiftParams {
            q_allo: Quaternion::from_yaw(rng.gen_range(-PI..PI)),
            u: rng.gen_range(300.0..900.0),
            v: rng.gen_range(150.0..220.0),
            z: 15.0,
            deviation: [0; 3].map(|_| rng.gen_range(-1.5..1.5)),
            shape: LatentShape::canonical(6),
        };
        let target = lift(&truth, &stats, &cam).unwrap();
        let roi = project_box(&target, &cam).unwrap();
        let perturb = Quaternion::from_axis_angle(&random_axis(&mut rng), rng.gen_range(0.0..20f64.to_radians()));
        let init = LiftParams {
            q_allo: (perturb * truth.q_allo).normalize().unwrap(),
            u: truth.u + rng.gen_range(-0.3..0.3) * roi.width(),
            v: truth.v + rng.gen_range(-0.3..0.3) * roi.height(),
            z: truth.z * (1.0 + rng.gen_range(-0.3..0.3)),
            deviation: [0.0; 3],
            shape: truth.shape.clone(),
        };
        let trace = optimize_instance(&init, &target, &roi, &stats, &cam, &cfg).unwrap();
        let fin = trace.final_loss();
        finals.push(fin);
        if fin < 1e-3 && trace.iterations() <= 2000 {
            converged += 1;
        }
        let post: Vec<f64> = trace.records.iter().filter(|r| !r.warmup).map(|r| r.loss).collect();
        let rise = post.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        worst_rise = worst_rise.max(rise);
        if rise <= 1e-6 {
            monotone += 1;
        }
    }
    finals.sort_by(f64::total_cmp);
    let secs = start.elapsed().as_secs_f64();
    report(
        "controlled convergence",
        converged >= 95 && monotone == 100 && secs < 60.0,
        format!(
            "{converged}/100 below 1e-3 m, {monotone}/100 monotone after warm-up (worst rise {worst_rise:.1e}), median final {:.1e} m, worst {:.1e} m, {secs:.1} s",
            finals[50], finals[99]
        ),
    );
}

// ---------------------------------------------------------------- overlap

/// Stratified estimate: one jittered sample per cell of an `n^d` grid over `lo..hi`.
fn stratified<const D: usize>(
    rng: &mut impl Rng,
    lo: [f64; D],
    hi: [f64; D],
    n: usize,
    mut visit: impl FnMut([f64; D]),
) {
    let cells = n.pow(D as u32);
    for c in 0..cells {
        let mut idx = c;
        let mut p = [0.0; D];
        for k in 0..D {
            let i = idx % n;
            idx /= n;
            p[k] = lo[k] + (hi[k] - lo[k]) * (i as f64 + rng.gen::<f64>()) / n as f64;
        }
        visit(p);
    }
}

fn ratio(both: usize, a: usize, b: usize) -> f64 {
    let union = a + b - both;
    if union == 0 {
        0.0
    } else {
        both as f64 / union as f64
    }
}

fn in_rect(r: &Rect2d, p: [f64; 2]) -> bool {
    p[0] >= r.left && p[0] <= r.right && p[1] >= r.top && p[1] <= r.bottom
}

/// Ground-plane rectangle with `w` along `(cos ψ, −sin ψ)` and `l` along `(sin ψ, cos ψ)`.
fn in_rotated(r: &RotatedRect, p: [f64; 2]) -> bool {
    let (s, c) = r.yaw.sin_cos();
    let d = [p[0] - r.center[0], p[1] - r.center[1]];
    (d[0] * c - d[1] * s).abs() <= r.size[0] / 2.0 && (d[0] * s + d[1] * c).abs() <= r.size[1] / 2.0
}

fn rotated_extent(r: &RotatedRect) -> [f64; 2] {
    let (s, c) = r.yaw.sin_cos();
    let (hw, hl) = (r.size[0] / 2.0, r.size[1] / 2.0);
    [c.abs() * hw + s.abs() * hl, s.abs() * hw + c.abs() * hl]
}

#[derive(Clone, Copy)]
struct YawBox {
    center: [f64; 3],
    size: [f64; 3],
    yaw: f64,
}

impl YawBox {
    fn random(rng: &mut impl Rng, near: Option<&YawBox>) -> Self {
        let base = near.map_or([0.0, 1.0, 20.0], |b| b.center);
        let spread = if near.is_some() { 2.0 } else { 5.0 };
        YawBox {
            center: [
                base[0] + rng.gen_range(-spread..spread),
                base[1] + rng.gen_range(-0.8..0.8),
                base[2] + rng.gen_range(-spread..spread),
            ],
            size: [rng.gen_range(1.0..3.0), rng.gen_range(1.0..2.5), rng.gen_range(2.0..6.0)],
            yaw: rng.gen_range(-PI..PI),
        }
    }

    fn bev(&self) -> RotatedRect {
        RotatedRect::new([self.center[0], self.center[2]], [self.size[0], self.size[2]], self.yaw)
    }

    fn box3d(&self) -> Box3D {
        Box3D::from_pose(&rotation_y_matrix(self.yaw), &Vector3::from(self.center), self.size)
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        (p[1] - self.center[1]).abs() <= self.size[1] / 2.0 && in_rotated(&self.bev(), [p[0], p[2]])
    }

    /// Rotation by `phi` about the vertical axis followed by a translation.
    fn moved(&self, phi: f64, t: [f64; 3]) -> Self {
        let (s, c) = phi.sin_cos();
        let [x, y, z] = self.center;
        YawBox {
            center: [c * x + s * z + t[0], y + t[1], -s * x + c * z + t[2]],
            size: self.size,
            yaw: self.yaw + phi,
        }
    }
}

#[test]
fn iou_monte_carlo_and_rigid_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut err_2d, mut err_bev, mut err_3d) = (0.0f64, 0.0f64, 0.0f64);
    let mut nonzero = [0usize; 3];
    for _ in 0..200 {
        // image rectangles
        let a = Rect2d::new(0.0, 0.0, rng.gen_range(20.0..150.0), rng.gen_range(20.0..150.0));
        let (dx, dy) = (rng.gen_range(-60.0..80.0), rng.gen_range(-60.0..80.0));
        let b = Rect2d::new(dx, dy, dx + rng.gen_range(20.0..150.0), dy + rng.gen_range(20.0..150.0));
        let lo = [a.left.min(b.left), a.top.min(b.top)];
        let hi = [a.right.max(b.right), a.bottom.max(b.bottom)];
        let (mut na, mut nb, mut both) = (0, 0, 0);
        stratified(&mut rng, lo, hi, 1000, |p| {
            let (ia, ib) = (in_rect(&a, p), in_rect(&b, p));
            na += ia as usize;
            nb += ib as usize;
            both += (ia && ib) as usize;
        });
        let exact = iou_2d(&a, &b);
        nonzero[0] += (exact > 0.0) as usize;
        err_2d = err_2d.max((exact - ratio(both, na, nb)).abs());

        // ground-plane and 3D boxes
        let ba = YawBox::random(&mut rng, None);
        let bb = YawBox::random(&mut rng, Some(&ba));
        let (ra, rb) = (ba.bev(), bb.bev());
        let (ea, eb) = (rotated_extent(&ra), rotated_extent(&rb));
        let lo = [(ra.center[0] - ea[0]).min(rb.center[0] - eb[0]), (ra.center[1] - ea[1]).min(rb.center[1] - eb[1])];
        let hi = [(ra.center[0] + ea[0]).max(rb.center[0] + eb[0]), (ra.center[1] + ea[1]).max(rb.center[1] + eb[1])];
        let (mut na, mut nb, mut both) = (0, 0, 0);
        stratified(&mut rng, lo, hi, 1000, |p| {
            let (ia, ib) = (in_rotated(&ra, p), in_rotated(&rb, p));
            na += ia as usize;
            nb += ib as usize;
            both += (ia && ib) as usize;
        });
        let exact = iou_bev(&ra, &rb);
        nonzero[1] += (exact > 0.0) as usize;
        err_bev = err_bev.max((exact - ratio(both, na, nb)).abs());

        let ylo = (ba.center[1] - ba.size[1] / 2.0).min(bb.center[1] - bb.size[1] / 2.0);
        let yhi = (ba.center[1] + ba.size[1] / 2.0).max(bb.center[1] + bb.size[1] / 2.0);
        let (mut na, mut nb, mut both) = (0, 0, 0);
        stratified(&mut rng, [lo[0], ylo, lo[1]], [hi[0], yhi, hi[1]], 100, |p| {
            let (ia, ib) = (ba.contains(p), bb.contains(p));
            na += ia as usize;
            nb += ib as usize;
            both += (ia && ib) as usize;
        });
        let exact = iou_3d(&ba.box3d(), &bb.box3d()).unwrap();
        nonzero[2] += (exact > 0.0) as usize;
        err_3d = err_3d.max((exact - ratio(both, na, nb)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "IoU Monte-Carlo 2D",
        err_2d < 2e-3,
        format!("200 pairs ({} overlapping), 1e6 samples each, worst |error| {err_2d:.1e}", nonzero[0]),
    );
    report(
        "IoU Monte-Carlo BEV",
        err_bev < 2e-3,
        format!("200 pairs ({} overlapping), 1e6 samples each, worst |error| {err_bev:.1e}", nonzero[1]),
    );
    report(
        "IoU Monte-Carlo 3D",
        err_3d < 2e-3,
        format!("200 pairs ({} overlapping), 1e6 samples each, worst |error| {err_3d:.1e}, total {secs:.1} s", nonzero[2]),
    );

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = YawBox::random(&mut rng, None);
        let b = YawBox::random(&mut rng, Some(&a));
        let phi = rng.gen_range(-PI..PI);
        let t = [rng.gen_range(-50.0..50.0), rng.gen_range(-2.0..2.0), rng.gen_range(-50.0..50.0)];
        let (ma, mb) = (a.moved(phi, t), b.moved(phi, t));
        worst = worst.max((iou_bev(&a.bev(), &b.bev()) - iou_bev(&ma.bev(), &mb.bev())).abs());
        let before = iou_3d(&a.box3d(), &b.box3d()).unwrap();
        let after = iou_3d(&ma.box3d(), &mb.box3d()).unwrap();
        worst = worst.max((before - after).abs());
    }
    report(
        "rotated IoU rigid invariance",
        worst <= 1e-9,
        format!("1000 pairs, BEV and 3D, worst change {worst:.1e}"),
    );
}

// ---------------------------------------------------------------- AP

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn golden_frames() -> Vec<EvalFrame> {
    (0..5)
        .map(|k| {
            let id = format!("{k:06}");
            EvalFrame {
                gts: read_label_file(&fixture(&format!("ap_golden/label_2/{id}.txt"))).unwrap(),
                preds: read_label_file(&fixture(&format!("ap_golden/pred/{id}.txt"))).unwrap(),
                id,
            }
        })
        .collect()
}

fn ap_of(frames: &[EvalFrame], difficulty: Difficulty, metric: OverlapMetric) -> f64 {
    let cfg = EvalConfig {
        class_name: "Car".into(),
        difficulty,
        metric,
        iou_threshold: 0.7,
        points: ApPoints::Eleven,
    };
    average_precision(frames, &cfg).unwrap().ap
}

#[test]
fn average_precision_golden_and_degenerate() {
    // Ranked predictions (score, outcome) for easy and moderate, 6 valid GTs:
    // .95 TP, .90 TP, .85 FP, .75 TP, .60 FP, .50 FP, .30 TP; the .80
    // prediction hits a hard GT and the .70 one lies in a DontCare region.
    // Interpolated precision on the 11-point grid: 1,1,1,1,3/4,3/4,4/7,0,0,0,0.
    let easy_moderate = (4.0 + 1.5 + 4.0 / 7.0) / 11.0;
    // Hard adds that GT (7 valid) and the .80 prediction becomes a TP:
    // 1,1,1,4/5,4/5,4/5,5/8,5/8,0,0,0.
    let hard = (3.0 + 2.4 + 1.25) / 11.0;
    let frames = golden_frames();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for metric in OverlapMetric::ALL {
        for (d, expected) in [
            (Difficulty::Easy, easy_moderate),
            (Difficulty::Moderate, easy_moderate),
            (Difficulty::Hard, hard),
        ] {
            let ap = ap_of(&frames, d, metric);
            worst = worst.max((ap - expected).abs());
            lines.push(format!("{}/{}={ap:.6}", metric.as_str(), d.as_str()));
        }
    }
    report(
        "AP golden fixture",
        worst <= 1e-12,
        format!("expected 85/154 (easy, moderate) and 133/220 (hard); {}", lines.join(" ")),
    );

    let mut perfect = golden_frames();
    perfect.push(EvalFrame {
        id: "labels_50".into(),
        gts: read_label_file(&fixture("kitti/labels_50.txt")).unwrap(),
        preds: Vec::new(),
    });
    for f in &mut perfect {
        f.preds = f
            .gts
            .iter()
            .filter(|g| !g.is_dont_care())
            .map(|g| DetectionRecord { score: Some(1.0), ..g.clone() })
            .collect();
    }
    let mut empty = perfect.clone();
    for f in &mut empty {
        f.preds.clear();
    }
    let (mut ones, mut zeros, mut cases) = (true, true, 0);
    for metric in OverlapMetric::ALL {
        for d in Difficulty::EVALUATED {
            ones &= ap_of(&perfect, d, metric) == 1.0;
            zeros &= ap_of(&empty, d, metric) == 0.0;
            cases += 1;
        }
    }
    report(
        "AP degenerate cases",
        ones && zeros,
        format!("{cases} metric/difficulty cases: perfect predictions -> 1 ({ones}), empty predictions -> 0 ({zeros})"),
    );
}

// ---------------------------------------------------------------- NMS

/// The suppression result is the unique subset `S` in which a detection is
/// kept iff no kept detection with a higher score overlaps it above the
/// threshold. Found here by enumerating all subsets.
fn brute_force_nms(scores: &[f64], overlap: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let n = scores.len();
    let mut solutions = Vec::new();
    for mask in 0u32..(1 << n) {
        let kept = |i: usize| mask & (1 << i) != 0;
        let consistent = (0..n).all(|i| {
            let suppressed = (0..n).any(|j| kept(j) && scores[j] > scores[i] && overlap[i][j] > threshold);
            kept(i) != suppressed
        });
        if consistent {
            solutions.push(mask);
        }
    }
    assert_eq!(solutions.len(), 1, "fixed point is not unique");
    (0..n).filter(|&i| solutions[0] & (1 << i) != 0).collect()
}

fn random_detection(rng: &mut impl Rng) -> DetectionRecord {
    let (x, z) = (rng.gen_range(-4.0..4.0), rng.gen_range(15.0..23.0));
    let (left, top) = (rng.gen_range(0.0..150.0), rng.gen_range(0.0..100.0));
    DetectionRecord {
        class_name: "Car".into(),
        truncation: 0.0,
        occlusion: 0,
        alpha: 0.0,
        bbox2d: Rect2d::new(left, top, left + rng.gen_range(30.0..90.0), top + rng.gen_range(30.0..90.0)),
        dimensions: [1.5, rng.gen_range(1.4..2.0), rng.gen_range(3.0..5.0)],
        location: [x, 1.5, z],
        rotation_y: rng.gen_range(-PI..PI),
        score: Some(rng.gen()),
    }
}

#[test]
fn nms_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut summary = Vec::new();
    let mut pass = true;
    for (mode, threshold) in [(NmsMode::Iou2d, 0.65), (NmsMode::Bev, 0.05)] {
        let (mut agree, mut invariant, mut suppressed) = (0, 0, 0);
        for _ in 0..500 {
            let n = rng.gen_range(2..=10);
            let dets: Vec<DetectionRecord> = (0..n).map(|_| random_detection(&mut rng)).collect();
            let scores: Vec<f64> = dets.iter().map(|d| d.score.unwrap()).collect();
            let overlap: Vec<Vec<f64>> = dets
                .iter()
                .map(|a| {
                    dets.iter()
                        .map(|b| match mode {
                            NmsMode::Iou2d => iou_2d(&a.bbox2d, &b.bbox2d),
                            NmsMode::Bev => iou_bev(&RotatedRect::from_record(a), &RotatedRect::from_record(b)),
                        })
                        .collect()
                })
                .collect();
            let expected = brute_force_nms(&scores, &overlap, threshold);
            let mut kept = nms(&dets, mode, threshold).unwrap();
            kept.sort_unstable();
            agree += (kept == expected) as usize;
            suppressed += n - kept.len();

            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let shuffled: Vec<DetectionRecord> = perm.iter().map(|&i| dets[i].clone()).collect();
            let mut back: Vec<usize> = nms(&shuffled, mode, threshold).unwrap().into_iter().map(|k| perm[k]).collect();
            back.sort_unstable();
            invariant += (back == expected) as usize;
        }
        pass &= agree == 500 && invariant == 500;
        summary.push(format!(
            "{mode:?}@{threshold}: {agree}/500 match, {invariant}/500 order-independent, {suppressed} suppressed"
        ));
    }
    report("NMS brute-force equivalence", pass, summary.join("; "));
}

// ---------------------------------------------------------------- shape space

fn random_latent(rng: &mut impl Rng) -> LatentShape {
    loop {
        let v: Vec<f64> = (0..LATENT_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return normalize_latent(&v).unwrap();
        }
    }
}

fn negate(s: &LatentShape) -> LatentShape {
    LatentShape::try_from(s.as_slice().iter().map(|x| -x).collect::<Vec<_>>()).unwrap()
}

/// Great-circle angle from chord lengths.
fn sphere_angle(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    2.0 * d.atan2(s)
}

#[test]
fn shape_loss_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut in_range, mut zero_same, mut zero_neg, mut symmetric) = (0, 0, 0, 0);
    let (mut worst_pi, mut worst_formula): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let a = random_latent(&mut rng);
        let b = random_latent(&mut rng);
        let l = shape_loss(&a, &b);
        in_range += (0.0..=PI).contains(&l) as usize;
        symmetric += (l == shape_loss(&b, &a)) as usize;
        zero_same += (shape_loss(&a, &a) == 0.0) as usize;
        zero_neg += (shape_loss(&a, &negate(&a)) == 0.0 && shape_loss(&negate(&a), &a) == 0.0) as usize;

        let d = a.dot(&b);
        if d.abs() < 0.99 {
            worst_formula = worst_formula.max((l - (2.0 * d * d - 1.0).acos()).abs());
        }
        // Gram–Schmidt partner orthogonal to a
        let o: Vec<f64> = b.as_slice().iter().zip(a.as_slice()).map(|(y, x)| y - d * x).collect();
        let o = normalize_latent(&o).unwrap();
        worst_pi = worst_pi.max((shape_loss(&a, &o) - PI).abs());
    }
    let pass = in_range == 10_000
        && symmetric == 10_000
        && zero_same == 10_000
        && zero_neg == 10_000
        && worst_pi <= 1e-12
        && worst_formula <= 1e-9;
    report(
        "shape loss properties",
        pass,
        format!(
            "10^4 pairs: in [0, pi] {in_range}, symmetric {symmetric}, zero at s {zero_same}, zero at -s {zero_neg}, \
             worst |L - pi| at orthogonality {worst_pi:.1e}, worst deviation from arccos(2d^2-1) {worst_formula:.1e}"
        ),
    );
}

#[test]
fn sphere_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut worst_norm, mut worst_angle): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let a = random_latent(&mut rng);
        let b = random_latent(&mut rng);
        let t: f64 = rng.gen();
        let s = slerp(&a, &b, t).unwrap();
        let n = s.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
        worst_norm = worst_norm.max((n - 1.0).abs());
        let omega = sphere_angle(a.as_slice(), b.as_slice());
        worst_angle = worst_angle
            .max((sphere_angle(a.as_slice(), s.as_slice()) - t * omega).abs())
            .max((sphere_angle(s.as_slice(), b.as_slice()) - (1.0 - t) * omega).abs());
    }
    report(
        "slerp on the sphere",
        worst_norm <= 1e-9 && worst_angle <= 1e-9,
        format!("10^4 triples, worst |norm - 1| {worst_norm:.1e}, worst angle error {worst_angle:.1e}"),
    );

    let mut worst_gap: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(3..=9);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
        let w = weiszfeld_median(&pts, 1e-12, 100_000).unwrap();
        let ours = median_objective(&pts, &w.median);
        // coarse-to-fine grid search over the bounding box
        let (mut cx, mut cy, mut half) = (5.0, 5.0, 5.0);
        let mut best = f64::INFINITY;
        for _ in 0..12 {
            let (mut bx, mut by) = (cx, cy);
            for i in 0..=100 {
                for j in 0..=100 {
                    let y = [cx - half + 2.0 * half * i as f64 / 100.0, cy - half + 2.0 * half * j as f64 / 100.0];
                    let f = median_objective(&pts, &y);
                    if f < best {
                        (best, bx, by) = (f, y[0], y[1]);
                    }
                }
            }
            (cx, cy, half) = (bx, by, half / 10.0);
        }
        worst_gap = worst_gap.max((ours - best).abs());
    }
    report(
        "Weiszfeld vs grid search",
        worst_gap <= 1e-4,
        format!("50 planar instances, worst objective gap {worst_gap:.1e}"),
    );
}

// ---------------------------------------------------------------- TSDF

fn nearest_vertex_distance(p: &Vector3<f64>, mesh: &TriMesh) -> f64 {
    mesh.vertices.iter().map(|v| (v - p).norm_squared()).fold(f64::INFINITY, f64::min).sqrt()
}

fn box_surface_distance(p: &Vector3<f64>, half: &Vector3<f64>) -> f64 {
    let q = p.abs() - half;
    let outside = q.sup(&Vector3::zeros()).norm();
    let inside = q.x.max(q.y).max(q.z).min(0.0);
    (outside + inside).abs()
}

/// Symmetric Hausdorff distance between the extracted surface and an
/// analytic one: extracted vertices to the analytic surface, and analytic
/// surface samples to the nearest extracted vertex (an upper bound on the
/// distance to the extracted surface).
fn hausdorff(mesh: &TriMesh, surface_distance: impl Fn(&Vector3<f64>) -> f64, samples: &[Vector3<f64>]) -> f64 {
    let forward = mesh.vertices.iter().map(&surface_distance).fold(0.0, f64::max);
    let backward = samples.iter().map(|p| nearest_vertex_distance(p, mesh)).fold(0.0, f64::max);
    forward.max(backward)
}

#[test]
fn tsdf_mesh_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dims = [128; 3];
    let mut lines = Vec::new();
    let mut pass = true;

    let radius = 1.0;
    let voxel = 2.6 * radius / 127.0;
    let sphere = TriMesh::icosphere(radius, 5);
    let grid = mesh_to_tsdf(&sphere, dims, voxel, 3.0 * voxel).unwrap();
    let rec = marching_cubes(&grid, 0.0).unwrap();
    let samples: Vec<Vector3<f64>> = (0..4000).map(|_| random_axis(&mut rng) * radius).collect();
    let h = hausdorff(&rec, |p| (p.norm() - radius).abs(), &samples);
    pass &= h < 2.0 * grid.voxel_diagonal();
    lines.push(format!("sphere {h:.4} m (limit {:.4})", 2.0 * grid.voxel_diagonal()));

    let half = Vector3::new(0.9, 0.5, 0.4);
    let voxel = 2.6 * half.max() / 127.0;
    let cuboid = TriMesh::cuboid(half);
    let grid = mesh_to_tsdf(&cuboid, dims, voxel, 3.0 * voxel).unwrap();
    let rec = marching_cubes(&grid, 0.0).unwrap();
    let samples: Vec<Vector3<f64>> = (0..4000)
        .map(|_| {
            let axis = rng.gen_range(0..3);
            let mut p = Vector3::new(
                rng.gen_range(-half.x..half.x),
                rng.gen_range(-half.y..half.y),
                rng.gen_range(-half.z..half.z),
            );
            p[axis] = if rng.gen() { half[axis] } else { -half[axis] };
            p
        })
        .collect();
    let h = hausdorff(&rec, |p| box_surface_distance(p, &half), &samples);
    pass &= h < 2.0 * grid.voxel_diagonal();
    lines.push(format!("box {h:.4} m (limit {:.4})", 2.0 * grid.voxel_diagonal()));

    let secs = start.elapsed().as_secs_f64();
    report(
        "TSDF round trip",
        pass && secs < 120.0,
        format!("128^3 grids, Hausdorff {}, {secs:.1} s", lines.join(", ")),
    );
}

/// Direct evaluation of the autoencoder objective with explicit loops.
fn ae_oracle(rec: &TsdfGrid, latent: &[f64], target: &TsdfGrid) -> f64 {
    let [nx, ny, nz] = rec.dims();
    let n = (nx * ny * nz) as f64;
    let (mut l1, mut tv) = (0.0, 0.0);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let v = rec.get(i, j, k) as f64;
                l1 += (v - target.get(i, j, k) as f64).abs();
                if i + 1 < nx {
                    tv += (rec.get(i + 1, j, k) as f64 - v).abs();
                }
                if j + 1 < ny {
                    tv += (rec.get(i, j + 1, k) as f64 - v).abs();
                }
                if k + 1 < nz {
                    tv += (rec.get(i, j, k + 1) as f64 - v).abs();
                }
            }
        }
    }
    let norm = latent.iter().map(|x| x * x).sum::<f64>().sqrt();
    l1 / n + (norm - 1.0).abs() + tv / n
}

#[test]
fn autoencoder_objective_matches_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let dims = [16; 3];
    let random_grid = |rng: &mut ChaCha8Rng| {
        let values = (0..4096).map(|_| rng.gen_range(-0.3f32..0.3)).collect();
        TsdfGrid::from_values(dims, 0.1, Vector3::zeros(), 0.3, values).unwrap()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rec = random_grid(&mut rng);
        let target = random_grid(&mut rng);
        let latent: Vec<f64> = (0..LATENT_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = tsdf_ae_loss(&rec, &latent, &target).unwrap().total;
        worst = worst.max((got - ae_oracle(&rec, &latent, &target)).abs());
    }
    let constant = TsdfGrid::from_values(dims, 0.1, Vector3::zeros(), 0.3, vec![0.17; 4096]).unwrap();
    let unit = LatentShape::canonical(LATENT_DIM);
    let zero = tsdf_ae_loss(&constant, unit.as_slice(), &constant).unwrap().total;
    report(
        "autoencoder objective",
        worst <= 1e-9 && zero == 0.0,
        format!("20 random 16^3 grids, worst |difference| {worst:.1e}; perfect constant case {zero}"),
    );
}

// ---------------------------------------------------------------- augmentation

fn augmentation_scene() -> (SceneImage, Vec<DetectionRecord>, MeshBank) {
    let image = SceneImage::filled(1242, 375, [110, 110, 110], kitti_cam());
    let labels = parse_label_file(
        "Car 0.00 0 -1.57 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59\n\
         Car 0.00 0 1.87 250.00 170.00 420.00 260.00 1.50 1.60 3.90 -4.00 1.70 12.00 1.55\n\
         Van 0.10 1 -0.40 800.00 160.00 900.00 230.00 2.20 1.90 5.10 6.50 1.80 25.00 -0.15\n\
         DontCare -1.00 -1 -10.00 1000.00 170.00 1100.00 200.00 -1.00 -1.00 -1.00 -1000.00 -1000.00 -1000.00 -10.00\n",
    )
    .unwrap();
    let extents = [[1.6, 1.5, 3.9], [1.8, 1.4, 4.5], [1.5, 1.6, 3.5], [1.9, 1.9, 4.8]];
    let bank = MeshBank {
        entries: extents
            .iter()
            .enumerate()
            .map(|(i, e)| MeshBankEntry {
                meta: MeshMeta {
                    id: format!("mesh_{i}"),
                    extents: *e,
                    class_tag: ClassTag::Car,
                    source_allocentric: None,
                },
                mesh: TriMesh::cuboid(Vector3::new(e[0] / 2.0, e[1] / 2.0, e[2] / 2.0))
                    .with_uniform_color([40 * i as u8 + 60, 30, 200 - 40 * i as u8]),
            })
            .collect(),
    };
    (image, labels, bank)
}

#[test]
fn augmentation_invariants() {
    let (image, labels, bank) = augmentation_scene();
    let cfg = AugmentConfig::default();
    let existing: Vec<Box3D> = labels
        .iter()
        .filter(|l| !l.is_dont_care())
        .map(|l| record_to_box3d(l).unwrap())
        .collect();
    let (mut overlaps, mut reruns, mut outside, mut added, mut pixels) = (0, 0, 0, 0, 0);
    let mut worst_overlap: f64 = 0.0;
    for seed in 0..100u64 {
        let out = augment_frame(&image, &labels, &bank, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let again = augment_frame(&image, &labels, &bank, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        reruns += (out == again && out.image.rgb == again.image.rgb) as usize;

        let mut boxes = existing.clone();
        for obj in &out.added {
            let fp = footprint(&obj.placement.box3d);
            for other in &boxes {
                let area = intersection_area(&fp, &footprint(other));
                worst_overlap = worst_overlap.max(area);
                overlaps += (area > 0.0) as usize;
            }
            boxes.push(obj.placement.box3d);

            let r = &obj.record.bbox2d;
            for &idx in &obj.pixels {
                let (x, y) = ((idx % image.width) as f64, (idx / image.width) as f64);
                let inside = x >= r.left - 1.0 && x <= r.right + 1.0 && y >= r.top - 1.0 && y <= r.bottom + 1.0;
                outside += !inside as usize;
            }
            pixels += obj.pixels.len();
            added += 1;
        }
    }
    report(
        "augmentation no BEV overlap",
        overlaps == 0 && added > 0,
        format!("100 seeds, {added} cars inserted, {overlaps} overlapping pairs (max area {worst_overlap:.1e})"),
    );
    report("augmentation determinism", reruns == 100, format!("{reruns}/100 reruns bit-identical"));
    report(
        "augmentation pixel containment",
        outside == 0 && pixels > 0,
        format!("{pixels} rendered pixels, {outside} outside their bbox2d by more than 1 px"),
    );
}

// ---------------------------------------------------------------- KITTI I/O

#[test]
fn kitti_round_trip_fixture() {
    let text = std::fs::read_to_string(fixture("kitti/labels_50.txt")).unwrap();
    let records = parse_label_file(&text).unwrap();
    let identical = serialize_records(&records) == text;
    let mut seen = std::collections::BTreeMap::new();
    for r in &records {
        let key = if r.is_dont_care() { "dontcare" } else { classify_difficulty(r).as_str() };
        *seen.entry(key).or_insert(0) += 1;
    }
    let covered = ["easy", "moderate", "hard", "ignored", "dontcare"].iter().all(|k| seen.contains_key(k));
    report(
        "KITTI round trip",
        identical && covered && records.len() == 50,
        format!("{} lines, byte-identical {identical}, coverage {seen:?}", records.len()),
    );
}
