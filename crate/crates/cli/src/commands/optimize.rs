use anyhow::{Context, Result};
use nalgebra::Vector3;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use roi10d::geometry::{project_box, recover_lift_params};
use roi10d::kitti::{parse_label_file, read_calibration, record_to_box3d, ClassExtentStats};
use roi10d::loss::{optimize_instance, CornerStepRule, OptimConfig, OptimTrace};
use roi10d::{CameraIntrinsics, Error, ExtentStats, LatentShape, LiftParams, Quaternion};

use crate::args::{Cli, OptimizeArgs, StepRuleArg};
use crate::data::{create_dir, task_rng, write, write_json};
use crate::failure::DataError;
use crate::svg::{Chart, Series};

/// KITTI left color camera.
const DEFAULT_INTRINSICS: [f64; 4] = [721.5377, 721.5377, 609.5593, 172.854];
/// Car extents `(w, h, l)` over the KITTI training labels.
const DEFAULT_STATS: ([f64; 3], [f64; 3]) = ([1.63, 1.53, 3.88], [0.10, 0.14, 0.43]);

#[derive(Debug, Serialize)]
struct RunSummary {
    run: usize,
    iterations: usize,
    initial_loss: f64,
    final_loss: f64,
    converged: bool,
    diverged: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a Cli,
    intrinsics: &'a CameraIntrinsics,
    stats: &'a ExtentStats,
    runs: &'a [RunSummary],
}

fn random_axis<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let a = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = a.norm();
        if n > 0.1 && n <= 1.0 {
            return a / n;
        }
    }
}

/// Rotation error up to `max_rot` about a random axis, centroid offsets up to
/// 30 % of the RoI size, ±30 % depth and mean extents.
fn perturbed_init<R: Rng>(truth: &LiftParams, roi_size: [f64; 2], max_rot: f64, rng: &mut R) -> Result<LiftParams> {
    let perturb = Quaternion::from_axis_angle(&random_axis(rng), rng.gen_range(0.0..max_rot));
    Ok(LiftParams {
        q_allo: (perturb * truth.q_allo).normalize()?,
        u: truth.u + rng.gen_range(-0.3..0.3) * roi_size[0],
        v: truth.v + rng.gen_range(-0.3..0.3) * roi_size[1],
        z: truth.z * (1.0 + rng.gen_range(-0.3..0.3)),
        deviation: [0.0; 3],
        shape: truth.shape.clone(),
    })
}

pub fn run(cli: &Cli, args: &OptimizeArgs) -> Result<()> {
    let cam = match &args.calib {
        Some(p) => read_calibration(p).with_context(|| format!("reading {}", p.display()))?.intrinsics(),
        None => {
            let [fx, fy, cx, cy] = DEFAULT_INTRINSICS;
            CameraIntrinsics::new(fx, fy, cx, cy)?
        }
    };
    let stats = match &args.stats {
        Some(p) => ClassExtentStats::load(p).with_context(|| format!("reading {}", p.display()))?.to_stats()?,
        None => ExtentStats::new(DEFAULT_STATS.0, DEFAULT_STATS.1)?,
    };
    let records = parse_label_file(&args.label).context("parsing --label")?;
    let [record] = records.as_slice() else {
        return Err(DataError(format!("--label must hold exactly one line, found {}", records.len())).into());
    };
    let target = record_to_box3d(record)?;
    let roi = project_box(&target, &cam)?;
    let truth = recover_lift_params(&target, &stats, &cam, LatentShape::canonical(roi10d::shape::LATENT_DIM))?;
    let config = OptimConfig {
        max_iter: args.max_iter,
        warmup_steps: args.warmup,
        corner_rule: match args.step_rule {
            StepRuleArg::Polyak => CornerStepRule::PolyakBacktracking,
            StepRuleArg::Momentum => CornerStepRule::Momentum,
        },
        ..OptimConfig::default()
    };
    let max_rot = args.max_rotation_deg.to_radians();

    let traces: Vec<(OptimTrace, bool)> = (0..args.runs)
        .into_par_iter()
        .map(|k| {
            let mut rng = task_rng(cli.common.seed, &format!("run{k}"));
            let init = perturbed_init(&truth, [roi.width(), roi.height()], max_rot, &mut rng)?;
            match optimize_instance(&init, &target, &roi, &stats, &cam, &config) {
                Ok(t) => Ok((t, false)),
                Err(Error::Divergence { iteration, loss, trace }) => {
                    log::warn!("run {k} diverged at iteration {iteration} (loss {loss:.3e})");
                    Ok((*trace, true))
                }
                Err(e) => Err(anyhow::Error::new(e).context(format!("run {k}"))),
            }
        })
        .collect::<Result<_>>()?;

    let out = cli.common.out.join("optimize");
    create_dir(&out)?;
    let mut summary = String::from("run,iterations,initial_loss,final_loss,converged,diverged\n");
    let mut runs = Vec::new();
    let mut loss_chart = Chart::new("corner loss", "iteration", "loss [m]").log_y();
    for (k, (trace, diverged)) in traces.iter().enumerate() {
        let mut csv = Vec::new();
        trace.write_csv(&mut csv)?;
        write(&out.join(format!("trace_run{k}.csv")), csv)?;
        let s = RunSummary {
            run: k,
            iterations: trace.iterations(),
            initial_loss: trace.records.first().map_or(f64::NAN, |r| r.loss),
            final_loss: trace.final_loss(),
            converged: trace.converged,
            diverged: *diverged,
        };
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.run, s.iterations, s.initial_loss, s.final_loss, s.converged, s.diverged
        ));
        runs.push(s);
        loss_chart = loss_chart.series(Series::new(
            format!("run {k}"),
            trace.records.iter().map(|r| (r.iteration as f64, r.loss)).collect(),
        ));
    }
    write(&out.join("summary.csv"), summary)?;
    write(&out.join("loss.svg"), loss_chart.render())?;

    let (first, _) = &traces[0];
    let pick = |f: fn(&roi10d::loss::GradMagnitudes) -> f64| -> Vec<(f64, f64)> {
        first.records.iter().map(|r| (r.iteration as f64, f(&r.magnitudes))).collect()
    };
    let grad_chart = Chart::new("gradient magnitudes, run 0", "iteration", "|gradient|")
        .log_y()
        .series(Series::new("rotation", pick(|m| m.rotation)))
        .series(Series::new("centroid", pick(|m| m.centroid)))
        .series(Series::new("depth", pick(|m| m.depth)))
        .series(Series::new("extents", pick(|m| m.extents)));
    write(&out.join("gradients.svg"), grad_chart.render())?;

    write_json(
        &out.join("report.json"),
        &Report {
            config: cli,
            intrinsics: &cam,
            stats: &stats,
            runs: &runs,
        },
    )?;
    let converged = runs.iter().filter(|r| r.final_loss < 1e-3).count();
    let diverged = runs.iter().filter(|r| r.diverged).count();
    println!("{converged}/{} runs below 1e-3 m, {diverged} diverged", runs.len());
    Ok(())
}
