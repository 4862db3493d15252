use anyhow::Result;
use serde::Serialize;

use roi10d::metrics::{evaluate, EvalReport};

use crate::args::{Cli, EvaluateArgs};
use crate::data::{create_dir, load_frames, write, write_json, LoadedFrames};
use crate::svg::{Chart, Series};

#[derive(Serialize)]
struct Report<'a> {
    config: &'a Cli,
    frames: usize,
    #[serde(flatten)]
    loading: &'a LoadedFrames,
    reports: &'a [EvalReport],
}

/// IoU thresholds in the report: the configured one and 0.5.
fn thresholds(iou: f64) -> Vec<f64> {
    let mut t = vec![iou];
    if (iou - 0.5).abs() > 1e-12 {
        t.push(0.5);
    }
    t
}

pub fn run(cli: &Cli, args: &EvaluateArgs) -> Result<()> {
    let loaded = load_frames(cli, &args.pred_dir)?;
    let out = cli.common.out.join("evaluate");
    create_dir(&out)?;
    let class = &cli.common.class_name;
    let mut reports = Vec::new();
    for iou in thresholds(cli.common.iou) {
        let report = evaluate(&loaded.frames, class, iou, cli.common.ap_points.into())?;
        let tag = format!("iou{iou:.2}");
        write(&out.join(format!("ap_{tag}.csv")), report.to_csv())?;
        write(&out.join(format!("pr_{tag}.csv")), report.pr_csv())?;
        for e in &report.entries {
            let Some(curve) = &e.curve else { continue };
            let chart = Chart::new(
                format!("{class} {} {} IoU {iou:.2}: AP {:.2}", e.metric.as_str(), e.difficulty.as_str(), curve.ap * 100.0),
                "recall",
                "precision",
            )
            .x_range(0.0, 1.0)
            .y_range(0.0, 1.0)
            .series(Series::new("raw", curve.samples.clone()))
            .series(Series::new("interpolated", curve.interpolated.clone()));
            let name = format!("pr_{}_{}_{tag}.svg", e.metric.as_str(), e.difficulty.as_str());
            write(&out.join(name), chart.render())?;
        }
        println!("{class} AP at IoU {iou:.2} ({} frames)", loaded.frames.len());
        print!("{}", report.to_csv());
        reports.push(report);
    }
    write_json(
        &out.join("report.json"),
        &Report {
            config: cli,
            frames: loaded.frames.len(),
            loading: &loaded,
            reports: &reports,
        },
    )?;
    if !loaded.missing_predictions.is_empty() {
        println!("{} frames had no prediction file", loaded.missing_predictions.len());
    }
    Ok(())
}
