use anyhow::Result;
use serde::Serialize;

use roi10d::metrics::{binned_recall, BinAxis, BinSpec, BinnedRecall};

use crate::args::{Cli, RecallArgs};
use crate::data::{create_dir, load_frames, write, write_json, LoadedFrames};
use crate::svg::{Chart, Series};

#[derive(Serialize)]
struct Report<'a> {
    config: &'a Cli,
    #[serde(flatten)]
    loading: &'a LoadedFrames,
    depth: &'a BinnedRecall,
    azimuth: &'a BinnedRecall,
}

fn chart(r: &BinnedRecall, title: &str, x_label: &str, scale: f64) -> Chart {
    let points = (0..r.counts.len())
        .filter_map(|i| Some(((r.edges[i] + r.edges[i + 1]) / 2.0 * scale, r.recall[i]?)))
        .collect();
    let bars = (0..r.counts.len())
        .map(|i| (r.edges[i] * scale, r.edges[i + 1] * scale, r.counts[i] as f64))
        .collect();
    Chart::new(title, x_label, "recall")
        .x_range(r.edges[0] * scale, r.edges[r.edges.len() - 1] * scale)
        .y_range(0.0, 1.0)
        .bars("ground truth count", bars)
        .series(Series::new("recall", points))
}

pub fn run(cli: &Cli, args: &RecallArgs) -> Result<()> {
    let loaded = load_frames(cli, &args.pred_dir)?;
    let class = &cli.common.class_name;
    let difficulty = args.difficulty.into();
    let depth_spec = BinSpec::depth(cli.common.depth_bin_m, args.max_depth)?;
    let azimuth_spec = BinSpec::azimuth(cli.common.azimuth_bin_deg.to_radians())?;
    let depth = binned_recall(&loaded.frames, class, difficulty, &depth_spec, args.recall_iou)?;
    let azimuth = binned_recall(&loaded.frames, class, difficulty, &azimuth_spec, args.recall_iou)?;
    debug_assert_eq!(azimuth.axis, BinAxis::Azimuth);

    let out = cli.common.out.join("recall");
    create_dir(&out)?;
    write(&out.join("recall_depth.csv"), depth.to_csv())?;
    write(&out.join("recall_azimuth.csv"), azimuth.to_csv())?;
    write(
        &out.join("recall_depth.svg"),
        chart(&depth, &format!("{class} recall by depth"), "depth z [m]", 1.0).render(),
    )?;
    write(
        &out.join("recall_azimuth.svg"),
        chart(&azimuth, &format!("{class} recall by rotation_y"), "rotation_y [deg]", 180.0 / std::f64::consts::PI)
            .render(),
    )?;
    write_json(
        &out.join("report.json"),
        &Report {
            config: cli,
            loading: &loaded,
            depth: &depth,
            azimuth: &azimuth,
        },
    )?;
    let hits = |r: &BinnedRecall| r.hits.iter().sum::<usize>();
    println!(
        "{class}: {} of {} ground-truth boxes recalled at BEV IoU >= {}",
        hits(&depth),
        depth.total(),
        args.recall_iou
    );
    Ok(())
}
