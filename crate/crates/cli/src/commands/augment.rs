use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use roi10d::augment::{augment_frame, AugmentConfig, MeshBank, SceneImage};
use roi10d::kitti::{read_calibration, read_label_file, serialize_records, KittiLayout};

use crate::args::{AugmentArgs, Cli};
use crate::data::{create_dir, split_ids, task_rng, write, write_json};

const DEPTH_DIR: &str = "depth_2";

#[derive(Debug, Serialize)]
struct PlacementEntry {
    mesh_id: String,
    attempts: usize,
    label: String,
}

#[derive(Debug, Serialize)]
struct FrameEntry {
    id: String,
    placements: Vec<PlacementEntry>,
    failed_placements: usize,
}

#[derive(Debug, Serialize)]
struct FrameError {
    id: String,
    error: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a Cli,
    seed: u64,
    complete: bool,
    total_placements: usize,
    frames: Vec<FrameEntry>,
    errors: Vec<FrameError>,
}

struct Dirs {
    image: PathBuf,
    label: PathBuf,
    calib: PathBuf,
    depth: PathBuf,
}

fn depth_path(root: &Path, id: &str) -> PathBuf {
    root.join(DEPTH_DIR).join(format!("{id}.bin"))
}

fn copy(from: &Path, to: &Path) -> Result<()> {
    std::fs::copy(from, to).with_context(|| format!("copying {} to {}", from.display(), to.display()))?;
    Ok(())
}

fn process_frame(
    cli: &Cli,
    layout: &KittiLayout,
    bank: &MeshBank,
    cfg: &AugmentConfig,
    dirs: &Dirs,
    id: &str,
) -> Result<FrameEntry> {
    let calib_path = layout.calib(id);
    let calib = read_calibration(&calib_path).with_context(|| format!("reading {}", calib_path.display()))?;
    let image_path = layout.image(id);
    let label_path = layout.label(id);
    let labels = read_label_file(&label_path).with_context(|| format!("reading {}", label_path.display()))?;
    let mut image = SceneImage::load_png(&image_path, calib.intrinsics())
        .with_context(|| format!("reading {}", image_path.display()))?;
    let depth_in = depth_path(&layout.root, id);
    let has_depth = depth_in.is_file();
    image = if has_depth {
        let d = SceneImage::read_depth(BufReader::new(File::open(&depth_in)?), image.width, image.height)
            .with_context(|| format!("reading {}", depth_in.display()))?;
        image.with_depth(d)?
    } else {
        let n = image.width * image.height;
        image.with_depth(vec![f32::INFINITY; n])?
    };

    let mut rng = task_rng(cli.common.seed, id);
    let out = augment_frame(&image, &labels, bank, cfg, &mut rng).with_context(|| format!("augmenting frame {id}"))?;

    let image_out = dirs.image.join(format!("{id}.png"));
    let label_out = dirs.label.join(format!("{id}.txt"));
    copy(&calib_path, &dirs.calib.join(format!("{id}.txt")))?;
    if out.added.is_empty() {
        // untouched frames are copied verbatim
        copy(&image_path, &image_out)?;
        copy(&label_path, &label_out)?;
        if has_depth {
            copy(&depth_in, &dirs.depth.join(format!("{id}.bin")))?;
        }
    } else {
        out.image.save_png(&image_out).with_context(|| format!("writing {}", image_out.display()))?;
        write(&label_out, serialize_records(&out.labels))?;
        let depth_out = dirs.depth.join(format!("{id}.bin"));
        let f = File::create(&depth_out).with_context(|| format!("writing {}", depth_out.display()))?;
        out.image.write_depth(BufWriter::new(f))?;
    }
    Ok(FrameEntry {
        id: id.to_string(),
        placements: out
            .added
            .iter()
            .map(|a| PlacementEntry {
                mesh_id: a.mesh_id.clone(),
                attempts: a.placement.attempts,
                label: a.record.to_line(),
            })
            .collect(),
        failed_placements: out.failed_placements,
    })
}

pub fn run(cli: &Cli, args: &AugmentArgs) -> Result<()> {
    let layout = KittiLayout::new(cli.data_root()?);
    let ids = split_ids(cli)?;
    let bank = MeshBank::load(&args.bank).with_context(|| format!("loading mesh bank {}", args.bank.display()))?;
    let cfg = AugmentConfig {
        k_max: args.k_max,
        class_name: cli.common.class_name.clone(),
        dont_care_noise: args.dont_care_noise,
        ..AugmentConfig::default()
    };
    let root = cli.common.out.join("augment");
    let dirs = Dirs {
        image: root.join("image_2"),
        label: root.join("label_2"),
        calib: root.join("calib"),
        depth: root.join(DEPTH_DIR),
    };
    for d in [&dirs.image, &dirs.label, &dirs.calib, &dirs.depth] {
        create_dir(d)?;
    }

    let results: Vec<Result<FrameEntry>> = ids
        .par_iter()
        .map(|id| process_frame(cli, &layout, &bank, &cfg, &dirs, id))
        .collect();
    let mut frames = Vec::new();
    let mut errors = Vec::new();
    let mut first_error = None;
    for (id, r) in ids.iter().zip(results) {
        match r {
            Ok(f) => frames.push(f),
            Err(e) => {
                errors.push(FrameError {
                    id: id.clone(),
                    error: format!("{e:#}"),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    let total_placements = frames.iter().map(|f| f.placements.len()).sum();
    write_json(
        &root.join("manifest.json"),
        &Manifest {
            config: cli,
            seed: cli.common.seed,
            complete: first_error.is_none(),
            total_placements,
            frames,
            errors,
        },
    )?;
    if let Some(e) = first_error {
        return Err(e.context("augmentation stopped; manifest lists the completed frames"));
    }
    println!("{} frames, {total_placements} synthetic cars placed", ids.len());
    Ok(())
}
