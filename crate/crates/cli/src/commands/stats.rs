use anyhow::{Context, Result};

use roi10d::kitti::{compute_extent_stats, read_label_file, KittiLayout};

use crate::args::Cli;
use crate::data::{create_dir, split_ids};

pub fn run(cli: &Cli) -> Result<()> {
    let layout = KittiLayout::new(cli.data_root()?);
    let mut records = Vec::new();
    for id in split_ids(cli)? {
        let p = layout.label(&id);
        records.extend(read_label_file(&p).with_context(|| format!("reading {}", p.display()))?);
    }
    let stats = compute_extent_stats(&records, &cli.common.class_name)?;
    create_dir(&cli.common.out)?;
    let path = cli.common.out.join(format!("stats_{}.json", cli.common.class_name));
    stats.save(&path).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "{}: mean (w, h, l) = {:.3?}, std = {:.3?} -> {}",
        stats.class,
        stats.mean,
        stats.std,
        path.display()
    );
    Ok(())
}
