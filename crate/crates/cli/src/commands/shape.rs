use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use nalgebra::Vector3;
use rand::Rng;
use serde::Serialize;

use roi10d::shape::{
    latent_median, marching_cubes, normalize_latent, slerp, ClassTag, Codebook, CodebookEntry, LATENT_DIM,
};
use roi10d::{LatentShape, TsdfGrid};

use crate::args::{Cli, MakeCodebookArgs, ShapeArgs};
use crate::data::{create_dir, task_rng, write, write_json};
use crate::failure::{ConfigError, DataError};

#[derive(Serialize)]
struct Median {
    tag: ClassTag,
    entries: usize,
    latent: LatentShape,
    nearest: String,
    file: String,
}

#[derive(Serialize)]
struct StripStep {
    t: f64,
    nearest: String,
    file: String,
}

#[derive(Serialize)]
struct Strip {
    from: String,
    to: String,
    steps: Vec<StripStep>,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a Cli,
    medians: Vec<Median>,
    strips: Vec<Strip>,
}

fn write_mesh(grid: &TsdfGrid, path: &Path) -> Result<()> {
    let mesh = marching_cubes(grid, 0.0).with_context(|| format!("extracting surface for {}", path.display()))?;
    let mut buf = Vec::new();
    mesh.write_obj(&mut buf)?;
    write(path, buf)
}

fn parse_pair(s: &str) -> Result<(String, String), ConfigError> {
    match s.split_once(':') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(ConfigError(format!("interpolation pair '{s}' is not of the form idA:idB"))),
    }
}

fn entry<'a>(codebook: &'a Codebook, id: &str) -> Result<&'a CodebookEntry> {
    codebook
        .get(id)
        .ok_or_else(|| ConfigError(format!("codebook has no entry '{id}'")).into())
}

pub fn run(cli: &Cli, args: &ShapeArgs) -> Result<()> {
    let codebook = Codebook::load(&args.codebook).with_context(|| format!("loading codebook {}", args.codebook.display()))?;
    if codebook.is_empty() {
        return Err(DataError("codebook is empty".into()).into());
    }
    let tags: Vec<ClassTag> = if args.tags.is_empty() {
        ClassTag::ALL
            .into_iter()
            .filter(|t| codebook.by_class(*t).next().is_some())
            .collect()
    } else {
        args.tags
            .iter()
            .map(|s| ClassTag::from_str(s).map_err(|_| ConfigError(format!("unknown class tag '{s}'"))))
            .collect::<Result<_, _>>()?
    };
    let pairs = args.pairs.iter().map(|p| parse_pair(p)).collect::<Result<Vec<_>, _>>()?;

    let out = cli.common.out.join("shape");
    create_dir(&out)?;
    let mut medians = Vec::new();
    for tag in tags {
        let latents: Vec<LatentShape> = codebook.by_class(tag).map(|e| e.latent.clone()).collect();
        if latents.is_empty() {
            return Err(DataError(format!("codebook has no entries tagged {tag}")).into());
        }
        let median = latent_median(&latents, 1e-12, 100_000)?;
        let nearest = &codebook.entries[codebook.nearest(&median)?];
        let file = format!("median_{tag}.obj");
        write_mesh(&nearest.grid, &out.join(&file))?;
        println!("{tag}: median of {} entries is nearest to {}", latents.len(), nearest.id);
        medians.push(Median {
            tag,
            entries: latents.len(),
            latent: median,
            nearest: nearest.id.clone(),
            file,
        });
    }

    let mut strips = Vec::new();
    for (a, b) in pairs {
        let (ea, eb) = (entry(&codebook, &a)?, entry(&codebook, &b)?);
        let mut steps = Vec::new();
        for k in 0..args.steps {
            let t = k as f64 / (args.steps - 1) as f64;
            let s = slerp(&ea.latent, &eb.latent, t)?;
            let nearest = &codebook.entries[codebook.nearest(&s)?];
            let file = format!("strip_{a}_{b}_{k}.obj");
            write_mesh(&nearest.grid, &out.join(&file))?;
            steps.push(StripStep {
                t,
                nearest: nearest.id.clone(),
                file,
            });
        }
        strips.push(Strip { from: a, to: b, steps });
    }
    write_json(
        &out.join("report.json"),
        &Report {
            config: cli,
            medians,
            strips,
        },
    )
}

fn box_sdf(p: &Vector3<f64>, center: &Vector3<f64>, half: &Vector3<f64>, round: f64) -> f64 {
    let q = (p - center).abs() - half + Vector3::repeat(round);
    q.sup(&Vector3::zeros()).norm() + q.x.max(q.y).max(q.z).min(0.0) - round
}

/// Body and cabin proportions `(w, h, l)` per tag, cabin height as a fraction of the body.
fn proportions(tag: ClassTag) -> ([f64; 3], f64) {
    match tag {
        ClassTag::SmallCar => ([0.42, 0.22, 0.75], 0.9),
        ClassTag::Car => ([0.45, 0.20, 0.95], 0.8),
        ClassTag::LargeCar => ([0.48, 0.24, 0.98], 0.7),
        ClassTag::Suv => ([0.48, 0.30, 0.92], 1.0),
    }
}

/// Two rounded boxes (body and cabin) in the unit cube, with jittered proportions.
fn car_grid<R: Rng>(tag: ClassTag, n: usize, rng: &mut R) -> Result<TsdfGrid> {
    let ([w, h, l], cabin) = proportions(tag);
    let j = |rng: &mut R| 1.0 + rng.gen_range(-0.08..0.08);
    let body = Vector3::new(w * j(rng), h * j(rng), l * j(rng));
    let cab = Vector3::new(body.x * 0.85, body.y * cabin * j(rng), body.z * 0.5 * j(rng));
    let body_c = Vector3::new(0.0, 0.15 - body.y, 0.0);
    let cab_c = Vector3::new(0.0, body_c.y + body.y + cab.y - 0.02, -0.1 * body.z * j(rng));
    let voxel = 2.0 / (n as f64 - 1.0);
    let origin = Vector3::repeat(-1.0);
    Ok(TsdfGrid::from_fn([n; 3], voxel, origin, 3.0 * voxel, |p| {
        box_sdf(&p, &body_c, &body, 0.05).min(box_sdf(&p, &cab_c, &cab, 0.06))
    })?)
}

pub fn make_codebook(cli: &Cli, args: &MakeCodebookArgs) -> Result<()> {
    let mut entries = Vec::new();
    for (t, tag) in ClassTag::ALL.into_iter().enumerate() {
        for k in 0..args.per_tag {
            let id = format!("{}_{k}", tag.as_str().to_lowercase());
            let mut rng = task_rng(cli.common.seed, &id);
            let mut v: Vec<f64> = (0..LATENT_DIM).map(|_| rng.gen_range(-0.3..0.3)).collect();
            v[t % LATENT_DIM] += 1.0;
            entries.push(CodebookEntry {
                latent: normalize_latent(&v)?,
                class_tag: tag,
                grid: car_grid(tag, args.resolution, &mut rng)?,
                id,
            });
        }
    }
    let codebook = Codebook::new(entries);
    let out = cli.common.out.join("codebook");
    codebook.save(&out).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} entries to {}", codebook.len(), out.display());
    Ok(())
}
