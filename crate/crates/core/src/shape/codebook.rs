//! Latent ↔ TSDF lookup table standing in for the shape decoder.
//!
//! On disk a codebook is a directory with `index.json` (an array of
//! `{id, latent, class_tag}`) and one `<id>.tsdf` grid per entry.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LatentShape, TsdfGrid};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassTag {
    SmallCar,
    Car,
    LargeCar,
    #[serde(rename = "SUV")]
    Suv,
}

impl ClassTag {
    pub const ALL: [ClassTag; 4] = [ClassTag::SmallCar, ClassTag::Car, ClassTag::LargeCar, ClassTag::Suv];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassTag::SmallCar => "SmallCar",
            ClassTag::Car => "Car",
            ClassTag::LargeCar => "LargeCar",
            ClassTag::Suv => "SUV",
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown class tag '{s}'")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    latent: LatentShape,
    class_tag: ClassTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    pub id: String,
    pub latent: LatentShape,
    pub class_tag: ClassTag,
    pub grid: TsdfGrid,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Codebook {
    pub entries: Vec<CodebookEntry>,
}

impl Codebook {
    pub fn new(entries: Vec<CodebookEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn by_class(&self, tag: ClassTag) -> impl Iterator<Item = &CodebookEntry> {
        self.entries.iter().filter(move |e| e.class_tag == tag)
    }

    pub fn get(&self, id: &str) -> Option<&CodebookEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Index of the entry with the smallest geodesic angle to `s`; ties keep the lower index.
    pub fn nearest(&self, s: &LatentShape) -> Result<usize> {
        if self.entries.is_empty() {
            return domain("codebook is empty");
        }
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, e) in self.entries.iter().enumerate() {
            if e.latent.dim() != s.dim() {
                return domain(format!("latent dimension {} does not match codebook entry {}", s.dim(), e.id));
            }
            let d = e.latent.dot(s);
            if d > best_dot {
                best = i;
                best_dot = d;
            }
        }
        Ok(best)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index: Vec<IndexEntry> = serde_json::from_reader(BufReader::new(File::open(dir.join("index.json"))?))?;
        let mut entries = Vec::with_capacity(index.len());
        for e in index {
            let grid = TsdfGrid::read_from(BufReader::new(File::open(dir.join(format!("{}.tsdf", e.id)))?))?;
            entries.push(CodebookEntry {
                id: e.id,
                latent: e.latent,
                class_tag: e.class_tag,
                grid,
            });
        }
        Ok(Self { entries })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let index: Vec<IndexEntry> = self
            .entries
            .iter()
            .map(|e| IndexEntry {
                id: e.id.clone(),
                latent: e.latent.clone(),
                class_tag: e.class_tag,
            })
            .collect();
        serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("index.json"))?), &index)?;
        for e in &self.entries {
            e.grid.write_to(BufWriter::new(File::create(dir.join(format!("{}.tsdf", e.id)))?))?;
        }
        Ok(())
    }
}

/// Decodes a latent by nearest-entry lookup.
pub fn latent_to_tsdf<'a>(s: &LatentShape, codebook: &'a Codebook) -> Result<&'a TsdfGrid> {
    let i = codebook.nearest(s)?;
    Ok(&codebook.entries[i].grid)
}
