//! Textured meshes available for insertion.
//!
//! On disk a bank is a directory with `<id>.ply` and `<id>.json` per mesh.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Quaternion;
use crate::shape::{ClassTag, TriMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshMeta {
    pub id: String,
    /// `(w, h, l)` in meters.
    pub extents: [f64; 3],
    pub class_tag: ClassTag,
    /// Allocentric rotation the mesh was observed under; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_allocentric: Option<Quaternion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshBankEntry {
    pub meta: MeshMeta,
    /// Object-frame mesh with per-vertex colors.
    pub mesh: TriMesh,
}

impl MeshBankEntry {
    /// Mesh recentered on its bounding-box center, and its metric `(w, h, l)`.
    pub fn centered(&self) -> Result<(TriMesh, [f64; 3])> {
        let (lo, hi) = self
            .mesh
            .bounds()
            .ok_or_else(|| Error::Format(format!("mesh '{}' has no vertices", self.meta.id)))?;
        let c: Vector3<f64> = (lo + hi) * 0.5;
        let mut m = self.mesh.clone();
        m.vertices.iter_mut().for_each(|v| *v -= c);
        let e = hi - lo;
        Ok((m, [e.x, e.y, e.z]))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshBank {
    pub entries: Vec<MeshBankEntry>,
}

impl MeshBank {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads every `<id>.json` in `dir`, sorted by file name.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut metas: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        metas.sort();
        let mut entries = Vec::with_capacity(metas.len());
        for p in metas {
            let meta: MeshMeta = serde_json::from_reader(BufReader::new(File::open(&p)?))?;
            let mesh = TriMesh::read_ply(BufReader::new(File::open(dir.join(format!("{}.ply", meta.id)))?))?;
            if mesh.colors.is_none() {
                return Err(Error::Format(format!("mesh '{}' has no vertex colors", meta.id)));
            }
            entries.push(MeshBankEntry { meta, mesh });
        }
        Ok(Self { entries })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for e in &self.entries {
            serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join(format!("{}.json", e.meta.id)))?), &e.meta)?;
            e.mesh.write_ply(BufWriter::new(File::create(dir.join(format!("{}.ply", e.meta.id)))?))?;
        }
        Ok(())
    }
}
