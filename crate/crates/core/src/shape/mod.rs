//! Metric shape space: TSDF volumes, mesh conversion, level-set extraction,
//! latent hypersphere operations and geometric medians.

mod ae_loss;
mod codebook;
mod latent;
mod marching;
mod mesh;
mod mesh_to_tsdf;
mod tsdf;
mod weiszfeld;

pub use ae_loss::{tsdf_ae_loss, AeLoss};
pub use codebook::{latent_to_tsdf, ClassTag, Codebook, CodebookEntry};
pub use latent::{normalize_latent, shape_loss, slerp, LatentShape, LATENT_DIM};
pub use marching::marching_cubes;
pub use mesh::TriMesh;
pub use mesh_to_tsdf::{mesh_to_tsdf, mesh_to_tsdf_at, point_triangle_distance, DEFAULT_TRUNCATION_VOXELS};
pub use tsdf::{TsdfGrid, DEFAULT_DIMS};
pub use weiszfeld::{latent_median, median_objective, weiszfeld_median, WeiszfeldResult};
