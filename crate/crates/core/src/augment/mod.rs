//! Projective texturing, a small rasterizer and synthetic car insertion.

mod bank;
mod frame;
mod placement;
mod raster;
mod scene;
mod texture;

pub use bank::{MeshBank, MeshBankEntry, MeshMeta};
pub use frame::{augment_frame, AddedObject, AugmentConfig, AugmentOutput};
pub use placement::{
    draw_sample, labelled_box, placement_pose, sample_placement, Placement, PlacementConfig, PlacementSample,
};
pub use raster::{depth_buffer, rasterize, rasterize_into, DEFAULT_MESH_COLOR};
pub use scene::{Pose, SceneImage};
pub use texture::{mirror_partners, texture_mesh, SENTINEL_COLOR};
