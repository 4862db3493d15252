use super::latent::norm;
use super::TsdfGrid;
use crate::error::{domain, Result};

/// Terms of the TSDF autoencoder objective. All three are voxel means
/// except the latent-norm penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeLoss {
    pub total: f64,
    /// Mean absolute reconstruction error.
    pub reconstruction: f64,
    /// `| ‖latent‖ − 1 |`
    pub latent_norm: f64,
    /// Mean forward-difference total variation of the reconstruction.
    pub total_variation: f64,
}

/// Evaluates the autoencoder objective on a decoded grid, its pre-normalization
/// latent code and the target grid.
///
/// Total variation at a voxel sums the absolute forward differences along
/// each axis that has a forward neighbour; the sum over voxels is divided by
/// the voxel count.
pub fn tsdf_ae_loss(reconstruction: &TsdfGrid, latent_prenorm: &[f64], target: &TsdfGrid) -> Result<AeLoss> {
    if reconstruction.dims() != target.dims() {
        return domain(format!(
            "grid dimensions differ: {:?} vs {:?}",
            reconstruction.dims(),
            target.dims()
        ));
    }
    let [nx, ny, nz] = reconstruction.dims();
    let n = reconstruction.len() as f64;
    let rec = reconstruction.values();

    let l1: f64 = rec
        .iter()
        .zip(target.values())
        .map(|(a, b)| (*a as f64 - *b as f64).abs())
        .sum();

    let (sx, sy) = (1, nx);
    let sz = nx * ny;
    let mut tv = 0.0;
    for k in 0..nz {
        for j in 0..ny {
            let row = nx * (j + ny * k);
            for i in 0..nx {
                let idx = row + i;
                let v = rec[idx] as f64;
                if i + 1 < nx {
                    tv += (rec[idx + sx] as f64 - v).abs();
                }
                if j + 1 < ny {
                    tv += (rec[idx + sy] as f64 - v).abs();
                }
                if k + 1 < nz {
                    tv += (rec[idx + sz] as f64 - v).abs();
                }
            }
        }
    }

    let reconstruction_term = l1 / n;
    let latent_norm = (norm(latent_prenorm) - 1.0).abs();
    let total_variation = tv / n;
    Ok(AeLoss {
        total: reconstruction_term + latent_norm + total_variation,
        reconstruction: reconstruction_term,
        latent_norm,
        total_variation,
    })
}
