//! Controlled single-instance optimization of the lifting parameters.
//!
//! Parameters are updated in optimization coordinates: the quaternion moves
//! in its tangent space and is renormalized, the centroid moves in
//! RoI-normalized units, depth moves multiplicatively (`z ← z·exp(Δ/z)`,
//! so it stays positive), and extent deviations move additively.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::corner::{corner_loss_grad, GradMagnitudes};
use super::separate::{separate_term_grad, separate_term_loss, WeightingScheme};
use crate::error::{domain, Error, Result};
use crate::geometry::{recover_lift_params, Box3D, CameraIntrinsics, ExtentStats, LiftParams, Quaternion, Rect2d};

/// Step rule used once the corner loss takes over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CornerStepRule {
    /// Fixed-step heavy-ball descent.
    Momentum,
    /// Polyak step `L/‖g‖²` (the optimum value is zero) shortened by
    /// Armijo backtracking, so every accepted step decreases the loss.
    PolyakBacktracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub max_iter: usize,
    /// Steps spent on the separate-term loss before switching to the corner loss.
    pub warmup_steps: usize,
    /// Step for centroid, depth and extent coordinates in momentum mode.
    pub step: f64,
    /// Step for the quaternion tangent update in momentum mode.
    pub quat_step: f64,
    pub momentum: f64,
    pub corner_rule: CornerStepRule,
    pub weighting: WeightingScheme,
    /// Stop as soon as the corner loss is at or below this value (meters).
    pub stop_loss: f64,
    /// Abort when the corner loss exceeds this value (meters).
    pub divergence_loss: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            warmup_steps: 500,
            step: 1e-2,
            quat_step: 1e-2,
            momentum: 0.9,
            corner_rule: CornerStepRule::PolyakBacktracking,
            weighting: WeightingScheme::Uniform,
            stop_loss: 1e-6,
            divergence_loss: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimRecord {
    pub iteration: usize,
    pub warmup: bool,
    /// Corner loss in meters.
    pub loss: f64,
    /// Separate-term loss, tracked during warm-up.
    pub separate_loss: Option<f64>,
    pub magnitudes: GradMagnitudes,
    /// `(qw, qx, qy, qz, u, v, z, dw, dh, dl)`
    pub params: [f64; 10],
}

/// Row 0 is the initial state; row `k` is the state after `k` updates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimTrace {
    pub records: Vec<OptimRecord>,
    pub converged: bool,
}

impl OptimTrace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.loss)
    }

    pub const CSV_HEADER: &'static str =
        "iteration,loss,grad_rotation,grad_centroid,grad_depth,grad_extents,qw,qx,qy,qz,u,v,z,dw,dh,dl";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let m = r.magnitudes;
            write!(
                w,
                "{},{},{},{},{},{}",
                r.iteration, r.loss, m.rotation, m.centroid, m.depth, m.extents
            )?;
            for p in r.params {
                write!(w, ",{p}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn flatten(p: &LiftParams) -> [f64; 10] {
    let q = p.q_allo.to_array();
    [q[0], q[1], q[2], q[3], p.u, p.v, p.z, p.deviation[0], p.deviation[1], p.deviation[2]]
}

/// Applies `params ← params − α·direction` in optimization coordinates.
fn apply(p: &LiftParams, dir: &[f64; 10], alpha: f64, quat_alpha: f64, roi: &Rect2d) -> Result<LiftParams> {
    let q = Quaternion::new(
        p.q_allo.w - quat_alpha * dir[0],
        p.q_allo.x - quat_alpha * dir[1],
        p.q_allo.y - quat_alpha * dir[2],
        p.q_allo.z - quat_alpha * dir[3],
    )
    .normalize()?;
    Ok(LiftParams {
        q_allo: q,
        u: p.u - alpha * dir[4] * roi.width(),
        v: p.v - alpha * dir[5] * roi.height(),
        z: p.z * (-alpha * dir[6] / p.z).exp(),
        deviation: [
            p.deviation[0] - alpha * dir[7],
            p.deviation[1] - alpha * dir[8],
            p.deviation[2] - alpha * dir[9],
        ],
        shape: p.shape.clone(),
    })
}

/// Gradient in pixel units → gradient in optimization coordinates.
fn to_opt_coords(g: [f64; 10], roi: &Rect2d) -> [f64; 10] {
    let mut o = g;
    o[4] *= roi.width();
    o[5] *= roi.height();
    o
}

/// Runs warm-up on the separate terms, then descends the corner loss.
///
/// `roi` normalizes the centroid coordinates; the ground-truth RoI of the
/// instance is the natural choice.
pub fn optimize_instance(
    init: &LiftParams,
    target: &Box3D,
    roi: &Rect2d,
    stats: &ExtentStats,
    cam: &CameraIntrinsics,
    config: &OptimConfig,
) -> Result<OptimTrace> {
    init.validate(stats)?;
    if !roi.is_valid() {
        return domain("RoI must have positive width and height");
    }
    let target_params = recover_lift_params(target, stats, cam, init.shape.clone())?;
    let mut params = init.clone();
    params.q_allo = params.q_allo.normalize()?;
    let mut velocity = [0.0; 10];
    let mut trace = OptimTrace::default();

    for iteration in 0..=config.max_iter {
        let warmup = iteration < config.warmup_steps;
        let corner = corner_loss_grad(&params, target, stats, cam)?;
        let separate = warmup.then(|| separate_term_loss(&params, &target_params, roi, &config.weighting).total);
        trace.records.push(OptimRecord {
            iteration,
            warmup,
            loss: corner.total,
            separate_loss: separate,
            magnitudes: corner.magnitudes,
            params: flatten(&params),
        });
        if !corner.total.is_finite() || corner.total > config.divergence_loss {
            return Err(Error::Divergence {
                iteration,
                loss: corner.total,
                trace: Box::new(trace),
            });
        }
        if corner.total <= config.stop_loss {
            trace.converged = true;
            break;
        }
        if iteration == config.max_iter {
            break;
        }

        if warmup || config.corner_rule == CornerStepRule::Momentum {
            let grad = if warmup {
                separate_term_grad(&params, &target_params, roi, &config.weighting)
            } else {
                corner.flat()
            };
            let grad = to_opt_coords(grad, roi);
            for (v, g) in velocity.iter_mut().zip(grad) {
                *v = config.momentum * *v + g;
            }
            let mut next = apply(&params, &velocity, config.step, config.quat_step, roi)?;
            clamp_extents(&mut next, stats);
            params = next;
        } else {
            match backtracking_step(&params, &corner.flat(), corner.total, target, stats, cam)? {
                Some(next) => params = next,
                None => break,
            }
        }
    }
    Ok(trace)
}

fn clamp_extents(p: &mut LiftParams, stats: &ExtentStats) {
    let (m, s) = (stats.mean(), stats.std());
    for k in 0..3 {
        let floor = (0.01 * m[k].abs() - m[k]) / s[k];
        if p.deviation[k] < floor {
            p.deviation[k] = floor;
        }
    }
}

/// Squared corner displacement per unit of each parameter, used as a
/// diagonal metric so that every coordinate moves corners at a similar rate.
fn corner_sensitivity(params: &LiftParams, stats: &ExtentStats, cam: &CameraIntrinsics) -> Result<[f64; 10]> {
    let e = stats.resolve(params.deviation)?;
    let std = stats.std();
    // a tangent step δ on the unit quaternion rotates by 2δ; corners sit at the half diagonal
    let half_diag = 0.5 * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
    let q = (2.0 * half_diag).powi(2);
    let su = (params.z / cam.fx).powi(2);
    let sv = (params.z / cam.fy).powi(2);
    let m = Vector3::new((params.u - cam.cx) / cam.fx, (params.v - cam.cy) / cam.fy, 1.0);
    let d = std.map(|s| (0.5 * s).powi(2));
    Ok([q, q, q, q, su, sv, m.norm_squared(), d[0], d[1], d[2]])
}

/// One preconditioned Polyak step `α = L/(gᵀPg)` with Armijo backtracking;
/// `None` when no decrease is found. `grad` is in parameter units.
fn backtracking_step(
    params: &LiftParams,
    grad: &[f64; 10],
    loss: f64,
    target: &Box3D,
    stats: &ExtentStats,
    cam: &CameraIntrinsics,
) -> Result<Option<LiftParams>> {
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;
    let sens = corner_sensitivity(params, stats, cam)?;
    let dir: [f64; 10] = std::array::from_fn(|k| grad[k] / sens[k]);
    let gpg: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
    if !(gpg > 0.0) {
        return Ok(None);
    }
    let mut alpha = loss / gpg;
    for _ in 0..MAX_HALVINGS {
        let q = Quaternion::new(
            params.q_allo.w - alpha * dir[0],
            params.q_allo.x - alpha * dir[1],
            params.q_allo.y - alpha * dir[2],
            params.q_allo.z - alpha * dir[3],
        );
        let candidate = LiftParams {
            q_allo: q.normalize()?,
            u: params.u - alpha * dir[4],
            v: params.v - alpha * dir[5],
            z: params.z - alpha * dir[6],
            deviation: std::array::from_fn(|k| params.deviation[k] - alpha * dir[7 + k]),
            shape: params.shape.clone(),
        };
        if candidate.validate(stats).is_ok() {
            let l = crate::loss::corner_loss(&crate::geometry::lift(&candidate, stats, cam)?, target);
            if l <= loss - ARMIJO * alpha * gpg {
                return Ok(Some(candidate));
            }
        }
        alpha *= 0.5;
    }
    Ok(None)
}
