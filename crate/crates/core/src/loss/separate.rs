//! Per-component regression losses, the baseline the corner loss replaces.

use serde::{Deserialize, Serialize};

use crate::geometry::{LiftParams, Rect2d};

/// How the four separate terms are combined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightingScheme {
    /// Unweighted sum.
    Uniform,
    /// Homoscedastic multi-task weighting `Σ exp(−sᵢ)·Lᵢ + sᵢ` with per-term log variances.
    Kendall { log_vars: [f64; 4] },
}

impl WeightingScheme {
    pub fn kendall() -> Self {
        WeightingScheme::Kendall { log_vars: [0.0; 4] }
    }
}

/// Term order: rotation, centroid, depth, extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparateTermLoss {
    pub total: f64,
    pub terms: [f64; 4],
}

/// Sign-invariant quaternion distance `min(‖q − q*‖, ‖q + q*‖)`.
pub fn quaternion_distance(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    minus.min(plus)
}

/// Separate regression terms between predicted and target parameters.
///
/// The centroid term is `|Δu| + |Δv|` measured in units of the RoI width and height.
pub fn separate_term_loss(
    params: &LiftParams,
    target: &LiftParams,
    roi: &Rect2d,
    scheme: &WeightingScheme,
) -> SeparateTermLoss {
    let terms = [
        quaternion_distance(&params.q_allo.to_array(), &target.q_allo.to_array()),
        (params.u - target.u).abs() / roi.width() + (params.v - target.v).abs() / roi.height(),
        (params.z - target.z).abs(),
        params
            .deviation
            .iter()
            .zip(&target.deviation)
            .map(|(a, b)| (a - b).abs())
            .sum(),
    ];
    let total = match scheme {
        WeightingScheme::Uniform => terms.iter().sum(),
        WeightingScheme::Kendall { log_vars } => terms
            .iter()
            .zip(log_vars)
            .map(|(l, s)| (-s).exp() * l + s)
            .sum(),
    };
    SeparateTermLoss { total, terms }
}

/// `∂/∂sᵢ` of the Kendall objective: `1 − exp(−sᵢ)·Lᵢ`.
pub fn kendall_log_var_grad(terms: &[f64; 4], log_vars: &[f64; 4]) -> [f64; 4] {
    [0, 1, 2, 3].map(|i| 1.0 - (-log_vars[i]).exp() * terms[i])
}

/// Subgradient of the separate-term loss with respect to
/// `(q(4), u, v, z, dw, dh, dl)`; the quaternion block is tangent-projected.
pub fn separate_term_grad(
    params: &LiftParams,
    target: &LiftParams,
    roi: &Rect2d,
    scheme: &WeightingScheme,
) -> [f64; 10] {
    let weights = match scheme {
        WeightingScheme::Uniform => [1.0; 4],
        WeightingScheme::Kendall { log_vars } => log_vars.map(|s| (-s).exp()),
    };
    let sign = |x: f64| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
    let q = params.q_allo.to_array();
    let mut qt = target.q_allo.to_array();
    let minus: f64 = q.iter().zip(&qt).map(|(a, b)| (a - b) * (a - b)).sum();
    let plus: f64 = q.iter().zip(&qt).map(|(a, b)| (a + b) * (a + b)).sum();
    if plus < minus {
        qt = qt.map(|x| -x);
    }
    let diff: [f64; 4] = [0, 1, 2, 3].map(|i| q[i] - qt[i]);
    let dn = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut gq = if dn > 0.0 { diff.map(|x| x / dn) } else { [0.0; 4] };
    let along: f64 = gq.iter().zip(&q).map(|(a, b)| a * b).sum();
    for i in 0..4 {
        gq[i] = (gq[i] - along * q[i]) * weights[0];
    }
    let gu = sign(params.u - target.u) / roi.width() * weights[1];
    let gv = sign(params.v - target.v) / roi.height() * weights[1];
    let gz = sign(params.z - target.z) * weights[2];
    let gd = [0, 1, 2].map(|k| sign(params.deviation[k] - target.deviation[k]) * weights[3]);
    [gq[0], gq[1], gq[2], gq[3], gu, gv, gz, gd[0], gd[1], gd[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Quaternion;
    use crate::shape::LatentShape;

    fn p() -> LiftParams {
        LiftParams {
            q_allo: Quaternion::from_yaw(0.4),
            u: 300.0,
            v: 180.0,
            z: 15.0,
            deviation: [0.1, -0.3, 0.5],
            shape: LatentShape::canonical(6),
        }
    }

    fn roi() -> Rect2d {
        Rect2d::new(250.0, 150.0, 350.0, 210.0)
    }

    #[test]
    fn identical_params_uniform_is_zero() {
        let l = separate_term_loss(&p(), &p(), &roi(), &WeightingScheme::Uniform);
        assert_eq!(l.total, 0.0);
    }

    #[test]
    fn kendall_at_zero_equals_uniform() {
        let mut q = p();
        q.z = 17.0;
        q.u = 320.0;
        q.q_allo = Quaternion::from_yaw(0.1);
        let a = separate_term_loss(&q, &p(), &roi(), &WeightingScheme::Uniform);
        let b = separate_term_loss(&q, &p(), &roi(), &WeightingScheme::kendall());
        assert_eq!(a.total, b.total);
        assert_eq!(a.terms[1], 0.2);
        assert_eq!(a.terms[2], 2.0);
    }

    #[test]
    fn kendall_stationary_at_unit_loss() {
        assert_eq!(kendall_log_var_grad(&[1.0; 4], &[0.0; 4]), [0.0; 4]);
    }

    #[test]
    fn quaternion_distance_is_sign_invariant() {
        let a = Quaternion::from_yaw(0.7).to_array();
        let b = Quaternion::from_yaw(0.2).to_array();
        let nb = b.map(|x| -x);
        assert_eq!(quaternion_distance(&a, &b), quaternion_distance(&a, &nb));
        assert_eq!(quaternion_distance(&a, &a.map(|x| -x)), 0.0);
    }
}
