use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Default latent dimension of the shape space.
pub const LATENT_DIM: usize = 6;

/// A shape code on the unit hypersphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LatentShape(Vec<f64>);

impl LatentShape {
    /// First basis vector of the given dimension.
    pub fn canonical(dim: usize) -> Self {
        let mut v = vec![0.0; dim.max(1)];
        v[0] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &LatentShape) -> f64 {
        dot(&self.0, &other.0)
    }

    /// Great-circle angle in `[0, π]`, from the chord lengths so that small
    /// angles keep full precision.
    pub fn angle_to(&self, other: &LatentShape) -> f64 {
        let (diff, sum) = chords(&self.0, &other.0);
        2.0 * diff.atan2(sum)
    }
}

impl TryFrom<Vec<f64>> for LatentShape {
    type Error = crate::Error;

    /// Vectors already on the sphere are kept bit-exact so files round-trip.
    fn try_from(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !v.is_empty() && (n - 1.0).abs() <= 1e-12 {
            return Ok(LatentShape(v));
        }
        normalize_latent(&v)
    }
}

impl From<LatentShape> for Vec<f64> {
    fn from(s: LatentShape) -> Vec<f64> {
        s.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(‖a − b‖, ‖a + b‖)`
fn chords(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (mut d, mut s) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        d += (x - y) * (x - y);
        s += (x + y) * (x + y);
    }
    (d.sqrt(), s.sqrt())
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Projects a raw encoder output onto the unit hypersphere.
pub fn normalize_latent(v: &[f64]) -> Result<LatentShape> {
    let n = norm(v);
    if v.is_empty() || !(n > 1e-12) || !n.is_finite() {
        return domain(format!("cannot normalize latent vector with norm {n}"));
    }
    Ok(LatentShape(v.iter().map(|x| x / n).collect()))
}

/// Spherical linear interpolation along the shorter great-circle arc.
pub fn slerp(a: &LatentShape, b: &LatentShape, t: f64) -> Result<LatentShape> {
    if a.dim() != b.dim() {
        return domain(format!("latent dimension mismatch: {} vs {}", a.dim(), b.dim()));
    }
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("interpolation parameter {t} outside [0, 1]"));
    }
    let d = a.dot(b).clamp(-1.0, 1.0);
    if d <= -1.0 + 1e-12 {
        return domain("antipodal latents have no unique geodesic");
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    let omega = a.angle_to(b);
    if omega < 1e-9 {
        return Ok(a.clone());
    }
    // orthonormal tangent at a pointing towards b
    let tangent: Vec<f64> = a.0.iter().zip(&b.0).map(|(x, y)| y - d * x).collect();
    let tn = norm(&tangent);
    let (s, c) = (t * omega).sin_cos();
    let v: Vec<f64> = a.0.iter().zip(&tangent).map(|(x, e)| c * x + s * e / tn).collect();
    normalize_latent(&v)
}

/// Sign-invariant angular distance `arccos(2⟨s, s*⟩² − 1)` in `[0, π]`.
///
/// Evaluated as twice the angle to the nearer of `±s*`, which is exactly zero
/// when `s = ±s*` and does not lose precision near either end of the range.
pub fn shape_loss(s: &LatentShape, s_star: &LatentShape) -> f64 {
    let (diff, sum) = chords(&s.0, &s_star.0);
    (4.0 * diff.min(sum).atan2(diff.max(sum))).min(PI)
}
