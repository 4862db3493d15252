//! Geometric median by Weiszfeld iteration with the Vardi–Zhang rule for
//! iterates that land on a data point.

use super::latent::{norm, normalize_latent, LatentShape};
use crate::error::{domain, Error, Result};

const COINCIDENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeiszfeldResult {
    pub median: Vec<f64>,
    pub iterations: usize,
    /// Sum of distances at the start point and after every step.
    pub objective: Vec<f64>,
}

/// `Σᵢ ‖pᵢ − y‖`
pub fn median_objective(points: &[Vec<f64>], y: &[f64]) -> f64 {
    points.iter().map(|p| distance(p, y)).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Starts at the centroid and stops once a step is shorter than `tol`.
pub fn weiszfeld_median(points: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<WeiszfeldResult> {
    let Some(first) = points.first() else {
        return domain("geometric median of an empty point set");
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return domain("points have inconsistent dimensions");
    }
    let n = points.len() as f64;
    let mut y: Vec<f64> = (0..dim).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let mut objective = vec![median_objective(points, &y)];

    for it in 1..=max_iter {
        let next = step(points, &y);
        let moved = distance(&next, &y);
        y = next;
        objective.push(median_objective(points, &y));
        if moved < tol {
            return Ok(WeiszfeldResult {
                median: y,
                iterations: it,
                objective,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last: y,
    })
}

fn step(points: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let dim = y.len();
    let mut weighted = vec![0.0; dim];
    let mut weight_sum = 0.0;
    // resultant of unit vectors towards the non-coincident points
    let mut pull = vec![0.0; dim];
    let mut coincident = 0usize;
    for p in points {
        let d = distance(p, y);
        if d < COINCIDENT {
            coincident += 1;
            continue;
        }
        for k in 0..dim {
            weighted[k] += p[k] / d;
            pull[k] += (p[k] - y[k]) / d;
        }
        weight_sum += 1.0 / d;
    }
    if weight_sum == 0.0 {
        return y.to_vec();
    }
    let t: Vec<f64> = weighted.iter().map(|w| w / weight_sum).collect();
    if coincident == 0 {
        return t;
    }
    let r = norm(&pull);
    let eta = coincident as f64;
    if r <= eta {
        // the coincident point is optimal
        return y.to_vec();
    }
    let a = (1.0 - eta / r).max(0.0);
    let b = (eta / r).min(1.0);
    t.iter().zip(y).map(|(ti, yi)| a * ti + b * yi).collect()
}

/// Median of latent codes computed in the ambient space, then projected back to the sphere.
pub fn latent_median(latents: &[LatentShape], tol: f64, max_iter: usize) -> Result<LatentShape> {
    let pts: Vec<Vec<f64>> = latents.iter().map(|s| s.as_slice().to_vec()).collect();
    let m = weiszfeld_median(&pts, tol, max_iter)?;
    normalize_latent(&m.median)
}
