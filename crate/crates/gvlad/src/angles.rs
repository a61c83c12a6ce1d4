//! Keypoint-angle membership learning and the angle-histogram baseline.
//!
//! Angles live on the circle, so clustering them directly with a Euclidean
//! k-means would tear the wrap-around at 0/2π. Each angle is instead mapped
//! to the point `(r·cos θ, r·sin θ)` and clustered in that 2-d space; bin
//! membership of a new angle is the nearest learned centroid.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::kmeans::{self, KMeansConfig};

/// Radial constant used when learning bins. Any positive radius induces the
/// same memberships, so the unit circle is used throughout.
pub const DEFAULT_RADIUS: f64 = 1.0;

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite angle {theta}")));
    }
    let mut r = theta.rem_euclid(TAU);
    if r >= TAU {
        r = 0.0;
    }
    Ok(r)
}

/// Maps an angle to its point on the circle of radius `r`.
pub fn angle_to_point(theta: f64, radius: f64) -> Result<[f64; 2]> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive and finite, got {radius}"
        )));
    }
    let t = reduce_angle(theta)?;
    Ok([radius * t.cos(), radius * t.sin()])
}

/// Learned angular-bin model: one 2-d centroid per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleModel {
    centroids: Vec<[f64; 2]>,
    radius: f64,
}

impl AngleModel {
    /// Builds a model from explicit centroids, validating the invariants:
    /// at least one centroid, all coordinates finite, no two identical.
    pub fn from_centroids(centroids: Vec<[f64; 2]>, radius: f64) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::EmptyInput("angle model needs at least one centroid".into()));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        for (i, c) in centroids.iter().enumerate() {
            if !c[0].is_finite() || !c[1].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "centroid {i} has non-finite coordinates"
                )));
            }
        }
        for i in 0..centroids.len() {
            for j in i + 1..centroids.len() {
                if centroids[i] == centroids[j] {
                    return Err(Error::DegenerateInput(format!(
                        "centroids {i} and {j} are identical"
                    )));
                }
            }
        }
        Ok(Self { centroids, radius })
    }

    /// Number of angular bins `M`.
    pub fn bins(&self) -> usize {
        self.centroids.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn centroids(&self) -> &[[f64; 2]] {
        &self.centroids
    }

    /// Nearest-centroid bin of an angle, in `0..bins()`. Ties go to the
    /// lowest index; the input is reduced modulo 2π first.
    pub fn assign_bin(&self, theta: f64) -> Result<usize> {
        let z = angle_to_point(theta, self.radius)?;
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centroids.iter().enumerate() {
            let dx = z[0] - c[0];
            let dy = z[1] - c[1];
            let d = dx * dx + dy * dy;
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best)
    }
}

/// Learns `bins` angular clusters from a set of angles by k-means over the
/// mapped circle points, keeping the lowest-objective restart.
pub fn learn_angle_membership(
    angles: &[f64],
    bins: usize,
    seed: u64,
    restarts: usize,
) -> Result<AngleModel> {
    if angles.is_empty() {
        return Err(Error::EmptyInput("no angles to cluster".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    let mut points = Vec::with_capacity(angles.len() * 2);
    for &a in angles {
        let z = angle_to_point(a, DEFAULT_RADIUS)?;
        points.push(z[0]);
        points.push(z[1]);
    }
    let run = kmeans::run(&points, 2, &KMeansConfig::new(bins, seed, restarts))?;
    let centroids: Vec<[f64; 2]> = run.centroids.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    AngleModel::from_centroids(centroids, DEFAULT_RADIUS)
}

/// L2-normalized histogram of angles over `bins` equal-width bins
/// partitioning `[0, 2π)`.
pub fn angle_histogram(angles: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    if angles.is_empty() {
        return Err(Error::EmptyInput("no angles to histogram".into()));
    }
    let width = TAU / bins as f64;
    let mut hist = vec![0f64; bins];
    for &a in angles {
        let t = reduce_angle(a)?;
        let b = ((t / width) as usize).min(bins - 1);
        hist[b] += 1.0;
    }
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut hist {
        *v /= norm;
    }
    Ok(hist)
}
