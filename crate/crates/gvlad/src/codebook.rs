//! Visual vocabulary: k-means training in descriptor space, nearest-word
//! assignment, and adaptation of an existing vocabulary to a new dataset.

use crate::descriptor::{check_consistent_dim, LocalDescriptor};
use crate::error::{Error, Result};
use crate::kmeans::{self, KMeansConfig};

/// Divisor used when re-estimating adapted centroids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdaptDivisor {
    /// Divide each word's residual sum by the number of descriptors assigned
    /// to that word, making the adapted centroid the mean of its assigned
    /// target descriptors.
    #[default]
    PerWordCount,
    /// Divide by the total number of target descriptors. Shrinks every
    /// centroid toward the origin as the dataset grows; kept for fidelity
    /// experiments only.
    GlobalCount,
}

/// A visual vocabulary of `K` centroids in `d`-dimensional descriptor space.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// Row-major `K × d` centroid matrix.
    centroids: Vec<f64>,
    words: usize,
    dim: usize,
}

impl Codebook {
    /// Builds a codebook from a flat row-major centroid matrix.
    pub fn from_centroids(centroids: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if centroids.is_empty() || !centroids.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "centroid buffer of {} values is not a positive multiple of dim {dim}",
                centroids.len()
            )));
        }
        if !centroids.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "centroids contain non-finite values".into(),
            ));
        }
        let words = centroids.len() / dim;
        Ok(Self {
            centroids,
            words,
            dim,
        })
    }

    /// Trains a `words`-entry vocabulary by restarted k-means over the
    /// descriptors' appearance vectors, keeping the lowest-objective run.
    pub fn train(
        descriptors: &[LocalDescriptor],
        words: usize,
        seed: u64,
        restarts: usize,
    ) -> Result<Self> {
        if descriptors.is_empty() {
            return Err(Error::EmptyInput("no descriptors to train on".into()));
        }
        let dim = descriptors[0].dim();
        check_consistent_dim(descriptors, dim)?;
        let mut points = Vec::with_capacity(descriptors.len() * dim);
        for d in descriptors {
            points.extend(d.vector().iter().map(|&v| v as f64));
        }
        let run = kmeans::run(&points, dim, &KMeansConfig::new(words, seed, restarts))?;
        Self::from_centroids(run.centroids, dim)
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, word: usize) -> &[f64] {
        &self.centroids[word * self.dim..(word + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    /// Index of the nearest visual word by squared Euclidean distance, ties
    /// to the lowest index.
    pub fn nearest_word(&self, vector: &[f32]) -> Result<usize> {
        if vector.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector has dimension {}, codebook expects {}",
                vector.len(),
                self.dim
            )));
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for w in 0..self.words {
            let c = self.centroid(w);
            let mut d = 0.0;
            for t in 0..self.dim {
                let diff = vector[t] as f64 - c[t];
                d += diff * diff;
            }
            if d < best_d {
                best_d = d;
                best = w;
            }
        }
        Ok(best)
    }

    /// Adapts this vocabulary to a new dataset: each word's centroid is
    /// re-estimated from the target descriptors whose nearest word it is.
    /// Words with no assigned descriptors keep their source centroid.
    pub fn adapt(&self, targets: &[LocalDescriptor], divisor: AdaptDivisor) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyInput("no target descriptors to adapt to".into()));
        }
        check_consistent_dim(targets, self.dim)?;

        let mut sums = vec![0f64; self.words * self.dim];
        let mut counts = vec![0usize; self.words];
        for d in targets {
            let w = self.nearest_word(d.vector())?;
            counts[w] += 1;
            for (acc, v) in sums[w * self.dim..(w + 1) * self.dim]
                .iter_mut()
                .zip(d.vector())
            {
                *acc += *v as f64;
            }
        }

        let total = targets.len() as f64;
        let mut adapted = self.centroids.clone();
        for w in 0..self.words {
            if counts[w] == 0 {
                continue;
            }
            let div = match divisor {
                AdaptDivisor::PerWordCount => counts[w] as f64,
                AdaptDivisor::GlobalCount => total,
            };
            for t in 0..self.dim {
                adapted[w * self.dim + t] = sums[w * self.dim + t] / div;
            }
        }
        Self::from_centroids(adapted, self.dim)
    }
}
