//! PCA-whitening compression of encoded vectors from `D` to `rho`
//! dimensions.
//!
//! The projection rows are eigenvectors of the training covariance scaled by
//! the inverse square root of their eigenvalues (plus a small floor for
//! rank-deficient spectra). When the fit set is smaller than `D` the
//! eigenproblem is solved on the `n × n` Gram matrix instead of the full
//! `D × D` covariance.

use nalgebra::{DMatrix, DVector};

use crate::encoder::EncodedVector;
use crate::error::{Error, Result};

/// Eigenvalue floor added before the inverse square root; fit sets are
/// usually far smaller than `D`, so trailing eigenvalues are zero.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Default retained dimension.
pub const DEFAULT_RHO: usize = 128;

/// A fitted PCA-whitening model.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningModel {
    mean: Vec<f64>,
    /// Row-major `rho × D`; row k is the k-th eigenvector scaled by
    /// `(eigenvalue_k + epsilon)^(-1/2)`.
    projection: Vec<f64>,
    /// Top `rho` eigenvalues of the training covariance, descending.
    eigenvalues: Vec<f64>,
    input_dim: usize,
    rho: usize,
    epsilon: f64,
}

impl WhiteningModel {
    /// Fits mean, eigenvalues and whitening projection on a set of encoded
    /// vectors, retaining the top `rho` principal directions.
    pub fn fit(vectors: &[EncodedVector], rho: usize) -> Result<Self> {
        Self::fit_with_epsilon(vectors, rho, DEFAULT_EPSILON)
    }

    pub fn fit_with_epsilon(vectors: &[EncodedVector], rho: usize, epsilon: f64) -> Result<Self> {
        let n = vectors.len();
        if n < 2 {
            return Err(Error::DegenerateInput(format!(
                "whitening needs at least 2 vectors, got {n}"
            )));
        }
        let dim = vectors[0].len();
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "vector {i} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
        }
        if rho == 0 || rho > dim.min(n - 1) {
            return Err(Error::InvalidArgument(format!(
                "rho must be in 1..=min(D, count-1) = {}, got {rho}",
                dim.min(n - 1)
            )));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be a non-negative finite value, got {epsilon}"
            )));
        }

        let mut mean = vec![0f64; dim];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v.values()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        // Row-major centered data.
        let mut centered = Vec::with_capacity(n * dim);
        for v in vectors {
            centered.extend(v.values().iter().zip(&mean).map(|(x, m)| x - m));
        }

        let (eigenvalues, eigenvectors) = if dim <= n {
            eig_direct(&centered, n, dim, rho)?
        } else {
            eig_gram(&centered, n, dim, rho)?
        };

        let mut projection = eigenvectors;
        for (k, row) in projection.chunks_exact_mut(dim).enumerate() {
            let scale = 1.0 / (eigenvalues[k] + epsilon).sqrt();
            if !scale.is_finite() {
                return Err(Error::Numerical(format!(
                    "eigenvalue {k} ({}) is too small to whiten with epsilon {epsilon}",
                    eigenvalues[k]
                )));
            }
            for v in row {
                *v *= scale;
            }
        }

        Ok(Self {
            mean,
            projection,
            eigenvalues,
            input_dim: dim,
            rho,
            epsilon,
        })
    }

    /// Reconstructs a model from stored parts, validating shapes.
    pub fn from_parts(
        mean: Vec<f64>,
        projection: Vec<f64>,
        eigenvalues: Vec<f64>,
        rho: usize,
        epsilon: f64,
    ) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || rho == 0 {
            return Err(Error::InvalidArgument(
                "whitening model dimensions must be positive".into(),
            ));
        }
        if projection.len() != rho * dim || eigenvalues.len() != rho {
            return Err(Error::InvalidArgument(format!(
                "inconsistent whitening model: D={dim}, rho={rho}, {} projection values, {} eigenvalues",
                projection.len(),
                eigenvalues.len()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be sorted descending".into(),
            ));
        }
        Ok(Self {
            mean,
            projection,
            eigenvalues,
            input_dim: dim,
            rho,
            epsilon,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Row `k` of the whitening projection (scaled eigenvector).
    pub fn projection_row(&self, k: usize) -> &[f64] {
        &self.projection[k * self.input_dim..(k + 1) * self.input_dim]
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    /// Centers and projects without the final L2 normalization. With
    /// `whiten` off the plain eigenvector projection is used (no
    /// inverse-square-root eigenvalue scaling).
    pub fn project(&self, vector: &EncodedVector, whiten: bool) -> Result<Vec<f64>> {
        if vector.len() != self.input_dim {
            return Err(Error::InvalidArgument(format!(
                "vector has dimension {}, model expects {}",
                vector.len(),
                self.input_dim
            )));
        }
        let centered: Vec<f64> = vector
            .values()
            .iter()
            .zip(&self.mean)
            .map(|(x, m)| x - m)
            .collect();
        let mut out = Vec::with_capacity(self.rho);
        for k in 0..self.rho {
            let row = self.projection_row(k);
            let mut acc = 0.0;
            for (r, c) in row.iter().zip(&centered) {
                acc += r * c;
            }
            if !whiten {
                acc *= (self.eigenvalues[k] + self.epsilon).sqrt();
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Centers, projects to `rho` dimensions and L2-normalizes. The zero
    /// projection (e.g. the mean vector itself) stays zero.
    pub fn apply(&self, vector: &EncodedVector, whiten: bool) -> Result<EncodedVector> {
        let mut values = self.project(vector, whiten)?;
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        EncodedVector::from_raw(
            values,
            vector.words(),
            vector.dim(),
            vector.angle_bins(),
            Some(self.rho),
        )
    }
}

/// Eigendecomposition of the `D × D` sample covariance (used when `D <= n`).
fn eig_direct(centered: &[f64], n: usize, dim: usize, rho: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let denom = (n - 1) as f64;
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for row in centered.chunks_exact(dim) {
        for i in 0..dim {
            for j in i..dim {
                cov[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = cov.symmetric_eigen();
    let order = descending_order(&eig.eigenvalues);
    let mut eigenvalues = Vec::with_capacity(rho);
    let mut eigenvectors = Vec::with_capacity(rho * dim);
    for &idx in order.iter().take(rho) {
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
        let col = eig.eigenvectors.column(idx);
        let mut row: Vec<f64> = col.iter().copied().collect();
        fix_sign(&mut row);
        eigenvectors.extend(row);
    }
    Ok((eigenvalues, eigenvectors))
}

/// Gram-matrix route for `D > n`: the nonzero spectrum of the covariance is
/// shared with the `n × n` Gram matrix, and each covariance eigenvector is
/// the data matrix applied to the corresponding Gram eigenvector.
fn eig_gram(centered: &[f64], n: usize, dim: usize, rho: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let denom = (n - 1) as f64;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        let ra = &centered[a * dim..(a + 1) * dim];
        for b in a..n {
            let rb = &centered[b * dim..(b + 1) * dim];
            let mut acc = 0.0;
            for t in 0..dim {
                acc += ra[t] * rb[t];
            }
            gram[(a, b)] = acc / denom;
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let eig = gram.symmetric_eigen();
    let order = descending_order(&eig.eigenvalues);
    let mut eigenvalues = Vec::with_capacity(rho);
    let mut eigenvectors = Vec::with_capacity(rho * dim);
    for &idx in order.iter().take(rho) {
        let lambda = eig.eigenvalues[idx].max(0.0);
        eigenvalues.push(lambda);
        let u = eig.eigenvectors.column(idx);
        // v = Xᵀ u, normalized to a unit covariance eigenvector.
        let mut v = vec![0f64; dim];
        for a in 0..n {
            let ua = u[a];
            if ua == 0.0 {
                continue;
            }
            for (vt, xt) in v.iter_mut().zip(&centered[a * dim..(a + 1) * dim]) {
                *vt += ua * xt;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical(format!(
                "fit set has rank below the requested rho (eigenvalue {lambda})"
            )));
        }
        for vt in &mut v {
            *vt /= norm;
        }
        fix_sign(&mut v);
        eigenvectors.extend(v);
    }
    Ok((eigenvalues, eigenvectors))
}

fn descending_order(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Makes eigenvector signs deterministic: the largest-magnitude component
/// (lowest index on ties) is non-negative.
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for x in v {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vector(values: Vec<f64>) -> EncodedVector {
        let d = values.len();
        EncodedVector::from_raw(values, 1, d, 1, None).unwrap()
    }

    fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<EncodedVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| vector((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect()
    }

    /// Covariance of projected training data (1/(n-1) normalization).
    fn projected_covariance(model: &WhiteningModel, data: &[EncodedVector], whiten: bool) -> Vec<f64> {
        let n = data.len();
        let rho = model.rho();
        let projected: Vec<Vec<f64>> = data.iter().map(|v| model.project(v, whiten).unwrap()).collect();
        let mut mean = vec![0f64; rho];
        for p in &projected {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut cov = vec![0f64; rho * rho];
        for p in &projected {
            for i in 0..rho {
                for j in 0..rho {
                    cov[i * rho + j] += (p[i] - mean[i]) * (p[j] - mean[j]);
                }
            }
        }
        for c in &mut cov {
            *c /= (n - 1) as f64;
        }
        cov
    }

    #[test]
    fn recovers_analytic_diagonal_covariance() {
        // Sample covariance of this set is exactly diag(4, 1).
        let s8 = 8f64.sqrt();
        let s2 = 2f64.sqrt();
        let data = vec![
            vector(vec![s8, 0.0]),
            vector(vec![-s8, 0.0]),
            vector(vec![0.0, s2]),
            vector(vec![0.0, -s2]),
            vector(vec![0.0, 0.0]),
        ];
        let model = WhiteningModel::fit(&data, 2).unwrap();
        assert!((model.eigenvalues()[0] - 4.0).abs() < 1e-9);
        assert!((model.eigenvalues()[1] - 1.0).abs() < 1e-9);
        // Whitening divides the first principal coordinate by 2, second by 1.
        let row0_norm: f64 = model.projection_row(0).iter().map(|v| v * v).sum::<f64>().sqrt();
        let row1_norm: f64 = model.projection_row(1).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((row0_norm - 0.5).abs() < 1e-9);
        assert!((row1_norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_vector_projects_to_zero() {
        let data = random_vectors(10, 4, 1);
        let model = WhiteningModel::fit(&data, 3).unwrap();
        let mean = vector(model.mean().to_vec());
        let out = model.apply(&mean, true).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
        assert_eq!(out.rho(), Some(3));
    }

    #[test]
    fn full_rank_projection_reconstructs_input() {
        let data = random_vectors(40, 5, 2);
        let model = WhiteningModel::fit(&data, 5).unwrap();
        let probe = &data[7];
        let projected = model.project(probe, true).unwrap();
        // Un-whiten, un-rotate, un-center.
        let mut recon = model.mean().to_vec();
        for (k, coord) in projected.iter().enumerate() {
            let scale = (model.eigenvalues()[k] + model.epsilon()).sqrt();
            for (r, p) in recon.iter_mut().zip(model.projection_row(k)) {
                // projection row already carries 1/sqrt(λ+ε); invert both.
                *r += coord * scale * p * scale;
            }
        }
        for (r, x) in recon.iter().zip(probe.values()) {
            assert!(
                (r - x).abs() <= 1e-5 * x.abs().max(1.0),
                "reconstruction {r} vs {x}"
            );
        }
    }

    #[test]
    fn whitened_training_covariance_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Anisotropic data: per-axis scales 1..=6.
        let dim = 6;
        let data: Vec<EncodedVector> = (0..80)
            .map(|_| {
                vector(
                    (0..dim)
                        .map(|a| rng.random_range(-1.0..1.0) * (a + 1) as f64)
                        .collect(),
                )
            })
            .collect();
        let model = WhiteningModel::fit(&data, 4).unwrap();
        let cov = projected_covariance(&model, &data, true);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[i * 4 + j] - expected).abs() < 1e-6,
                    "cov[{i},{j}] = {}",
                    cov[i * 4 + j]
                );
            }
        }
    }

    #[test]
    fn gram_route_matches_direct_route() {
        // dim > n forces the Gram path; re-fitting on a transposable subset
        // must produce the same spectrum as the direct covariance route.
        let data = random_vectors(6, 12, 9);
        let model = WhiteningModel::fit(&data, 4).unwrap();

        // Direct covariance eigenvalues computed densely as an oracle.
        let n = data.len();
        let dim = 12;
        let mut mean = vec![0f64; dim];
        for v in &data {
            for (m, x) in mean.iter_mut().zip(v.values()) {
                *m += x / n as f64;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for v in &data {
            for i in 0..dim {
                for j in 0..dim {
                    cov[(i, j)] +=
                        (v.values()[i] - mean[i]) * (v.values()[j] - mean[j]) / (n - 1) as f64;
                }
            }
        }
        let mut oracle: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (k, expected) in oracle.iter().take(4).enumerate() {
            assert!(
                (model.eigenvalues()[k] - expected).abs() < 1e-9,
                "eigenvalue {k}: {} vs {expected}",
                model.eigenvalues()[k],
            );
        }
        // Whitened covariance is identity through the Gram route too.
        let cov = projected_covariance(&model, &data, true);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((cov[i * 4 + j] - expected).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn projection_rows_are_orthogonal_with_scaled_norms() {
        let data = random_vectors(30, 8, 11);
        let model = WhiteningModel::fit(&data, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = model
                    .projection_row(i)
                    .iter()
                    .zip(model.projection_row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                if i == j {
                    let expected = 1.0 / (model.eigenvalues()[i] + model.epsilon());
                    assert!((dot - expected).abs() < 1e-9 * expected.max(1.0));
                } else {
                    assert!(dot.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn projection_is_affine_before_normalization() {
        let data = random_vectors(20, 6, 13);
        let model = WhiteningModel::fit(&data, 3).unwrap();
        let a = &data[0];
        let b = &data[1];
        let alpha = 0.3;
        let mixed = vector(
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
                .collect(),
        );
        let pa = model.project(a, true).unwrap();
        let pb = model.project(b, true).unwrap();
        let pm = model.project(&mixed, true).unwrap();
        for k in 0..3 {
            let expected = alpha * pa[k] + (1.0 - alpha) * pb[k];
            assert!((pm[k] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_rejects_bad_input() {
        let data = random_vectors(5, 4, 0);
        assert!(matches!(
            WhiteningModel::fit(&data[..1], 1),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            WhiteningModel::fit(&data, 5),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            WhiteningModel::fit(&data, 0),
            Err(Error::InvalidArgument(_))
        ));
        let model = WhiteningModel::fit(&data, 2).unwrap();
        let short = vector(vec![1.0, 2.0]);
        assert!(matches!(
            model.apply(&short, true),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn plain_pca_differs_from_whitened_by_eigenvalue_scale() {
        let data = random_vectors(25, 5, 21);
        let model = WhiteningModel::fit(&data, 3).unwrap();
        let probe = &data[3];
        let whitened = model.project(probe, true).unwrap();
        let plain = model.project(probe, false).unwrap();
        for k in 0..3 {
            let scale = (model.eigenvalues()[k] + model.epsilon()).sqrt();
            assert!((plain[k] - whitened[k] * scale).abs() < 1e-9);
        }
    }
}
