//! Residual aggregation of local descriptors into VLAD and angle-binned
//! VLAD signatures, plus the three-stage normalization chain
//! (per-block intra-norm, cross-word Z-score, global L2).

use crate::angles::AngleModel;
use crate::codebook::Codebook;
use crate::descriptor::{check_consistent_dim, LocalDescriptor};
use crate::error::{Error, Result};

/// An aggregated image signature.
///
/// Aggregated vectors are laid out word-major, then angle bin, then feature
/// dimension: component `((i·M) + j)·d + t` belongs to visual word `i`,
/// angle bin `j`, feature dimension `t`. With `M = 1` this collapses
/// exactly to the plain VLAD layout. Whitened vectors (`rho` set) are dense
/// projections with no block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedVector {
    values: Vec<f64>,
    words: usize,
    dim: usize,
    angle_bins: usize,
    rho: Option<usize>,
}

impl EncodedVector {
    /// Wraps raw values, validating the length against the layout metadata.
    pub fn from_raw(
        values: Vec<f64>,
        words: usize,
        dim: usize,
        angle_bins: usize,
        rho: Option<usize>,
    ) -> Result<Self> {
        if words == 0 || dim == 0 || angle_bins == 0 {
            return Err(Error::InvalidArgument(
                "layout metadata must be positive".into(),
            ));
        }
        let expected = rho.unwrap_or(words * dim * angle_bins);
        if rho == Some(0) {
            return Err(Error::InvalidArgument("rho must be >= 1".into()));
        }
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "vector has {} values, layout requires {expected}",
                values.len()
            )));
        }
        Ok(Self {
            values,
            words,
            dim,
            angle_bins,
            rho,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn angle_bins(&self) -> usize {
        self.angle_bins
    }

    /// Retained dimension if this vector has been whitened.
    pub fn rho(&self) -> Option<usize> {
        self.rho
    }

    /// The `d`-dim residual sub-block of visual word `word` and angle bin
    /// `bin`. Only aggregated (unwhitened) vectors have block structure.
    pub fn block(&self, word: usize, bin: usize) -> Result<&[f64]> {
        self.require_aggregated()?;
        if word >= self.words || bin >= self.angle_bins {
            return Err(Error::InvalidArgument(format!(
                "block ({word}, {bin}) out of range ({} words, {} bins)",
                self.words, self.angle_bins
            )));
        }
        let start = (word * self.angle_bins + bin) * self.dim;
        Ok(&self.values[start..start + self.dim])
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Values narrowed to `f32`, the on-disk and index representation.
    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }

    fn require_aggregated(&self) -> Result<()> {
        if self.rho.is_some() {
            return Err(Error::InvalidArgument(
                "whitened vector has no word/bin block structure".into(),
            ));
        }
        Ok(())
    }
}

/// Which normalization stages to run after aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizationOptions {
    pub intra: bool,
    pub inter_zscore: bool,
    pub l2: bool,
}

impl Default for NormalizationOptions {
    fn default() -> Self {
        Self {
            intra: true,
            inter_zscore: true,
            l2: true,
        }
    }
}

impl NormalizationOptions {
    /// Global L2 only — the plain VLAD baseline chain.
    pub fn l2_only() -> Self {
        Self {
            intra: false,
            inter_zscore: false,
            l2: true,
        }
    }
}

fn validate_input(descriptors: &[LocalDescriptor], codebook: &Codebook) -> Result<()> {
    if descriptors.is_empty() {
        return Err(Error::EmptyInput("no descriptors to encode".into()));
    }
    check_consistent_dim(descriptors, codebook.dim())
}

/// Sums descriptor residuals per nearest visual word (single angle bin).
pub fn vlad_encode(descriptors: &[LocalDescriptor], codebook: &Codebook) -> Result<EncodedVector> {
    aggregate(descriptors, codebook, None)
}

/// Sums descriptor residuals per (nearest visual word, angle bin) pair.
pub fn gvlad_encode(
    descriptors: &[LocalDescriptor],
    codebook: &Codebook,
    angles: &AngleModel,
) -> Result<EncodedVector> {
    aggregate(descriptors, codebook, Some(angles))
}

fn aggregate(
    descriptors: &[LocalDescriptor],
    codebook: &Codebook,
    angles: Option<&AngleModel>,
) -> Result<EncodedVector> {
    validate_input(descriptors, codebook)?;
    let words = codebook.words();
    let dim = codebook.dim();
    let bins = angles.map_or(1, AngleModel::bins);
    let mut values = vec![0f64; words * dim * bins];
    for desc in descriptors {
        let word = codebook.nearest_word(desc.vector())?;
        let bin = match angles {
            Some(model) => model.assign_bin(desc.angle() as f64)?,
            None => 0,
        };
        let centroid = codebook.centroid(word);
        let base = (word * bins + bin) * dim;
        for t in 0..dim {
            values[base + t] += desc.vector()[t] as f64 - centroid[t];
        }
    }
    EncodedVector::from_raw(values, words, dim, bins, None)
}

/// Scales every (word, bin) residual sub-block to unit L2 norm
/// independently. All-zero sub-blocks are left untouched.
pub fn intra_normalize(vector: &mut EncodedVector) -> Result<()> {
    vector.require_aggregated()?;
    let dim = vector.dim;
    for block in vector.values.chunks_exact_mut(dim) {
        let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in block {
                *v /= norm;
            }
        }
    }
    Ok(())
}

/// Standardizes each within-word coordinate slice across the visual words to
/// zero mean and unit population standard deviation. Slices with zero
/// deviation are set to zero.
pub fn inter_zscore_normalize(vector: &mut EncodedVector) -> Result<()> {
    vector.require_aggregated()?;
    let words = vector.words;
    if words < 2 {
        return Err(Error::Config(
            "inter-Z-score normalization needs at least 2 visual words".into(),
        ));
    }
    let stride = vector.angle_bins * vector.dim;
    for offset in 0..stride {
        let mut mean = 0.0;
        for w in 0..words {
            mean += vector.values[w * stride + offset];
        }
        mean /= words as f64;
        let mut var = 0.0;
        for w in 0..words {
            let d = vector.values[w * stride + offset] - mean;
            var += d * d;
        }
        let std = (var / words as f64).sqrt();
        for w in 0..words {
            let v = &mut vector.values[w * stride + offset];
            *v = if std == 0.0 { 0.0 } else { (*v - mean) / std };
        }
    }
    Ok(())
}

/// Scales the whole vector to unit L2 norm; the zero vector stays zero.
pub fn l2_normalize(vector: &mut EncodedVector) {
    let norm = vector.l2_norm();
    if norm > 0.0 {
        for v in &mut vector.values {
            *v /= norm;
        }
    }
}

/// Full signature pipeline: angle-binned aggregation followed by
/// intra-normalization, inter-Z-score normalization and global L2.
pub fn encode_image(
    descriptors: &[LocalDescriptor],
    codebook: &Codebook,
    angles: &AngleModel,
) -> Result<EncodedVector> {
    encode_image_with(
        descriptors,
        codebook,
        Some(angles),
        NormalizationOptions::default(),
    )
}

/// Pipeline with each normalization stage individually switchable and the
/// angle model optional (absent means plain single-bin VLAD aggregation).
pub fn encode_image_with(
    descriptors: &[LocalDescriptor],
    codebook: &Codebook,
    angles: Option<&AngleModel>,
    options: NormalizationOptions,
) -> Result<EncodedVector> {
    let mut vector = aggregate(descriptors, codebook, angles)?;
    if options.intra {
        intra_normalize(&mut vector)?;
    }
    if options.inter_zscore {
        inter_zscore_normalize(&mut vector)?;
    }
    if options.l2 {
        l2_normalize(&mut vector);
    }
    Ok(vector)
}
