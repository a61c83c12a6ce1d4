//! Compact image signatures built from local keypoint descriptors.
//!
//! The pipeline aggregates per-image descriptor residuals against a k-means
//! visual vocabulary (VLAD) and additionally partitions each word's residual
//! sum by learned keypoint-angle bins, which separates descriptor
//! configurations that differ only in orientation. Signatures pass through
//! per-block intra-normalization, cross-word Z-score normalization and a
//! global L2 step, and can be compressed with PCA whitening. Retrieval is an
//! exact brute-force L2 scan scored by average precision against annotated
//! ground truth.
//!
//! Descriptors are ingested from a documented binary file format; keypoint
//! detection itself stays outside this crate (see the README for an export
//! recipe). Each major capability has a runnable example under `examples/`,
//! and the `gvlad` binary chains the whole pipeline from the shell.

pub mod angles;
pub mod cli;
pub mod codebook;
pub mod descriptor;
pub mod encoder;
pub mod error;
pub mod io;
mod kmeans;
pub mod retrieval;
pub mod synth;
pub mod whitening;

pub use angles::{angle_histogram, angle_to_point, learn_angle_membership, AngleModel};
pub use codebook::{AdaptDivisor, Codebook};
pub use descriptor::LocalDescriptor;
pub use encoder::{
    encode_image, encode_image_with, gvlad_encode, intra_normalize, inter_zscore_normalize,
    l2_normalize, vlad_encode, EncodedVector, NormalizationOptions,
};
pub use error::{Error, Result};
pub use retrieval::{
    average_precision, mean_average_precision, DatasetIndex, GroundTruth, QueryTruth, RankedHit,
    RankingResult,
};
pub use whitening::WhiteningModel;
