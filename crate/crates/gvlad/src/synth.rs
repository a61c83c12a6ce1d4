//! Synthetic benchmark generator.
//!
//! Appearance vectors are drawn from a Gaussian mixture shared by every
//! class, so appearance alone carries no class information. Each mixture
//! component is bimodal (`mean ± delta`), and the class determines which of
//! the component's two angle modes each lobe is paired with. At
//! `angle_signal = 1` that pairing is the only class signal: images of the
//! same class agree on the orientation of every lobe's residual, images of
//! different classes disagree wherever their pairing bits differ, and a
//! single-bin encoding sees balanced lobes that cancel. At
//! `angle_signal = 0` angles are uniform and the classes are
//! indistinguishable.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::descriptor::LocalDescriptor;
use crate::error::{Error, Result};
use crate::io::{write_descriptor_file, write_ground_truth, Manifest, ManifestEntry};
use crate::retrieval::{GroundTruth, QueryTruth};

/// Number of shared appearance mixture components.
const COMPONENTS: usize = 8;
/// Distance of each lobe from its component mean.
const LOBE_OFFSET: f64 = 1.5;
/// Per-axis appearance noise.
const NOISE_SIGMA: f64 = 0.4;
/// Angular jitter around a mode.
const ANGLE_SIGMA: f64 = 0.08;
/// The four angle modes.
const MODES: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub classes: usize,
    pub images_per_class: usize,
    pub descriptors_per_image: usize,
    pub dim: usize,
    /// Fraction of descriptors whose angle follows the class pairing; the
    /// rest are uniform on the circle. 0 removes the class signal entirely.
    pub angle_signal: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthSummary {
    pub manifest_path: PathBuf,
    pub images: usize,
    pub descriptors: usize,
}

/// Generates descriptor files, a ground-truth file and a manifest under
/// `out_dir`. Every image doubles as a query whose relevant set is its
/// classmates. Output is byte-identical for a fixed config.
pub fn generate_synthetic(out_dir: &Path, config: &SynthConfig) -> Result<SynthSummary> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.dim;

    // Shared mixture: component means, lobe directions, and each
    // component's two distinct angle modes.
    let means: Vec<Vec<f64>> = (0..COMPONENTS)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..10.0)).collect())
        .collect();
    let lobes: Vec<Vec<f64>> = (0..COMPONENTS)
        .map(|_| {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            for x in &mut v {
                *x *= LOBE_OFFSET / norm;
            }
            v
        })
        .collect();
    let mode_pairs: Vec<(usize, usize)> = (0..COMPONENTS)
        .map(|_| {
            let a = rng.random_range(0..MODES.len());
            let mut b = rng.random_range(0..MODES.len() - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect();

    // Distinct per-class pairing bits, one per component.
    let mut class_bits: Vec<Vec<bool>> = Vec::with_capacity(config.classes);
    while class_bits.len() < config.classes {
        let bits: Vec<bool> = (0..COMPONENTS).map(|_| rng.random_bool(0.5)).collect();
        if !class_bits.contains(&bits) {
            class_bits.push(bits);
        }
    }

    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    let angle_noise = Normal::new(0.0, ANGLE_SIGMA).expect("valid sigma");
    let descriptor_dir = out_dir.join("descriptors");
    std::fs::create_dir_all(&descriptor_dir)?;

    let mut entries = Vec::new();
    let mut truths = Vec::new();
    let mut total_descriptors = 0usize;
    for (class, bits) in class_bits.iter().enumerate() {
        for image in 0..config.images_per_class {
            let id = format!("c{class:03}_i{image:03}");
            let mut descriptors = Vec::with_capacity(config.descriptors_per_image);
            for _ in 0..config.descriptors_per_image {
                let g = rng.random_range(0..COMPONENTS);
                let positive_lobe = rng.random_bool(0.5);
                let sign = if positive_lobe { 1.0 } else { -1.0 };
                let vector: Vec<f32> = (0..dim)
                    .map(|t| (means[g][t] + sign * lobes[g][t] + noise.sample(&mut rng)) as f32)
                    .collect();
                let angle = if rng.random::<f64>() < config.angle_signal {
                    let (a, b) = mode_pairs[g];
                    let swap = bits[g];
                    let mode = if positive_lobe != swap { MODES[a] } else { MODES[b] };
                    (mode + angle_noise.sample(&mut rng)).rem_euclid(TAU)
                } else {
                    rng.random_range(0.0..TAU)
                };
                let position = [
                    rng.random_range(0.0..1024.0f32),
                    rng.random_range(0.0..768.0f32),
                ];
                let scale = rng.random_range(1.0..3.0f32);
                descriptors.push(LocalDescriptor::with_geometry(
                    vector,
                    angle as f32,
                    Some(position),
                    Some(scale),
                )?);
            }
            total_descriptors += descriptors.len();
            let rel_path = format!("descriptors/{id}.gvdf");
            write_descriptor_file(&out_dir.join(&rel_path), dim, &descriptors)?;
            entries.push(ManifestEntry { id: id.clone(), path: rel_path });

            let relevant: std::collections::HashSet<String> = (0..config.images_per_class)
                .filter(|&other| other != image)
                .map(|other| format!("c{class:03}_i{other:03}"))
                .collect();
            truths.push(QueryTruth {
                query_id: id,
                relevant,
                ignore: Default::default(),
            });
        }
    }

    let truth = GroundTruth::new(truths)?;
    write_ground_truth(&out_dir.join("groundtruth.txt"), &truth)?;

    let mut manifest = Manifest::new("synthetic".into(), entries.clone());
    manifest.queries = entries;
    manifest.ground_truth = Some("groundtruth.txt".into());
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;

    Ok(SynthSummary {
        manifest_path,
        images: config.classes * config.images_per_class,
        descriptors: total_descriptors,
    })
}

fn validate(config: &SynthConfig) -> Result<()> {
    if config.classes == 0
        || config.images_per_class == 0
        || config.descriptors_per_image == 0
        || config.dim == 0
    {
        return Err(Error::InvalidArgument(
            "all synthetic dataset counts must be positive".into(),
        ));
    }
    if config.images_per_class < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 images per class so every query has a relevant match".into(),
        ));
    }
    if config.classes > (1usize << COMPONENTS) / 2 {
        return Err(Error::InvalidArgument(format!(
            "at most {} distinct classes are supported",
            (1usize << COMPONENTS) / 2
        )));
    }
    if !(0.0..=1.0).contains(&config.angle_signal) {
        return Err(Error::InvalidArgument(format!(
            "angle_signal must lie in [0, 1], got {}",
            config.angle_signal
        )));
    }
    Ok(())
}
