//! Re-estimate a trained vocabulary on a shifted target dataset instead of
//! retraining from scratch.
//!
//! Run with `cargo run --example codebook_adaptation`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use gvlad::codebook::{AdaptDivisor, Codebook};
use gvlad::descriptor::LocalDescriptor;

fn mixture(rng: &mut ChaCha8Rng, centers: &[[f64; 2]], spread: f64, count: usize) -> Vec<LocalDescriptor> {
    let noise = Normal::new(0.0, spread).unwrap();
    (0..count)
        .map(|_| {
            let c = centers[rng.random_range(0..centers.len())];
            let v = vec![
                (c[0] + noise.sample(rng)) as f32,
                (c[1] + noise.sample(rng)) as f32,
            ];
            LocalDescriptor::new(v, 0.0).unwrap()
        })
        .collect()
}

fn main() -> gvlad::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let source_centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]];
    let source = mixture(&mut rng, &source_centers, 0.5, 4000);
    let codebook = Codebook::train(&source, 4, 0, 10)?;
    println!("source vocabulary:");
    for w in 0..codebook.words() {
        println!("  word {w}: {:?}", codebook.centroid(w));
    }

    // The target domain drifts by (+1, -0.5) per cluster.
    let target_centers: Vec<[f64; 2]> = source_centers
        .iter()
        .map(|c| [c[0] + 1.0, c[1] - 0.5])
        .collect();
    let target = mixture(&mut rng, &target_centers, 0.5, 2000);

    let adapted = codebook.adapt(&target, AdaptDivisor::PerWordCount)?;
    println!("adapted to the target domain (per-word means):");
    for w in 0..adapted.words() {
        let moved: f64 = codebook
            .centroid(w)
            .iter()
            .zip(adapted.centroid(w))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        println!("  word {w}: {:?}  (moved {moved:.3})", adapted.centroid(w));
    }

    // Adapting on the source centroids themselves is a fixed point.
    let fixed_targets: Vec<LocalDescriptor> = (0..adapted.words())
        .map(|w| {
            let v: Vec<f32> = adapted.centroid(w).iter().map(|&x| x as f32).collect();
            LocalDescriptor::new(v, 0.0).unwrap()
        })
        .collect();
    let narrowed = Codebook::from_centroids(
        adapted.centroids().iter().map(|&v| v as f32 as f64).collect(),
        adapted.dim(),
    )?;
    let refixed = narrowed.adapt(&fixed_targets, AdaptDivisor::PerWordCount)?;
    assert_eq!(refixed.centroids(), narrowed.centroids());
    println!("fixed point confirmed: adapting on the centroids changes nothing");

    // The literal global-count divisor shrinks centroids toward the origin;
    // it exists for comparison experiments only.
    let literal = codebook.adapt(&target, AdaptDivisor::GlobalCount)?;
    println!("global-count divisor (comparison only):");
    for w in 0..literal.words() {
        println!("  word {w}: {:?}", literal.centroid(w));
    }
    Ok(())
}
