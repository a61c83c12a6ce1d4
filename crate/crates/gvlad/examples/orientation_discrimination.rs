//! Two images with identical descriptor vectors but different keypoint
//! orientations: single-bin VLAD cannot tell them apart, angle-binned
//! aggregation can.
//!
//! Run with `cargo run --example orientation_discrimination`.

use std::f32::consts::PI;

use gvlad::angles::AngleModel;
use gvlad::codebook::Codebook;
use gvlad::descriptor::LocalDescriptor;
use gvlad::encoder::{encode_image, gvlad_encode, vlad_encode};

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn main() -> gvlad::Result<()> {
    // Two visual words and two angular bins (pointing +x and -x).
    let codebook = Codebook::from_centroids(vec![0.0, 0.0, 4.0, 4.0], 2)?;
    let bins = AngleModel::from_centroids(vec![[1.0, 0.0], [-1.0, 0.0]], 1.0)?;

    // Identical appearance vectors; only the angles differ between images.
    let image_a = vec![
        LocalDescriptor::new(vec![1.0, 0.5], 0.1)?,
        LocalDescriptor::new(vec![4.5, 4.0], 0.2)?,
    ];
    let image_b = vec![
        LocalDescriptor::new(vec![1.0, 0.5], PI)?,
        LocalDescriptor::new(vec![4.5, 4.0], PI + 0.1)?,
    ];

    let vlad_a = vlad_encode(&image_a, &codebook)?;
    let vlad_b = vlad_encode(&image_b, &codebook)?;
    println!("plain VLAD ({} dims):", vlad_a.len());
    println!("  image A: {:?}", vlad_a.values());
    println!("  image B: {:?}", vlad_b.values());
    println!("  distance: {:.6}", distance(vlad_a.values(), vlad_b.values()));
    assert_eq!(vlad_a.values(), vlad_b.values());

    let g_a = gvlad_encode(&image_a, &codebook, &bins)?;
    let g_b = gvlad_encode(&image_b, &codebook, &bins)?;
    println!("angle-binned ({} dims):", g_a.len());
    println!("  image A: {:?}", g_a.values());
    println!("  image B: {:?}", g_b.values());
    println!("  raw distance: {:.6}", distance(g_a.values(), g_b.values()));

    let full_a = encode_image(&image_a, &codebook, &bins)?;
    let full_b = encode_image(&image_b, &codebook, &bins)?;
    println!(
        "after intra + Z-score + L2 normalization: distance {:.6}",
        distance(full_a.values(), full_b.values())
    );
    Ok(())
}
