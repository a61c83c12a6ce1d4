//! Compress encoded vectors with PCA whitening and inspect the equalized
//! spectrum.
//!
//! Run with `cargo run --example whitening_compression`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gvlad::encoder::EncodedVector;
use gvlad::whitening::WhiteningModel;

fn main() -> gvlad::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dim = 512;
    let count = 400;
    let rho = 16;

    // Synthetic signatures with a decaying spectrum: axis t has scale
    // 1 / (1 + t / 32).
    let data: Vec<EncodedVector> = (0..count)
        .map(|_| {
            let values: Vec<f64> = (0..dim)
                .map(|t| rng.random_range(-1.0..1.0) / (1.0 + t as f64 / 32.0))
                .collect();
            EncodedVector::from_raw(values, 1, dim, 1, None)
        })
        .collect::<gvlad::Result<_>>()?;

    let model = WhiteningModel::fit(&data, rho)?;
    println!("fit on {count} vectors of dimension {dim}, keeping rho = {rho}");
    println!("top eigenvalues:");
    for (k, lambda) in model.eigenvalues().iter().take(8).enumerate() {
        println!("  lambda[{k}] = {lambda:.5}");
    }

    // Whitened training covariance is the identity on the retained axes.
    let projected: Vec<Vec<f64>> = data
        .iter()
        .map(|v| model.project(v, true))
        .collect::<gvlad::Result<_>>()?;
    let mut worst_diag: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    for i in 0..rho {
        for j in i..rho {
            let mut cov = 0.0;
            for p in &projected {
                cov += p[i] * p[j];
            }
            cov /= (count - 1) as f64;
            if i == j {
                worst_diag = worst_diag.max((cov - 1.0).abs());
            } else {
                worst_off = worst_off.max(cov.abs());
            }
        }
    }
    println!("whitened covariance: max |diag - 1| = {worst_diag:.2e}, max |off-diag| = {worst_off:.2e}");

    // Compress one signature end to end (projection plus final L2).
    let compressed = model.apply(&data[0], true)?;
    println!(
        "compressed {} -> {} dims, unit norm {:.6}",
        data[0].len(),
        compressed.len(),
        compressed.l2_norm()
    );

    // Plain PCA (no eigenvalue scaling) keeps the same subspace but an
    // uneven per-axis variance.
    let plain = model.apply(&data[0], false)?;
    println!("plain-PCA first coords:  {:?}", &plain.values()[..4.min(rho)]);
    println!("whitened first coords:   {:?}", &compressed.values()[..4.min(rho)]);
    Ok(())
}
