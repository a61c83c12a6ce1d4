//! Learn angular bins from a jittered multi-modal angle distribution and
//! inspect the induced partition of the circle.
//!
//! Run with `cargo run --example angle_membership`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gvlad::angles::{angle_histogram, learn_angle_membership};

fn main() -> gvlad::Result<()> {
    // Detectors respond most strongly near the axes, so synthesize angles
    // jittered around 0, pi/2, pi and 3pi/2.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut angles = Vec::new();
    for mode in [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2] {
        for _ in 0..500 {
            angles.push((mode + rng.random_range(-0.3..0.3)).rem_euclid(TAU));
        }
    }

    let model = learn_angle_membership(&angles, 4, 0, 10)?;
    println!("learned {} bins (radius {})", model.bins(), model.radius());
    for (i, c) in model.centroids().iter().enumerate() {
        let dir = c[1].atan2(c[0]).rem_euclid(TAU);
        println!("  centroid {i}: ({:+.4}, {:+.4})  direction {:.4} rad", c[0], c[1], dir);
    }

    // Sweep the circle to find where the membership switches.
    let steps = 10_000;
    let mut prev = model.assign_bin(0.0)?;
    println!("bin boundaries:");
    for s in 1..=steps {
        let theta = TAU * s as f64 / steps as f64;
        let bin = model.assign_bin(theta % TAU)?;
        if bin != prev {
            println!("  {:.4} rad ({:.1} deg): bin {prev} -> bin {bin}", theta, theta.to_degrees());
            prev = bin;
        }
    }

    // Angles wrap: theta and theta + 2*pi share a bin.
    for theta in [0.3, 2.0, 5.5] {
        assert_eq!(model.assign_bin(theta)?, model.assign_bin(theta + TAU)?);
    }

    // The same angles as a plain L2-normalized histogram, the
    // appearance-free baseline descriptor.
    let hist = angle_histogram(&angles, 8)?;
    let norm: f64 = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("8-bin histogram (unit norm {norm:.6}):");
    for (i, v) in hist.iter().enumerate() {
        println!("  bin {i}: {v:.4}");
    }
    Ok(())
}
