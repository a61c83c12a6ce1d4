//! Local keypoint descriptors: an appearance vector plus the keypoint's
//! dominant angle, with optional pixel position and scale carried along for
//! provenance.

use std::f32::consts::TAU as TAU32;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Reduces an `f32` angle to `[0, 2π)` in double precision.
pub(crate) fn reduce_angle_f32(angle: f32) -> f32 {
    let r = (angle as f64).rem_euclid(TAU) as f32;
    if r >= TAU32 {
        0.0
    } else {
        r
    }
}

/// One keypoint's appearance vector and dominant angle (radians, `[0, 2π)`).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDescriptor {
    vector: Vec<f32>,
    angle: f32,
    position: Option<[f32; 2]>,
    scale: Option<f32>,
}

impl LocalDescriptor {
    /// Builds a descriptor, validating finiteness and reducing the angle
    /// modulo 2π (detectors may emit negative angles).
    pub fn new(vector: Vec<f32>, angle: f32) -> Result<Self> {
        Self::with_geometry(vector, angle, None, None)
    }

    pub fn with_geometry(
        vector: Vec<f32>,
        angle: f32,
        position: Option<[f32; 2]>,
        scale: Option<f32>,
    ) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::EmptyInput("descriptor vector is empty".into()));
        }
        if let Some(i) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "descriptor component {i} is not finite"
            )));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite angle {angle}")));
        }
        if let Some(p) = position {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidArgument("non-finite position".into()));
            }
        }
        if let Some(s) = scale {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "scale must be positive and finite, got {s}"
                )));
            }
        }
        Ok(Self {
            vector,
            angle: reduce_angle_f32(angle),
            position,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn vector(&self) -> &[f32] {
        &self.vector
    }

    /// Dominant keypoint angle in `[0, 2π)`.
    pub fn angle(&self) -> f32 {
        self.angle
    }

    pub fn position(&self) -> Option<[f32; 2]> {
        self.position
    }

    pub fn scale(&self) -> Option<f32> {
        self.scale
    }
}

/// Checks that every descriptor in a set shares dimension `dim`.
pub(crate) fn check_consistent_dim(descriptors: &[LocalDescriptor], dim: usize) -> Result<()> {
    for (i, d) in descriptors.iter().enumerate() {
        if d.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "descriptor {i} has dimension {}, expected {dim}",
                d.dim()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_is_reduced_to_unit_circle() {
        let d = LocalDescriptor::new(vec![1.0], -0.5).unwrap();
        assert!((0.0..TAU32).contains(&d.angle()));
        assert!((d.angle() - (TAU32 - 0.5)).abs() < 1e-5);

        let d = LocalDescriptor::new(vec![1.0], TAU32).unwrap();
        assert!(d.angle() < 1e-6);

        let in_range = 3.25f32;
        let d = LocalDescriptor::new(vec![1.0], in_range).unwrap();
        assert_eq!(d.angle().to_bits(), in_range.to_bits());
    }

    #[test]
    fn rejects_invalid_fields() {
        assert!(LocalDescriptor::new(vec![], 0.0).is_err());
        assert!(LocalDescriptor::new(vec![f32::NAN], 0.0).is_err());
        assert!(LocalDescriptor::new(vec![1.0], f32::INFINITY).is_err());
        assert!(LocalDescriptor::with_geometry(vec![1.0], 0.0, None, Some(0.0)).is_err());
        assert!(LocalDescriptor::with_geometry(vec![1.0], 0.0, None, Some(-2.0)).is_err());
    }
}
