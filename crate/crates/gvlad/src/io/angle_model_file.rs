//! Angle-model file: versioned JSON with the bin count, training radius and
//! full-precision centroid coordinates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::angles::AngleModel;
use crate::error::{Error, Result};

const FORMAT: &str = "gvlad-angle-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AngleModelFile {
    format: String,
    version: u32,
    bins: usize,
    radius: f64,
    centroids: Vec<[f64; 2]>,
}

pub fn write_angle_model(path: &Path, model: &AngleModel) -> Result<()> {
    let file = AngleModelFile {
        format: FORMAT.to_string(),
        version: VERSION,
        bins: model.bins(),
        radius: model.radius(),
        centroids: model.centroids().to_vec(),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Validation(format!("angle model serialization: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_angle_model(path: &Path) -> Result<AngleModel> {
    let text = std::fs::read_to_string(path)?;
    let file: AngleModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    if file.format != FORMAT {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "angle-model",
        });
    }
    if file.version != VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: file.version,
            expected: VERSION,
        });
    }
    if file.bins != file.centroids.len() {
        return Err(Error::Validation(format!(
            "{}: bin count {} does not match {} centroids",
            path.display(),
            file.bins,
            file.centroids.len()
        )));
    }
    AngleModel::from_centroids(file.centroids, file.radius)
}
