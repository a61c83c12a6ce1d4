//! Dataset manifest: versioned JSON naming the dataset, its images and
//! optional query list (descriptor file paths relative to the manifest), and
//! an optional ground-truth file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FORMAT: &str = "gvlad-manifest";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    format: String,
    version: u32,
    pub name: String,
    pub images: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
}

impl Manifest {
    pub fn new(name: String, images: Vec<ManifestEntry>) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            name,
            images,
            queries: Vec::new(),
            ground_truth: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Validation(format!(
                "not a manifest file (format field is {:?})",
                self.format
            )));
        }
        if self.version != VERSION {
            return Err(Error::Validation(format!(
                "unsupported manifest version {} (expected {VERSION})",
                self.version
            )));
        }
        if self.images.is_empty() {
            return Err(Error::Validation("manifest lists no images".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.images {
            if !seen.insert(&e.id) {
                return Err(Error::Validation(format!("duplicate image id {}", e.id)));
            }
        }
        let mut seen = HashSet::new();
        for e in &self.queries {
            if !seen.insert(&e.id) {
                return Err(Error::Validation(format!("duplicate query id {}", e.id)));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Validation(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

/// A manifest plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct ManifestFile {
    pub manifest: Manifest,
    pub dir: PathBuf,
}

impl ManifestFile {
    pub fn entry_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.dir.join(&entry.path)
    }

    pub fn ground_truth_path(&self) -> Option<PathBuf> {
        self.manifest.ground_truth.as_ref().map(|p| self.dir.join(p))
    }
}

/// Loads and validates a manifest; every referenced file must exist.
pub fn load_manifest(path: &Path) -> Result<ManifestFile> {
    let text = std::fs::read_to_string(path)?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    let dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let file = ManifestFile { manifest, dir };
    for entry in file.manifest.images.iter().chain(&file.manifest.queries) {
        let p = file.entry_path(entry);
        if !p.is_file() {
            return Err(Error::Validation(format!(
                "manifest references missing descriptor file {}",
                p.display()
            )));
        }
    }
    if let Some(gt) = file.ground_truth_path() {
        if !gt.is_file() {
            return Err(Error::Validation(format!(
                "manifest references missing ground-truth file {}",
                gt.display()
            )));
        }
    }
    Ok(file)
}
