//! On-disk formats: binary descriptor/codebook/vector/whitening files
//! (little-endian, 32-bit floats), the JSON angle-model and manifest files,
//! and the line-based ground-truth format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

mod angle_model_file;
mod codebook_file;
mod descriptor_file;
mod ground_truth;
mod manifest;
mod vector_file;
mod whitening_file;

pub use angle_model_file::{read_angle_model, write_angle_model};
pub use codebook_file::{read_codebook, write_codebook};
pub use descriptor_file::{read_descriptor_file, write_descriptor_file};
pub use ground_truth::{parse_ground_truth, read_ground_truth, write_ground_truth};
pub use manifest::{load_manifest, Manifest, ManifestEntry, ManifestFile};
pub use vector_file::{
    read_vector_file, read_vector_file_encoded, write_vector_file, VectorSetMeta,
};
pub use whitening_file::{read_whitening_model, write_whitening_model};

pub(crate) struct FormatReader<R> {
    inner: R,
    path: PathBuf,
}

impl FormatReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        Ok(Self {
            inner: BufReader::new(file),
            path: path.to_path_buf(),
        })
    }
}

impl<R: Read> FormatReader<R> {
    fn fill(&mut self, buf: &mut [u8], context: &str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Truncated {
                    path: self.path.clone(),
                    context: context.to_string(),
                }
            } else {
                Error::Io(e)
            }
        })
    }

    pub fn magic(&mut self, expected: &'static [u8; 4], format: &'static str) -> Result<()> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf, "magic")?;
        if &buf != expected {
            return Err(Error::BadMagic {
                path: self.path.clone(),
                expected: format,
            });
        }
        Ok(())
    }

    pub fn version(&mut self, expected: u32) -> Result<()> {
        let found = self.u32("version")?;
        if found != expected {
            return Err(Error::VersionMismatch {
                path: self.path.clone(),
                found,
                expected,
            });
        }
        Ok(())
    }

    pub fn u32(&mut self, context: &str) -> Result<u32> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf, context)?;
        Ok(u32::from_le_bytes(buf))
    }

    pub fn u64(&mut self, context: &str) -> Result<u64> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf, context)?;
        Ok(u64::from_le_bytes(buf))
    }

    pub fn f32_vec(&mut self, count: usize, context: &str) -> Result<Vec<f32>> {
        let mut bytes = vec![0u8; count * 4];
        self.fill(&mut bytes, context)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    /// Finite-or-error helper for values read from disk.
    pub fn finite(&self, value: f32, context: String) -> Result<f32> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                path: self.path.clone(),
                context,
            });
        }
        Ok(value)
    }

    pub fn expect_eof(&mut self, context: &str) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::Validation(format!(
                "{}: trailing bytes after {context}",
                self.path.display()
            ))),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub(crate) struct FormatWriter {
    inner: BufWriter<File>,
}

impl FormatWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let file = File::create(path)?;
        Ok(Self {
            inner: BufWriter::new(file),
        })
    }

    pub fn bytes(&mut self, data: &[u8]) -> Result<()> {
        self.inner.write_all(data)?;
        Ok(())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32_slice(&mut self, values: &[f32]) -> Result<()> {
        for &v in values {
            self.f32(v)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
