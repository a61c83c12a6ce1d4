//! Encoded-vector file (`.gvve`): magic "GVVE", version u32, K u32, d u32,
//! M u32, rho u32 (0 = unwhitened), count u64, then `count` vectors of
//! 32-bit floats. Vectors are stored in the order of the manifest they were
//! encoded from; that order carries the id association.

use std::path::Path;

use super::{FormatReader, FormatWriter};
use crate::encoder::EncodedVector;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GVVE";
const VERSION: u32 = 1;

/// Structure metadata shared by every vector in a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorSetMeta {
    pub words: usize,
    pub dim: usize,
    pub angle_bins: usize,
    pub rho: Option<usize>,
}

impl VectorSetMeta {
    pub fn vector_len(&self) -> usize {
        self.rho.unwrap_or(self.words * self.dim * self.angle_bins)
    }

    pub fn of(vector: &EncodedVector) -> Self {
        Self {
            words: vector.words(),
            dim: vector.dim(),
            angle_bins: vector.angle_bins(),
            rho: vector.rho(),
        }
    }
}

pub fn write_vector_file(path: &Path, meta: VectorSetMeta, vectors: &[EncodedVector]) -> Result<()> {
    for (i, v) in vectors.iter().enumerate() {
        if VectorSetMeta::of(v) != meta {
            return Err(Error::InvalidArgument(format!(
                "vector {i} does not match the file metadata"
            )));
        }
    }
    let mut w = FormatWriter::create(path)?;
    w.bytes(MAGIC)?;
    w.u32(VERSION)?;
    w.u32(meta.words as u32)?;
    w.u32(meta.dim as u32)?;
    w.u32(meta.angle_bins as u32)?;
    w.u32(meta.rho.unwrap_or(0) as u32)?;
    w.u64(vectors.len() as u64)?;
    for v in vectors {
        w.f32_slice(&v.to_f32())?;
    }
    w.finish()
}

/// Reads the raw 32-bit rows, the index/search representation.
pub fn read_vector_file(path: &Path) -> Result<(VectorSetMeta, Vec<Vec<f32>>)> {
    let mut r = FormatReader::open(path)?;
    r.magic(MAGIC, "encoded-vector")?;
    r.version(VERSION)?;
    let words = r.u32("word count")? as usize;
    let dim = r.u32("dimension")? as usize;
    let angle_bins = r.u32("angle bins")? as usize;
    let rho = match r.u32("rho")? as usize {
        0 => None,
        v => Some(v),
    };
    if words == 0 || dim == 0 || angle_bins == 0 {
        return Err(Error::Validation(format!(
            "{}: vector metadata must be positive",
            r.path().display()
        )));
    }
    let meta = VectorSetMeta {
        words,
        dim,
        angle_bins,
        rho,
    };
    let count = r.u64("vector count")? as usize;
    let len = meta.vector_len();
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let row = r.f32_vec(len, &format!("vector {i}"))?;
        for (t, &v) in row.iter().enumerate() {
            r.finite(v, format!("vector {i}, component {t}"))?;
        }
        rows.push(row);
    }
    r.expect_eof("vectors")?;
    Ok((meta, rows))
}

/// Reads vectors widened back to `f64` working form.
pub fn read_vector_file_encoded(path: &Path) -> Result<(VectorSetMeta, Vec<EncodedVector>)> {
    let (meta, rows) = read_vector_file(path)?;
    let vectors = rows
        .into_iter()
        .map(|row| {
            EncodedVector::from_raw(
                row.into_iter().map(f64::from).collect(),
                meta.words,
                meta.dim,
                meta.angle_bins,
                meta.rho,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trips_aggregated_and_whitened() {
        let dir = tempdir().unwrap();
        let meta = VectorSetMeta {
            words: 2,
            dim: 3,
            angle_bins: 2,
            rho: None,
        };
        let vectors: Vec<EncodedVector> = (0..4)
            .map(|i| {
                EncodedVector::from_raw(
                    (0..12).map(|t| (i * 12 + t) as f64 * 0.5).collect(),
                    2,
                    3,
                    2,
                    None,
                )
                .unwrap()
            })
            .collect();
        let path = dir.path().join("v.gvve");
        write_vector_file(&path, meta, &vectors).unwrap();
        let (back_meta, rows) = read_vector_file(&path).unwrap();
        assert_eq!(back_meta, meta);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1], vectors[1].to_f32());

        let whitened = vec![
            EncodedVector::from_raw(vec![0.25, -1.0], 2, 3, 2, Some(2)).unwrap(),
        ];
        let wmeta = VectorSetMeta::of(&whitened[0]);
        let wpath = dir.path().join("w.gvve");
        write_vector_file(&wpath, wmeta, &whitened).unwrap();
        let (meta2, enc) = read_vector_file_encoded(&wpath).unwrap();
        assert_eq!(meta2.rho, Some(2));
        assert_eq!(enc[0].values(), &[0.25, -1.0]);
    }

    #[test]
    fn rejects_metadata_mismatch() {
        let dir = tempdir().unwrap();
        let meta = VectorSetMeta {
            words: 2,
            dim: 2,
            angle_bins: 1,
            rho: None,
        };
        let wrong = EncodedVector::from_raw(vec![0.0; 6], 3, 2, 1, None).unwrap();
        assert!(write_vector_file(&dir.path().join("v.gvve"), meta, &[wrong]).is_err());
    }
}
