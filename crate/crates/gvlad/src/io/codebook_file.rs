//! Codebook file (`.gvcb`): magic "GVCB", version u32, K u32, d u32, then
//! `K·d` 32-bit floats row-major, all little-endian.

use std::path::Path;

use super::{FormatReader, FormatWriter};
use crate::codebook::Codebook;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GVCB";
const VERSION: u32 = 1;

pub fn write_codebook(path: &Path, codebook: &Codebook) -> Result<()> {
    let mut w = FormatWriter::create(path)?;
    w.bytes(MAGIC)?;
    w.u32(VERSION)?;
    w.u32(codebook.words() as u32)?;
    w.u32(codebook.dim() as u32)?;
    for &v in codebook.centroids() {
        w.f32(v as f32)?;
    }
    w.finish()
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    let mut r = FormatReader::open(path)?;
    r.magic(MAGIC, "codebook")?;
    r.version(VERSION)?;
    let words = r.u32("word count")? as usize;
    let dim = r.u32("dimension")? as usize;
    if words == 0 || dim == 0 {
        return Err(Error::Validation(format!(
            "{}: codebook must have at least one word and one dimension",
            r.path().display()
        )));
    }
    let values = r.f32_vec(words * dim, "centroids")?;
    for (i, &v) in values.iter().enumerate() {
        r.finite(v, format!("centroid value {i}"))?;
    }
    r.expect_eof("centroids")?;
    Codebook::from_centroids(values.into_iter().map(f64::from).collect(), dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cb.gvcb");
        let cb = Codebook::from_centroids(vec![0.5, -1.25, 3.0, 7.5, 0.0, 2.0], 3).unwrap();
        write_codebook(&path, &cb).unwrap();
        let back = read_codebook(&path).unwrap();
        assert_eq!(back.words(), 2);
        assert_eq!(back.dim(), 3);
        assert_eq!(back.centroids(), cb.centroids());
    }

    #[test]
    fn rejects_corruption() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cb.gvcb");
        let cb = Codebook::from_centroids(vec![1.0, 2.0], 1).unwrap();
        write_codebook(&path, &cb).unwrap();
        let good = std::fs::read(&path).unwrap();

        let trunc = dir.path().join("t.gvcb");
        std::fs::write(&trunc, &good[..good.len() - 2]).unwrap();
        assert!(matches!(read_codebook(&trunc), Err(Error::Truncated { .. })));

        let trailing = dir.path().join("x.gvcb");
        let mut bytes = good.clone();
        bytes.push(0);
        std::fs::write(&trailing, &bytes).unwrap();
        assert!(matches!(read_codebook(&trailing), Err(Error::Validation(_))));
    }
}
