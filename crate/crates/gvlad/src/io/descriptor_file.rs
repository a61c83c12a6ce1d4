//! Descriptor file (`.gvdf`): the ingestion format for externally extracted
//! keypoint descriptors.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic   4 bytes  "GVDF"
//! version u32      1
//! d       u32      descriptor dimension
//! count   u64      record count
//! records count × (px f32, py f32, scale f32, angle f32, d × f32)
//! ```
//!
//! A stored scale of 0 means "unspecified". Angles are reduced to `[0, 2π)`
//! on read.

use std::path::Path;

use super::{FormatReader, FormatWriter};
use crate::descriptor::LocalDescriptor;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GVDF";
const VERSION: u32 = 1;

pub fn write_descriptor_file(path: &Path, dim: usize, descriptors: &[LocalDescriptor]) -> Result<()> {
    for (i, d) in descriptors.iter().enumerate() {
        if d.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "descriptor {i} has dimension {}, file expects {dim}",
                d.dim()
            )));
        }
    }
    let mut w = FormatWriter::create(path)?;
    w.bytes(MAGIC)?;
    w.u32(VERSION)?;
    w.u32(dim as u32)?;
    w.u64(descriptors.len() as u64)?;
    for d in descriptors {
        let [px, py] = d.position().unwrap_or([0.0, 0.0]);
        w.f32(px)?;
        w.f32(py)?;
        w.f32(d.scale().unwrap_or(0.0))?;
        w.f32(d.angle())?;
        w.f32_slice(d.vector())?;
    }
    w.finish()
}

pub fn read_descriptor_file(path: &Path) -> Result<Vec<LocalDescriptor>> {
    let mut r = FormatReader::open(path)?;
    r.magic(MAGIC, "descriptor")?;
    r.version(VERSION)?;
    let dim = r.u32("dimension")? as usize;
    if dim == 0 {
        return Err(Error::Validation(format!(
            "{}: descriptor dimension must be >= 1",
            r.path().display()
        )));
    }
    let count = r.u64("record count")? as usize;
    let mut descriptors = Vec::with_capacity(count);
    for record in 0..count {
        let fields = r.f32_vec(4 + dim, &format!("record {record}"))?;
        for (i, &v) in fields.iter().enumerate() {
            r.finite(v, format!("record {record}, field {i}"))?;
        }
        let position = Some([fields[0], fields[1]]);
        let scale = if fields[2] > 0.0 { Some(fields[2]) } else { None };
        let descriptor =
            LocalDescriptor::with_geometry(fields[4..].to_vec(), fields[3], position, scale)
                .map_err(|e| Error::Validation(format!(
                    "{}: record {record}: {e}",
                    r.path().display()
                )))?;
        descriptors.push(descriptor);
    }
    r.expect_eof("descriptor records")?;
    Ok(descriptors)
}
