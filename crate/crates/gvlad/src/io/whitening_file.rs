//! Whitening-model file (`.gvwm`): magic "GVWM", version u32, D u32,
//! rho u32, epsilon f32, then mean (D), eigenvalues (rho) and the rho×D
//! projection, all 32-bit little-endian floats. Computation stays in f64;
//! storage narrows to f32.

use std::path::Path;

use super::{FormatReader, FormatWriter};
use crate::error::{Error, Result};
use crate::whitening::WhiteningModel;

const MAGIC: &[u8; 4] = b"GVWM";
const VERSION: u32 = 1;

pub fn write_whitening_model(path: &Path, model: &WhiteningModel) -> Result<()> {
    let mut w = FormatWriter::create(path)?;
    w.bytes(MAGIC)?;
    w.u32(VERSION)?;
    w.u32(model.input_dim() as u32)?;
    w.u32(model.rho() as u32)?;
    w.f32(model.epsilon() as f32)?;
    for &v in model.mean() {
        w.f32(v as f32)?;
    }
    for &v in model.eigenvalues() {
        w.f32(v as f32)?;
    }
    for &v in model.projection() {
        w.f32(v as f32)?;
    }
    w.finish()
}

pub fn read_whitening_model(path: &Path) -> Result<WhiteningModel> {
    let mut r = FormatReader::open(path)?;
    r.magic(MAGIC, "whitening-model")?;
    r.version(VERSION)?;
    let dim = r.u32("input dimension")? as usize;
    let rho = r.u32("rho")? as usize;
    if dim == 0 || rho == 0 || rho > dim {
        return Err(Error::Validation(format!(
            "{}: inconsistent whitening dimensions D={dim}, rho={rho}",
            r.path().display()
        )));
    }
    let epsilon = r.f32_vec(1, "epsilon")?[0];
    r.finite(epsilon, "epsilon".into())?;
    let mean = r.f32_vec(dim, "mean")?;
    let eigenvalues = r.f32_vec(rho, "eigenvalues")?;
    let projection = r.f32_vec(rho * dim, "projection")?;
    for (i, &v) in mean.iter().enumerate() {
        r.finite(v, format!("mean component {i}"))?;
    }
    for (i, &v) in eigenvalues.iter().enumerate() {
        r.finite(v, format!("eigenvalue {i}"))?;
    }
    for (i, &v) in projection.iter().enumerate() {
        r.finite(v, format!("projection value {i}"))?;
    }
    r.expect_eof("projection")?;
    WhiteningModel::from_parts(
        mean.into_iter().map(f64::from).collect(),
        projection.into_iter().map(f64::from).collect(),
        eigenvalues.into_iter().map(f64::from).collect(),
        rho,
        epsilon as f64,
    )
}
