//! Model directories: a `manifest.json` next to one `.tnsr` file per tensor.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Tensor, Vector};

pub const MANIFEST: &str = "manifest.json";

pub fn write_manifest<T: Serialize>(dir: &Path, manifest: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST), text)?;
    Ok(())
}

pub fn read_manifest<T: DeserializeOwned>(dir: &Path) -> Result<T> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_matrix(dir: &Path, name: &str, m: &Matrix) -> Result<()> {
    Tensor::from(m).write(&dir.join(format!("{name}.tnsr")))
}

pub fn write_vector(dir: &Path, name: &str, v: &Vector) -> Result<()> {
    Tensor::from(v).write(&dir.join(format!("{name}.tnsr")))
}

pub fn read_matrix(dir: &Path, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
    let m = Tensor::read(&dir.join(format!("{name}.tnsr")))?.into_matrix()?;
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::Format(format!(
            "{name}: expected {rows}x{cols}, found {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}

pub fn read_vector(dir: &Path, name: &str, len: usize) -> Result<Vector> {
    let v = Tensor::read(&dir.join(format!("{name}.tnsr")))?.into_vector()?;
    if v.len() != len {
        return Err(Error::Format(format!("{name}: expected length {len}, found {}", v.len())));
    }
    Ok(v)
}

pub(crate) fn write_dense(dir: &Path, name: &str, d: &crate::models::Dense) -> Result<()> {
    write_matrix(dir, &format!("{name}.w"), &d.w)?;
    write_vector(dir, &format!("{name}.b"), &d.b)
}

pub(crate) fn read_dense(dir: &Path, name: &str, fan_in: usize, fan_out: usize) -> Result<crate::models::Dense> {
    Ok(crate::models::Dense {
        w: read_matrix(dir, &format!("{name}.w"), fan_out, fan_in)?,
        b: read_vector(dir, &format!("{name}.b"), fan_out)?,
    })
}
