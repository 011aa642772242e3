//! TNSR tensor files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"TNSR" | rank: u32 | dims: rank × u32 | data: product(dims) × f64 (row-major)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Matrix, Vector};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TNSR";

/// An n-dimensional array as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u32>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<u32>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().map(|&d| d as usize).product();
        if expected != data.len() {
            return Err(Error::Format(format!(
                "dims {dims:?} need {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let mut magic = [0u8; 4];
        cursor
            .read_exact(&mut magic)
            .map_err(|_| Error::Format("file shorter than magic".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let rank = read_u32(&mut cursor)? as usize;
        let dims = (0..rank).map(|_| read_u32(&mut cursor)).collect::<Result<Vec<_>>>()?;
        let count: usize = dims.iter().map(|&d| d as usize).product();
        if cursor.len() != count * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                count * 8,
                cursor.len()
            )));
        }
        let data = cursor
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn into_matrix(self) -> Result<Matrix> {
        match self.dims.as_slice() {
            [r, c] => Matrix::new(*r as usize, *c as usize, self.data),
            other => Err(Error::Format(format!("expected rank-2 tensor, got dims {other:?}"))),
        }
    }

    pub fn into_vector(self) -> Result<Vector> {
        match self.dims.as_slice() {
            [_] => Vector::new(self.data),
            other => Err(Error::Format(format!("expected rank-1 tensor, got dims {other:?}"))),
        }
    }
}

fn read_u32(cursor: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    cursor
        .read_exact(&mut b)
        .map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

impl From<&Matrix> for Tensor {
    fn from(m: &Matrix) -> Self {
        Tensor {
            dims: vec![m.rows() as u32, m.cols() as u32],
            data: m.as_slice().to_vec(),
        }
    }
}

impl From<&Vector> for Tensor {
    fn from(v: &Vector) -> Self {
        Tensor {
            dims: vec![v.len() as u32],
            data: v.as_slice().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_byte_layout() {
        let t = Tensor::new(vec![2], vec![1.0, -2.5]).unwrap();
        let b = t.to_bytes();
        assert_eq!(&b[..4], b"TNSR");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &2u32.to_le_bytes());
        assert_eq!(&b[12..20], &1.0f64.to_le_bytes());
        assert_eq!(&b[20..28], &(-2.5f64).to_le_bytes());
        assert_eq!(b.len(), 28);
    }

    #[test]
    fn rejects_corruption() {
        let t = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let mut b = t.to_bytes();
        b.pop();
        assert!(Tensor::from_bytes(&b).is_err());
        let mut b = t.to_bytes();
        b[0] = b'X';
        assert!(Tensor::from_bytes(&b).is_err());
        assert!(Tensor::from_bytes(b"TN").is_err());
    }

    #[test]
    fn scalar_rank_zero() {
        let t = Tensor::new(vec![], vec![3.0]).unwrap();
        assert_eq!(Tensor::from_bytes(&t.to_bytes()).unwrap(), t);
    }

    proptest! {
        #[test]
        fn round_trip(rows in 1u32..6, cols in 1u32..6, seed in any::<u64>()) {
            let mut rng = crate::tensor::RandomSource::from_seed(seed);
            let data: Vec<f64> = (0..rows * cols).map(|_| rng.normal()).collect();
            let t = Tensor::new(vec![rows, cols], data).unwrap();
            prop_assert_eq!(Tensor::from_bytes(&t.to_bytes()).unwrap(), t);
        }
    }
}
