//! DTNS: a minimal dense tensor file.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | 4         | magic `b"DTNS"`                         |
//! | 4      | 2         | version, `u16` = 1                      |
//! | 6      | 1         | dtype: 1 = `f64`, 2 = `u32`             |
//! | 7      | 1         | ndim                                    |
//! | 8      | 8 * ndim  | dims, `u64` each                        |
//! | ...    | elem * Πd | row-major payload                       |

use std::fs;
use std::path::Path;

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"DTNS";
pub const VERSION: u16 = 1;
pub const DTYPE_F64: u8 = 1;
pub const DTYPE_U32: u8 = 2;

#[derive(Debug, Error)]
pub enum DtnsError {
    #[error("bad magic: expected \"DTNS\", found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported version {0} (expected 1)")]
    BadVersion(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("truncated {field}: need {needed} bytes, {available} available")]
    Truncated {
        field: &'static str,
        needed: u64,
        available: u64,
    },
    #[error("payload has {0} trailing bytes")]
    TrailingBytes(u64),
    #[error("dims {dims:?} describe {expected} elements but {actual} were given")]
    ShapeMismatch {
        dims: Vec<u64>,
        expected: u64,
        actual: u64,
    },
    #[error("too many dimensions ({0}, at most 255)")]
    TooManyDims(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F64(Vec<f64>),
    U32(Vec<u32>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F64(v) => v.len(),
            TensorData::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> u8 {
        match self {
            TensorData::F64(_) => DTYPE_F64,
            TensorData::U32(_) => DTYPE_U32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<u64>,
    data: TensorData,
}

fn element_count(dims: &[u64]) -> Option<u64> {
    dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d))
}

impl Tensor {
    pub fn new(dims: Vec<u64>, data: TensorData) -> Result<Self, DtnsError> {
        if dims.len() > u8::MAX as usize {
            return Err(DtnsError::TooManyDims(dims.len()));
        }
        let expected = element_count(&dims).unwrap_or(u64::MAX);
        if expected != data.len() as u64 {
            return Err(DtnsError::ShapeMismatch {
                dims,
                expected,
                actual: data.len() as u64,
            });
        }
        Ok(Tensor { dims, data })
    }

    pub fn f64(dims: Vec<u64>, values: Vec<f64>) -> Result<Self, DtnsError> {
        Self::new(dims, TensorData::F64(values))
    }

    pub fn u32(dims: Vec<u64>, values: Vec<u32>) -> Result<Self, DtnsError> {
        Self::new(dims, TensorData::U32(values))
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.data {
            TensorData::F64(v) => Some(v),
            TensorData::U32(_) => None,
        }
    }

    pub fn as_u32(&self) -> Option<&[u32]> {
        match &self.data {
            TensorData::U32(v) => Some(v),
            TensorData::F64(_) => None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let elem = match self.data {
            TensorData::F64(_) => 8,
            TensorData::U32(_) => 4,
        };
        let mut out = Vec::with_capacity(8 + 8 * self.dims.len() + elem * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.data.dtype());
        out.push(self.dims.len() as u8);
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        match &self.data {
            TensorData::F64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    /// Validates magic, version, dtype and payload length, in that order.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DtnsError> {
        let avail = bytes.len() as u64;
        let need = |field: &'static str, needed: u64| -> Result<(), DtnsError> {
            if avail < needed {
                Err(DtnsError::Truncated {
                    field,
                    needed,
                    available: avail,
                })
            } else {
                Ok(())
            }
        };
        need("magic", 4)?;
        if bytes[..4] != MAGIC {
            return Err(DtnsError::BadMagic {
                found: bytes[..4].to_vec(),
            });
        }
        need("version", 6)?;
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(DtnsError::BadVersion(version));
        }
        need("dtype", 7)?;
        let dtype = bytes[6];
        let elem: u64 = match dtype {
            DTYPE_F64 => 8,
            DTYPE_U32 => 4,
            other => return Err(DtnsError::UnsupportedDtype(other)),
        };
        need("ndim", 8)?;
        let ndim = bytes[7] as usize;
        let header = 8 + 8 * ndim as u64;
        need("dims", header)?;
        let dims: Vec<u64> = bytes[8..header as usize]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let payload_len = element_count(&dims)
            .and_then(|n| n.checked_mul(elem))
            .and_then(|n| n.checked_add(header))
            .unwrap_or(u64::MAX);
        need("payload", payload_len)?;
        if avail > payload_len {
            return Err(DtnsError::TrailingBytes(avail - payload_len));
        }
        let payload = &bytes[header as usize..];
        let data = match dtype {
            DTYPE_F64 => TensorData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect(),
            ),
            _ => TensorData::U32(
                payload
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                    .collect(),
            ),
        };
        Tensor::new(dims, data)
    }
}

pub fn write_tensor(tensor: &Tensor, path: &Path) -> Result<(), DtnsError> {
    fs::write(path, tensor.to_bytes()).map_err(|source| DtnsError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_tensor(path: &Path) -> Result<Tensor, DtnsError> {
    let bytes = fs::read(path).map_err(|source| DtnsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Tensor::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let t = Tensor::u32(vec![2, 3], vec![1, 2, 3, 4, 5, 6]).unwrap();
        let b = t.to_bytes();
        assert_eq!(&b[..4], b"DTNS");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(b[6], 2);
        assert_eq!(b[7], 2);
        assert_eq!(&b[8..16], &2u64.to_le_bytes());
        assert_eq!(&b[16..24], &3u64.to_le_bytes());
        assert_eq!(b.len(), 24 + 6 * 4);
        assert_eq!(&b[24..28], &1u32.to_le_bytes());
    }

    #[test]
    fn scalar_tensor() {
        let t = Tensor::f64(vec![], vec![2.5]).unwrap();
        assert_eq!(Tensor::from_bytes(&t.to_bytes()).unwrap(), t);
    }

    #[test]
    fn shape_checked() {
        assert!(Tensor::f64(vec![2, 2], vec![0.0; 3]).is_err());
    }
}
