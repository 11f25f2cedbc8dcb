//! Binary tensor files: `ATTN0001`, u32 ndim, u64 dims, dtype byte, LE row-major payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ATTN0001";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dtype {
    F32,
    #[default]
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 1,
            Dtype::F64 => 2,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::F64),
            _ => None,
        }
    }
}

/// An n-dimensional array held as f64 whatever its on-disk dtype.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
    dtype: Dtype,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::with_dtype(dims, data, Dtype::F64)
    }

    pub fn with_dtype(dims: Vec<usize>, data: Vec<f64>, dtype: Dtype) -> Result<Self> {
        let n = element_count(&dims).ok_or_else(|| Error::Shape(format!("dims {dims:?} overflow")))?;
        if n != data.len() {
            return Err(Error::Shape(format!("dims {dims:?} hold {n} values, got {}", data.len())));
        }
        Ok(Self { dims, data, dtype })
    }

    pub fn scalar(v: f64) -> Self {
        Self { dims: vec![], data: vec![v], dtype: Dtype::F64 }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn set_dtype(&mut self, dtype: Dtype) {
        self.dtype = dtype;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Serializes with the remembered dtype (f32 output rounds each value).
    pub fn to_bytes(&self) -> Vec<u8> {
        let w = self.dtype.width();
        let mut out = Vec::with_capacity(8 + 4 + 8 * self.dims.len() + 1 + w * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.push(self.dtype.code());
        match self.dtype {
            Dtype::F32 => self.data.iter().for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
            Dtype::F64 => self.data.iter().for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let path = origin.to_path_buf();
        let truncated = |expected: usize| Error::TruncatedPayload { path: path.clone(), expected: expected as u64, found: bytes.len() as u64 };
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(Error::BadMagic { path: path.clone() });
        }
        let mut pos = 8;
        if bytes.len() < pos + 4 {
            return Err(truncated(pos + 4));
        }
        let ndim = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        let header = pos.checked_add(ndim.checked_mul(8).ok_or_else(|| truncated(usize::MAX))?)
            .and_then(|p| p.checked_add(1))
            .ok_or_else(|| truncated(usize::MAX))?;
        if bytes.len() < header {
            return Err(truncated(header));
        }
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let d = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
            dims.push(usize::try_from(d).map_err(|_| Error::Shape(format!("dimension {d} too large")))?);
            pos += 8;
        }
        let code = bytes[pos];
        pos += 1;
        let dtype = Dtype::from_code(code).ok_or(Error::UnknownDtype { path: path.clone(), code })?;
        let n = element_count(&dims).ok_or_else(|| Error::Shape(format!("dims {dims:?} overflow")))?;
        let expected = n.checked_mul(dtype.width()).and_then(|b| b.checked_add(pos)).ok_or_else(|| truncated(usize::MAX))?;
        if bytes.len() < expected {
            return Err(truncated(expected));
        }
        if bytes.len() > expected {
            return Err(Error::Shape(format!(
                "{}: {} trailing bytes after the payload",
                path.display(),
                bytes.len() - expected
            )));
        }
        let payload = &bytes[pos..expected];
        let data = match dtype {
            Dtype::F32 => payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
            Dtype::F64 => payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
        };
        Ok(Self { dims, data, dtype })
    }
}

fn element_count(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::from_bytes(&bytes, path)
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tensor.to_bytes()).map_err(|e| Error::io(path, e))
}
