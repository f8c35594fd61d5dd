//! Unsigned-byte IDX files (the MNIST container format).

use std::path::Path;

use crate::error::{Error, Result};

const UBYTE: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    /// Number of items along the first axis.
    pub fn len(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Size of one item (product of the trailing dimensions).
    pub fn item_size(&self) -> usize {
        self.dims.iter().skip(1).product()
    }

    pub fn item(&self, i: usize) -> &[u8] {
        let s = self.item_size();
        &self.data[i * s..(i + 1) * s]
    }
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes)
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor> {
    let parse = |offset: usize, message: &str| Error::Parse {
        offset,
        message: message.to_string(),
    };
    if bytes.len() < 4 {
        return Err(parse(bytes.len(), "truncated magic number"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(parse(0, "magic number must start with two zero bytes"));
    }
    if bytes[2] != UBYTE {
        return Err(parse(2, &format!("unsupported element type 0x{:02x}", bytes[2])));
    }
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(parse(3, "zero dimensions"));
    }
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(parse(bytes.len(), "truncated dimension header"));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let total = dims
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d))
        .ok_or_else(|| parse(4, "dimension product overflows"))?;
    let body = &bytes[header..];
    if body.len() < total {
        return Err(parse(bytes.len(), &format!("expected {total} data bytes, found {}", body.len())));
    }
    if body.len() > total {
        return Err(parse(header + total, "trailing bytes after data"));
    }
    Ok(IdxTensor {
        dims,
        data: body.to_vec(),
    })
}

pub fn encode_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = vec![0, 0, UBYTE, tensor.dims.len() as u8];
    for d in &tensor.dims {
        out.extend_from_slice(&(*d as u32).to_be_bytes());
    }
    out.extend_from_slice(&tensor.data);
    out
}

pub fn write_idx(path: impl AsRef<Path>, tensor: &IdxTensor) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_idx(tensor)).map_err(|e| Error::io(path, e))
}

/// `1.0` where `gray / 255 > threshold`, else `0.0`.
pub fn binarize(gray: &[u8], threshold: f64) -> Vec<f64> {
    gray.iter()
        .map(|g| if f64::from(*g) / 255.0 > threshold { 1.0 } else { 0.0 })
        .collect()
}
