//! `RCDS` dataset container.
//!
//! Layout (little-endian): magic `RCDS`, version `u16`, name length `u16` and
//! UTF-8 name, width `u16`, height `u16`, example count `u32`; then per example
//! the image packed one bit per pixel (LSB first), an object count `u8`, and
//! each object mask packed the same way.

use std::path::Path;

use super::{BinaryImage, LabeledExample};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RCDS";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub examples: Vec<LabeledExample>,
}

pub fn save_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_dataset(dataset)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}

pub fn encode_dataset(dataset: &Dataset) -> Result<Vec<u8>> {
    let n = dataset.width * dataset.height;
    if dataset.width > u16::MAX as usize || dataset.height > u16::MAX as usize {
        return Err(Error::Format("geometry exceeds u16".into()));
    }
    let name = dataset.name.as_bytes();
    let mut out = Vec::with_capacity(16 + name.len() + dataset.examples.len() * n / 2);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name);
    out.extend_from_slice(&(dataset.width as u16).to_le_bytes());
    out.extend_from_slice(&(dataset.height as u16).to_le_bytes());
    out.extend_from_slice(&(dataset.examples.len() as u32).to_le_bytes());
    for (i, ex) in dataset.examples.iter().enumerate() {
        if ex.image.width() != dataset.width || ex.image.height() != dataset.height {
            return Err(Error::Format(format!("example {i} has the wrong geometry")));
        }
        if !ex.image.is_binary() {
            return Err(Error::Format(format!("example {i} is not binary")));
        }
        pack_bits(&ex.image.lit(), &mut out);
        let masks = ex.truth.object_masks();
        if masks.len() > u8::MAX as usize {
            return Err(Error::Format(format!("example {i} has too many objects")));
        }
        out.push(masks.len() as u8);
        for m in masks {
            pack_bits(m, &mut out);
        }
    }
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad magic, expected RCDS".into(),
        });
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Parse {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let name_len = r.u16()? as usize;
    let name_at = r.pos;
    let name = std::str::from_utf8(r.take(name_len)?)
        .map_err(|_| Error::Parse {
            offset: name_at,
            message: "dataset name is not UTF-8".into(),
        })?
        .to_string();
    let width = r.u16()? as usize;
    let height = r.u16()? as usize;
    let count = r.u32()? as usize;
    let n = width * height;
    let mut examples = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let lit = unpack_bits(r.take(n.div_ceil(8))?, n);
        let objects = r.u8()? as usize;
        let mut masks = Vec::with_capacity(objects);
        for _ in 0..objects {
            masks.push(unpack_bits(r.take(n.div_ceil(8))?, n));
        }
        let at = r.pos;
        let ex = if masks.is_empty() {
            LabeledExample {
                image: BinaryImage::from_mask(width, height, &lit)?,
                truth: super::GroundTruth::new(vec![])?,
            }
        } else {
            LabeledExample::from_masks(width, height, masks)?
        };
        if ex.image.lit() != lit && objects > 0 {
            return Err(Error::Parse {
                offset: at,
                message: "image is not the union of its object masks".into(),
            });
        }
        examples.push(ex);
    }
    if r.pos != bytes.len() {
        return Err(Error::Parse {
            offset: r.pos,
            message: "trailing bytes".into(),
        });
    }
    Ok(Dataset {
        name,
        width,
        height,
        examples,
    })
}

fn pack_bits(bits: &[bool], out: &mut Vec<u8>) {
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (j, b) in chunk.iter().enumerate() {
            if *b {
                byte |= 1 << j;
            }
        }
        out.push(byte);
    }
}

fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse {
                offset: self.bytes.len(),
                message: format!("truncated: needed {n} bytes at offset {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{generate, DatasetName, DatasetSpec, Split};
    use super::*;

    fn dataset(name: DatasetName, count: usize) -> Dataset {
        let spec = DatasetSpec::new(name, Split::TestMulti, count, 3);
        let (width, height) = spec.geometry();
        Dataset {
            name: name.to_string(),
            width,
            height,
            examples: generate(&spec).unwrap(),
        }
    }

    #[test]
    fn round_trip_every_synthetic_dataset() {
        for name in [
            DatasetName::SimpleSuperposition,
            DatasetName::Shapes,
            DatasetName::Bars,
            DatasetName::Corners,
        ] {
            let d = dataset(name, 25);
            let bytes = encode_dataset(&d).unwrap();
            assert_eq!(decode_dataset(&bytes).unwrap(), d);
        }
    }

    #[test]
    fn empty_dataset_is_valid() {
        let d = Dataset {
            name: "shapes".into(),
            width: 28,
            height: 28,
            examples: vec![],
        };
        let bytes = encode_dataset(&d).unwrap();
        assert_eq!(decode_dataset(&bytes).unwrap(), d);
    }

    #[test]
    fn corrupted_header_and_truncation() {
        let d = dataset(DatasetName::Bars, 3);
        let bytes = encode_dataset(&d).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_dataset(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode_dataset(&bad).is_err());
        assert!(decode_dataset(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_dataset(&bytes[..6]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_dataset(&long).is_err());
    }

    #[test]
    fn header_layout() {
        let d = dataset(DatasetName::Bars, 2);
        let bytes = encode_dataset(&d).unwrap();
        assert_eq!(&bytes[..4], b"RCDS");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 4);
        assert_eq!(&bytes[8..12], b"bars");
        assert_eq!(u16::from_le_bytes([bytes[12], bytes[13]]), 20);
        assert_eq!(u32::from_le_bytes([bytes[16], bytes[17], bytes[18], bytes[19]]), 2);
    }
}
