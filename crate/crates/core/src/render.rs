//! Binary PPM (P6) renders of cluster assignments and PGM (P5/P2) input images.

use std::path::Path;

use crate::datasets::BinaryImage;
use crate::error::{Error, Result};
use crate::rc::{argmax, Assignment};

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    pub colors: Vec<Rgb>,
    pub background: Rgb,
}

impl Default for Palette {
    /// Twelve well separated colours on black.
    fn default() -> Self {
        Palette {
            colors: vec![
                [230, 25, 75],
                [60, 180, 75],
                [255, 225, 25],
                [0, 130, 200],
                [245, 130, 48],
                [145, 30, 180],
                [70, 240, 240],
                [240, 50, 230],
                [210, 245, 60],
                [250, 190, 212],
                [0, 128, 128],
                [170, 110, 40],
            ],
            background: [0, 0, 0],
        }
    }
}

impl Palette {
    pub fn new(colors: Vec<Rgb>, background: Rgb) -> Result<Self> {
        for (i, c) in colors.iter().enumerate() {
            if *c == background || colors[..i].contains(c) {
                return Err(Error::InvalidArgument("palette colours must be pairwise distinct".into()));
            }
        }
        Ok(Palette { colors, background })
    }
}

fn blend(color: Rgb, background: Rgb, w: f64) -> Rgb {
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = ((1.0 - w) * color[c] as f64 + w * background[c] as f64).round() as u8;
    }
    out
}

/// P6 bytes: each pixel takes the colour of its most probable cluster, blended
/// toward the background by `1 - max_k γ_ik`. Pixels that are off in `lit`
/// are drawn as background.
pub fn assignment_ppm(
    gamma: &Assignment,
    width: usize,
    height: usize,
    palette: &Palette,
    lit: Option<&[bool]>,
) -> Result<Vec<u8>> {
    if width * height != gamma.pixels() || lit.is_some_and(|l| l.len() != gamma.pixels()) {
        return Err(Error::ShapeMismatch {
            op: "render",
            left: (gamma.pixels(), gamma.clusters()),
            right: (width, height),
        });
    }
    if palette.colors.len() < gamma.clusters() {
        return Err(Error::InvalidArgument(format!(
            "palette has {} colours for K = {}",
            palette.colors.len(),
            gamma.clusters()
        )));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for i in 0..gamma.pixels() {
        let rgb = if lit.is_some_and(|l| !l[i]) {
            palette.background
        } else {
            let row = gamma.row(i);
            let k = argmax(row);
            blend(palette.colors[k], palette.background, 1.0 - row[k])
        };
        out.extend_from_slice(&rgb);
    }
    Ok(out)
}

pub fn render_assignment(
    gamma: &Assignment,
    width: usize,
    height: usize,
    palette: &Palette,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path, &assignment_ppm(gamma, width, height, palette, None)?)
}

/// P5 bytes with lit pixels white.
pub fn image_pgm(image: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.pixels().iter().map(|p| (p * 255.0).round() as u8));
    out
}

pub fn write_pgm(image: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    write_file(path, &image_pgm(image))
}

fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parsed netpbm header and raw samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netpbm {
    pub magic: String,
    pub width: usize,
    pub height: usize,
    pub maxval: usize,
    pub samples: Vec<u16>,
}

/// Reads P2, P3, P5 or P6 files with `maxval < 256`.
pub fn parse_netpbm(bytes: &[u8]) -> Result<Netpbm> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse {
                offset: pos,
                message: "truncated netpbm header".into(),
            });
        }
        fields.push((start, String::from_utf8_lossy(&bytes[start..pos]).into_owned()));
    }
    let magic = fields[0].1.clone();
    let channels = match magic.as_str() {
        "P2" | "P5" => 1,
        "P3" | "P6" => 3,
        _ => {
            return Err(Error::Parse {
                offset: 0,
                message: format!("unsupported netpbm magic {magic:?}"),
            })
        }
    };
    let num = |i: usize| -> Result<usize> {
        fields[i].1.parse().map_err(|_| Error::Parse {
            offset: fields[i].0,
            message: format!("expected a number, found {:?}", fields[i].1),
        })
    };
    let (width, height, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse {
            offset: fields[3].0,
            message: format!("unsupported maxval {maxval}"),
        });
    }
    let count = width * height * channels;
    let samples: Vec<u16> = if magic == "P5" || magic == "P6" {
        // exactly one whitespace byte separates header and raster
        let raster = &bytes[(pos + 1).min(bytes.len())..];
        if raster.len() < count {
            return Err(Error::Parse {
                offset: bytes.len(),
                message: format!("raster truncated: {} of {count} bytes", raster.len()),
            });
        }
        raster[..count].iter().map(|b| *b as u16).collect()
    } else {
        let text = String::from_utf8_lossy(&bytes[pos..]);
        let s: Vec<u16> = text
            .split_ascii_whitespace()
            .take(count)
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                offset: pos,
                message: "bad ASCII sample".into(),
            })?;
        if s.len() < count {
            return Err(Error::Parse {
                offset: bytes.len(),
                message: "raster truncated".into(),
            });
        }
        s
    };
    Ok(Netpbm {
        magic,
        width,
        height,
        maxval,
        samples,
    })
}

/// Loads a grey image and binarises it: a pixel is on above half of `maxval`.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    pgm_to_image(&parse_netpbm(&bytes)?)
}

pub fn pgm_to_image(pbm: &Netpbm) -> Result<BinaryImage> {
    if pbm.magic != "P5" && pbm.magic != "P2" {
        return Err(Error::Format(format!("expected a grey image, found {}", pbm.magic)));
    }
    let mask: Vec<bool> = pbm.samples.iter().map(|s| *s as usize * 2 > pbm.maxval).collect();
    BinaryImage::from_mask(pbm.width, pbm.height, &mask)
}
