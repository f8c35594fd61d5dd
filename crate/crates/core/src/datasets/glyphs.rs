//! Fixed binary stencils and the simple-superposition pattern bank.

use crate::error::{Error, Result};

/// A small binary stencil, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Glyph {
    pub fn from_art(rows: &[&str]) -> Glyph {
        let height = rows.len();
        let width = rows[0].len();
        let cells = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), width, "ragged glyph");
                r.bytes().map(|b| b == b'X')
            })
            .collect();
        Glyph {
            width,
            height,
            cells,
        }
    }

    pub fn flip_vertical(&self) -> Glyph {
        let mut cells = Vec::with_capacity(self.cells.len());
        for r in (0..self.height).rev() {
            cells.extend_from_slice(&self.cells[r * self.width..(r + 1) * self.width]);
        }
        Glyph { cells, ..*self }
    }

    pub fn flip_horizontal(&self) -> Glyph {
        let mut cells = Vec::with_capacity(self.cells.len());
        for r in 0..self.height {
            cells.extend(self.cells[r * self.width..(r + 1) * self.width].iter().rev());
        }
        Glyph { cells, ..*self }
    }

    /// Stamps the glyph with its top-left corner at `(x, y)`; must fit inside the canvas.
    pub fn stamp(&self, mask: &mut [bool], canvas_width: usize, x: usize, y: usize) {
        for r in 0..self.height {
            for c in 0..self.width {
                if self.cells[r * self.width + c] {
                    mask[(y + r) * canvas_width + x + c] = true;
                }
            }
        }
    }
}

const SQUARE: [&str; 11] = [
    "XXXXXXXXXXX",
    "X.........X",
    "X.........X",
    "X.........X",
    "X.........X",
    "X.........X",
    "X.........X",
    "X.........X",
    "X.........X",
    "X.........X",
    "XXXXXXXXXXX",
];

const TRIANGLE_UP: [&str; 6] = [
    ".....X.....",
    "....X.X....",
    "...X...X...",
    "..X.....X..",
    ".X.......X.",
    "XXXXXXXXXXX",
];

const CORNER: [&str; 5] = ["XXXXX", "X....", "X....", "X....", "X...."];

/// The three shape classes, in the order □, △, ▽.
pub fn shape_glyphs() -> [Glyph; 3] {
    let up = Glyph::from_art(&TRIANGLE_UP);
    let down = up.flip_vertical();
    [Glyph::from_art(&SQUARE), up, down]
}

/// Corner orientation: which corner of a square the L-shape sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerOrientation {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl CornerOrientation {
    pub const ALL: [CornerOrientation; 4] = [
        CornerOrientation::TopLeft,
        CornerOrientation::TopRight,
        CornerOrientation::BottomLeft,
        CornerOrientation::BottomRight,
    ];
}

pub fn corner_glyph(orientation: CornerOrientation) -> Glyph {
    let base = Glyph::from_art(&CORNER);
    match orientation {
        CornerOrientation::TopLeft => base,
        CornerOrientation::TopRight => base.flip_horizontal(),
        CornerOrientation::BottomLeft => base.flip_vertical(),
        CornerOrientation::BottomRight => base.flip_horizontal().flip_vertical(),
    }
}

pub const DEFAULT_PATTERN_BANK: &str = include_str!("../../data/superposition_patterns.txt");

/// Equal-sized binary patterns for the simple-superposition dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternBank {
    pub width: usize,
    pub height: usize,
    pub patterns: Vec<Vec<bool>>,
}

impl PatternBank {
    /// Parses `X`/`.` art; blank lines separate patterns, `#` starts a comment line.
    pub fn parse(text: &str) -> Result<PatternBank> {
        let mut blocks: Vec<Vec<&str>> = vec![];
        let mut current: Vec<&str> = vec![];
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            if line.is_empty() {
                if !current.is_empty() {
                    blocks.push(std::mem::take(&mut current));
                }
                continue;
            }
            if let Some(bad) = line.chars().find(|c| *c != 'X' && *c != '.') {
                return Err(Error::Format(format!("pattern bank: unexpected character {bad:?}")));
            }
            current.push(line);
        }
        if !current.is_empty() {
            blocks.push(current);
        }
        let first = blocks
            .first()
            .ok_or_else(|| Error::Format("pattern bank is empty".into()))?;
        let (height, width) = (first.len(), first[0].len());
        if blocks.len() < 2 {
            return Err(Error::Format("pattern bank needs at least two patterns".into()));
        }
        let mut patterns = Vec::with_capacity(blocks.len());
        for (i, block) in blocks.iter().enumerate() {
            if block.len() != height || block.iter().any(|r| r.len() != width) {
                return Err(Error::Format(format!(
                    "pattern {i} is not {width}x{height}"
                )));
            }
            let g = Glyph::from_art(block);
            if !g.cells.iter().any(|c| *c) {
                return Err(Error::Format(format!("pattern {i} is empty")));
            }
            patterns.push(g.cells);
        }
        Ok(PatternBank {
            width,
            height,
            patterns,
        })
    }

    pub fn default_bank() -> PatternBank {
        Self::parse(DEFAULT_PATTERN_BANK).expect("bundled pattern bank is valid")
    }
}
