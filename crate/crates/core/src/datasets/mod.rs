//! Synthetic multi-object binary image datasets with per-object ground truth.
//!
//! Every generator is a pure function of its [`DatasetSpec`]. A multi-object
//! layout is drawn first; single-object splits keep one object of that layout
//! chosen uniformly, so both share the same placement distribution.

mod container;
pub mod glyphs;
mod idx;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use container::{decode_dataset, encode_dataset, load_dataset, save_dataset, Dataset};
pub use idx::{binarize, encode_idx, load_idx, parse_idx, write_idx, IdxTensor};

use crate::error::{Error, Result};
use crate::numerics::Rng;
use glyphs::{corner_glyph, shape_glyphs, CornerOrientation, Glyph, PatternBank};

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch {
                op: "BinaryImage::new",
                left: (height, width),
                right: (pixels.len(), 1),
            });
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("pixel values must lie in [0, 1]".into()));
        }
        Ok(BinaryImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Result<Self> {
        Self::new(
            width,
            height,
            mask.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn is_binary(&self) -> bool {
        self.pixels.iter().all(|p| *p == 0.0 || *p == 1.0)
    }

    pub fn lit(&self) -> Vec<bool> {
        self.pixels.iter().map(|p| *p > 0.0).collect()
    }
}

/// Object masks and the derived evaluation mask (pixels owned by exactly one object).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    object_masks: Vec<Vec<bool>>,
    eval_mask: Vec<bool>,
}

impl GroundTruth {
    pub fn new(object_masks: Vec<Vec<bool>>) -> Result<Self> {
        let n = object_masks.first().map_or(0, Vec::len);
        if object_masks.iter().any(|m| m.len() != n) {
            return Err(Error::InvalidArgument("object masks differ in length".into()));
        }
        let eval_mask = (0..n)
            .map(|i| object_masks.iter().filter(|m| m[i]).count() == 1)
            .collect();
        Ok(GroundTruth {
            object_masks,
            eval_mask,
        })
    }

    pub fn object_masks(&self) -> &[Vec<bool>] {
        &self.object_masks
    }

    pub fn eval_mask(&self) -> &[bool] {
        &self.eval_mask
    }

    pub fn object_count(&self) -> usize {
        self.object_masks.len()
    }

    /// Owning object per pixel; meaningful only where the evaluation mask is set.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.eval_mask.len())
            .map(|i| self.object_masks.iter().position(|m| m[i]).unwrap_or(0))
            .collect()
    }

    pub fn union(&self) -> Vec<bool> {
        (0..self.eval_mask.len())
            .map(|i| self.object_masks.iter().any(|m| m[i]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub image: BinaryImage,
    pub truth: GroundTruth,
}

impl LabeledExample {
    /// Composes the image as the pixelwise OR of the object masks.
    pub fn from_masks(width: usize, height: usize, masks: Vec<Vec<bool>>) -> Result<Self> {
        if masks.iter().any(|m| m.len() != width * height) {
            return Err(Error::InvalidArgument("mask size does not match geometry".into()));
        }
        let truth = GroundTruth::new(masks)?;
        let image = BinaryImage::from_mask(width, height, &truth.union())?;
        Ok(LabeledExample { image, truth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetName {
    SimpleSuperposition,
    Shapes,
    Bars,
    Corners,
    MnistShape,
    MultiMnist,
}

impl DatasetName {
    pub const ALL: [DatasetName; 6] = [
        DatasetName::SimpleSuperposition,
        DatasetName::Shapes,
        DatasetName::Bars,
        DatasetName::Corners,
        DatasetName::MnistShape,
        DatasetName::MultiMnist,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::SimpleSuperposition => "simple_superposition",
            DatasetName::Shapes => "shapes",
            DatasetName::Bars => "bars",
            DatasetName::Corners => "corners",
            DatasetName::MnistShape => "mnist_shape",
            DatasetName::MultiMnist => "multi_mnist",
        }
    }

    /// `(width, height)` of the canvas.
    pub fn geometry(self) -> (usize, usize) {
        match self {
            DatasetName::SimpleSuperposition => (10, 10),
            DatasetName::Bars => (20, 20),
            DatasetName::Shapes | DatasetName::Corners | DatasetName::MnistShape => (28, 28),
            DatasetName::MultiMnist => (48, 48),
        }
    }

    /// Number of objects in a multi-object image (bars: number of candidate bars).
    pub fn object_count(self) -> usize {
        match self {
            DatasetName::SimpleSuperposition | DatasetName::MnistShape => 2,
            DatasetName::Shapes | DatasetName::MultiMnist => 3,
            DatasetName::Corners => 5,
            DatasetName::Bars => 12,
        }
    }

    pub fn needs_mnist(self) -> bool {
        matches!(self, DatasetName::MnistShape | DatasetName::MultiMnist)
    }

    fn index(self) -> u64 {
        DatasetName::ALL.iter().position(|n| *n == self).unwrap() as u64
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    TrainSingle,
    TrainMulti,
    Validation,
    TestMulti,
}

impl Split {
    pub const ALL: [Split; 4] = [
        Split::TrainSingle,
        Split::TrainMulti,
        Split::Validation,
        Split::TestMulti,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::TrainSingle => "train_single",
            Split::TrainMulti => "train_multi",
            Split::Validation => "validation",
            Split::TestMulti => "test_multi",
        }
    }

    /// Validation images hold a single object, like the training split they monitor.
    pub fn is_multi(self) -> bool {
        matches!(self, Split::TrainMulti | Split::TestMulti)
    }

    fn index(self) -> u64 {
        Split::ALL.iter().position(|s| *s == self).unwrap() as u64
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split `{s}`")))
    }
}

/// Knobs for the rules the benchmark descriptions leave open.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    /// Per-candidate inclusion probability for multi-object bars images.
    pub bar_probability: f64,
    pub pattern_bank: PatternBank,
    pub mnist_dir: Option<PathBuf>,
    pub mnist_threshold: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            bar_probability: 0.25,
            pattern_bank: PatternBank::default_bank(),
            mnist_dir: None,
            mnist_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub split: Split,
    pub count: usize,
    pub seed: u64,
    pub options: GeneratorOptions,
}

impl DatasetSpec {
    pub fn new(name: DatasetName, split: Split, count: usize, seed: u64) -> Self {
        DatasetSpec {
            name,
            split,
            count,
            seed,
            options: GeneratorOptions::default(),
        }
    }

    pub fn geometry(&self) -> (usize, usize) {
        if self.name == DatasetName::SimpleSuperposition {
            let bank = &self.options.pattern_bank;
            (bank.width, bank.height)
        } else {
            self.name.geometry()
        }
    }
}

const DATASET_STREAM_BASE: u64 = 0x100;

pub const BAR_POSITIONS: [usize; 6] = [2, 5, 8, 11, 14, 17];

pub fn generate(spec: &DatasetSpec) -> Result<Vec<LabeledExample>> {
    if spec.count == 0 {
        return Err(Error::InvalidArgument("dataset count must be positive".into()));
    }
    let (width, height) = spec.geometry();
    let mut rng = Rng::with_stream_id(
        spec.seed,
        DATASET_STREAM_BASE + spec.name.index() * 8 + spec.split.index(),
    );
    let mut source = match spec.name {
        DatasetName::SimpleSuperposition => Source::Patterns(&spec.options.pattern_bank),
        DatasetName::Shapes => Source::Shapes(shape_glyphs()),
        DatasetName::Bars => Source::Bars(spec.options.bar_probability),
        DatasetName::Corners => Source::Corners,
        DatasetName::MnistShape | DatasetName::MultiMnist => {
            Source::Mnist(MnistDigits::load(&spec.options, spec.split)?, shape_glyphs())
        }
    };
    if let Source::Bars(p) = source {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("bar probability {p} not in (0, 1]")));
        }
    }
    let canvas = Canvas { width, height };
    (0..spec.count)
        .map(|_| {
            let mut masks = source.layout(spec.name, canvas, &mut rng);
            if !spec.split.is_multi() {
                let keep = rng.below(masks.len());
                masks = vec![masks.swap_remove(keep)];
            }
            LabeledExample::from_masks(width, height, masks)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Canvas {
    width: usize,
    height: usize,
}

impl Canvas {
    fn blank(self) -> Vec<bool> {
        vec![false; self.width * self.height]
    }

    /// Stamps `glyph` at a uniformly random position fully inside the canvas.
    fn place(self, glyph: &Glyph, rng: &mut Rng) -> Vec<bool> {
        let x = rng.range_inclusive(0, self.width - glyph.width);
        let y = rng.range_inclusive(0, self.height - glyph.height);
        let mut mask = self.blank();
        glyph.stamp(&mut mask, self.width, x, y);
        mask
    }
}

enum Source<'a> {
    Patterns(&'a PatternBank),
    Shapes([Glyph; 3]),
    Bars(f64),
    Corners,
    Mnist(MnistDigits, [Glyph; 3]),
}

impl Source<'_> {
    fn layout(&mut self, name: DatasetName, canvas: Canvas, rng: &mut Rng) -> Vec<Vec<bool>> {
        match self {
            Source::Patterns(bank) => {
                let n = bank.patterns.len();
                let a = rng.below(n);
                let b = (a + 1 + rng.below(n - 1)) % n;
                vec![bank.patterns[a].clone(), bank.patterns[b].clone()]
            }
            Source::Shapes(glyphs) => glyphs.iter().map(|g| canvas.place(g, rng)).collect(),
            Source::Bars(p) => bars_layout(canvas, *p, rng),
            Source::Corners => corners_layout(canvas, rng),
            Source::Mnist(digits, glyphs) => match name {
                DatasetName::MnistShape => {
                    let digit = digits.place(canvas, rng);
                    let shape = canvas.place(&glyphs[rng.below(3)], rng);
                    vec![digit, shape]
                }
                _ => (0..3).map(|_| digits.place(canvas, rng)).collect(),
            },
        }
    }
}

fn bars_layout(canvas: Canvas, p: f64, rng: &mut Rng) -> Vec<Vec<bool>> {
    loop {
        let mut masks = vec![];
        for horizontal in [true, false] {
            for pos in BAR_POSITIONS {
                if !rng.bernoulli(p) {
                    continue;
                }
                let mut mask = canvas.blank();
                if horizontal {
                    mask[pos * canvas.width..(pos + 1) * canvas.width].fill(true);
                } else {
                    for r in 0..canvas.height {
                        mask[r * canvas.width + pos] = true;
                    }
                }
                masks.push(mask);
            }
        }
        if !masks.is_empty() {
            return masks;
        }
    }
}

pub const CORNER_SQUARE_SIDES: (usize, usize) = (12, 16);

/// One square made of four aligned corners, plus four free corners.
fn corners_layout(canvas: Canvas, rng: &mut Rng) -> Vec<Vec<bool>> {
    let side = rng.range_inclusive(CORNER_SQUARE_SIDES.0, CORNER_SQUARE_SIDES.1);
    let x0 = rng.range_inclusive(0, canvas.width - side);
    let y0 = rng.range_inclusive(0, canvas.height - side);
    let far = side - 5;
    let mut square = canvas.blank();
    for (o, dx, dy) in [
        (CornerOrientation::TopLeft, 0, 0),
        (CornerOrientation::TopRight, far, 0),
        (CornerOrientation::BottomLeft, 0, far),
        (CornerOrientation::BottomRight, far, far),
    ] {
        corner_glyph(o).stamp(&mut square, canvas.width, x0 + dx, y0 + dy);
    }
    let mut masks = vec![square];
    for _ in 0..4 {
        let o = CornerOrientation::ALL[rng.below(4)];
        masks.push(canvas.place(&corner_glyph(o), rng));
    }
    masks
}

pub const MNIST_TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
/// Training images past this index form the validation pool.
pub const MNIST_VALIDATION_START: usize = 50_000;

struct MnistDigits {
    glyphs: Vec<Glyph>,
}

impl MnistDigits {
    fn load(options: &GeneratorOptions, split: Split) -> Result<Self> {
        let dir = options
            .mnist_dir
            .clone()
            .or_else(|| std::env::var_os("RC_MNIST_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("mnist"));
        let file = if split == Split::TestMulti {
            MNIST_TEST_IMAGES
        } else {
            MNIST_TRAIN_IMAGES
        };
        let path = dir.join(file);
        if !path.exists() {
            return Err(Error::MissingMnist(path));
        }
        let tensor = load_idx(&path)?;
        Self::from_tensor(&tensor, split, options.mnist_threshold, &path)
    }

    fn from_tensor(tensor: &IdxTensor, split: Split, threshold: f64, path: &Path) -> Result<Self> {
        if tensor.dims.len() != 3 {
            return Err(Error::Format(format!(
                "{}: expected a 3-d image tensor, got {:?}",
                path.display(),
                tensor.dims
            )));
        }
        let (h, w) = (tensor.dims[1], tensor.dims[2]);
        let range = match split {
            Split::TestMulti => 0..tensor.len(),
            Split::Validation if tensor.len() > MNIST_VALIDATION_START => {
                MNIST_VALIDATION_START..tensor.len()
            }
            _ => 0..tensor.len().min(MNIST_VALIDATION_START),
        };
        let glyphs: Vec<Glyph> = range
            .map(|i| Glyph {
                width: w,
                height: h,
                cells: binarize(tensor.item(i), threshold).iter().map(|v| *v > 0.0).collect(),
            })
            .filter(|g| g.cells.iter().any(|c| *c))
            .collect();
        if glyphs.is_empty() {
            return Err(Error::Format(format!("{}: no usable digits", path.display())));
        }
        Ok(MnistDigits { glyphs })
    }

    fn place(&self, canvas: Canvas, rng: &mut Rng) -> Vec<bool> {
        let g = &self.glyphs[rng.below(self.glyphs.len())];
        canvas.place(g, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(name: DatasetName, split: Split, count: usize, seed: u64) -> Vec<LabeledExample> {
        generate(&DatasetSpec::new(name, split, count, seed)).unwrap()
    }

    const SYNTHETIC: [DatasetName; 4] = [
        DatasetName::SimpleSuperposition,
        DatasetName::Shapes,
        DatasetName::Bars,
        DatasetName::Corners,
    ];

    #[test]
    fn image_is_or_of_masks_and_eval_mask_rules() {
        for name in SYNTHETIC {
            for split in Split::ALL {
                for ex in gen(name, split, 50, 9) {
                    assert!(ex.image.is_binary());
                    let union = ex.truth.union();
                    assert_eq!(ex.image.lit(), union);
                    for (i, e) in ex.truth.eval_mask().iter().enumerate() {
                        let owners = ex.truth.object_masks().iter().filter(|m| m[i]).count();
                        assert_eq!(*e, owners == 1);
                    }
                    for m in ex.truth.object_masks() {
                        assert!(m.iter().any(|b| *b), "{name} has an empty object");
                    }
                    if !split.is_multi() {
                        assert_eq!(ex.truth.object_count(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn multi_object_counts() {
        for ex in gen(DatasetName::Shapes, Split::TestMulti, 20, 1) {
            assert_eq!(ex.truth.object_count(), 3);
        }
        for ex in gen(DatasetName::SimpleSuperposition, Split::TestMulti, 20, 1) {
            assert_eq!(ex.truth.object_count(), 2);
            let m = ex.truth.object_masks();
            assert_ne!(m[0], m[1]);
        }
        for ex in gen(DatasetName::Bars, Split::TestMulti, 200, 1) {
            assert!((1..=12).contains(&ex.truth.object_count()));
        }
    }

    #[test]
    fn corners_have_one_square_and_four_free_corners() {
        for ex in gen(DatasetName::Corners, Split::TestMulti, 50, 4) {
            let masks = ex.truth.object_masks();
            assert_eq!(masks.len(), 5);
            assert_eq!(masks[0].iter().filter(|b| **b).count(), 36);
            for m in &masks[1..] {
                assert_eq!(m.iter().filter(|b| **b).count(), 9);
            }
        }
    }

    #[test]
    fn geometry_per_dataset() {
        assert_eq!(DatasetName::MultiMnist.geometry(), (48, 48));
        assert_eq!(gen(DatasetName::Bars, Split::TestMulti, 1, 0)[0].image.len(), 400);
        assert_eq!(gen(DatasetName::Shapes, Split::TestMulti, 1, 0)[0].image.width(), 28);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen(DatasetName::Shapes, Split::TestMulti, 1000, 77);
        let b = gen(DatasetName::Shapes, Split::TestMulti, 1000, 77);
        assert_eq!(a, b);
        let c = gen(DatasetName::Shapes, Split::TestMulti, 1000, 78);
        assert_ne!(a, c);
    }

    #[test]
    fn splits_use_distinct_streams() {
        let a = gen(DatasetName::Bars, Split::TrainSingle, 20, 5);
        let b = gen(DatasetName::Bars, Split::Validation, 20, 5);
        assert_ne!(a, b);
    }

    #[test]
    fn single_bars_are_uniform_over_candidates() {
        let mut seen = std::collections::HashSet::new();
        for ex in gen(DatasetName::Bars, Split::TrainSingle, 500, 2) {
            assert_eq!(ex.truth.object_masks()[0].iter().filter(|b| **b).count(), 20);
            seen.insert(ex.truth.object_masks()[0].clone());
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn unknown_name_and_zero_count() {
        assert!(matches!(
            "circles".parse::<DatasetName>(),
            Err(Error::UnknownDataset(_))
        ));
        assert!(generate(&DatasetSpec::new(DatasetName::Bars, Split::TestMulti, 0, 0)).is_err());
    }

    #[test]
    fn missing_mnist_names_the_file() {
        let mut spec = DatasetSpec::new(DatasetName::MultiMnist, Split::TestMulti, 3, 0);
        spec.options.mnist_dir = Some(PathBuf::from("/nonexistent/mnist"));
        match generate(&spec) {
            Err(Error::MissingMnist(p)) => assert!(p.ends_with(MNIST_TEST_IMAGES)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mnist_datasets_from_synthetic_idx() {
        let dir = tempfile::tempdir().unwrap();
        let mut data = vec![0u8; 4 * 28 * 28];
        for (d, item) in data.chunks_mut(784).enumerate() {
            for r in 4..24 {
                item[r * 28 + 10 + d] = 200;
            }
        }
        let t = IdxTensor {
            dims: vec![4, 28, 28],
            data,
        };
        write_idx(dir.path().join(MNIST_TRAIN_IMAGES), &t).unwrap();
        write_idx(dir.path().join(MNIST_TEST_IMAGES), &t).unwrap();
        for (name, objects) in [(DatasetName::MultiMnist, 3), (DatasetName::MnistShape, 2)] {
            let mut spec = DatasetSpec::new(name, Split::TestMulti, 5, 1);
            spec.options.mnist_dir = Some(dir.path().to_path_buf());
            let examples = generate(&spec).unwrap();
            for ex in &examples {
                assert_eq!(ex.truth.object_count(), objects);
                assert_eq!((ex.image.width(), ex.image.height()), name.geometry());
                assert_eq!(ex.image.lit(), ex.truth.union());
            }
            spec.split = Split::TrainSingle;
            for ex in generate(&spec).unwrap() {
                assert_eq!(ex.truth.object_count(), 1);
            }
        }
    }
}
