//! Single-hidden-layer denoising autoencoder with sigmoid outputs.
//!
//! The encoder is `θ = act(W1·x + b1)`, the decoder `μ = sigmoid(W2·θ + b2)`.
//! Predictions leaving [`DaeModel::decode`] are clipped to `[EPSILON, 1 - EPSILON]`
//! so every downstream logarithm stays finite.

mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use train::{train, TrainConfig, TrainReport};

use crate::datasets::BinaryImage;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Stream};

/// Clipping margin applied to predictions inside every likelihood.
pub const EPSILON: f64 = 1e-6;

#[inline]
pub fn clip(mu: f64) -> f64 {
    mu.clamp(EPSILON, 1.0 - EPSILON)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Sigmoid, Activation::Tanh];

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and activation `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Activation::ALL.into_iter().find(|a| a.tag() == tag)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" | "rel" | "ReL" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::InvalidArgument(format!("unknown activation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaeModel {
    w1: Matrix,
    b1: Vec<f64>,
    w2: Matrix,
    b2: Vec<f64>,
    activation: Activation,
}

impl DaeModel {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights and zero biases.
    pub fn new_random(input_size: usize, hidden_size: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = Rng::for_stream(seed, Stream::WeightInit);
        let limit = (6.0 / (input_size + hidden_size) as f64).sqrt();
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len).map(|_| (2.0 * rng.next_f64() - 1.0) * limit).collect()
        };
        let w1 = draw(hidden_size * input_size);
        let w2 = draw(input_size * hidden_size);
        DaeModel {
            w1: Matrix::from_vec(hidden_size, input_size, w1).unwrap(),
            b1: vec![0.0; hidden_size],
            w2: Matrix::from_vec(input_size, hidden_size, w2).unwrap(),
            b2: vec![0.0; input_size],
            activation,
        }
    }

    pub fn zeros(input_size: usize, hidden_size: usize, activation: Activation) -> Self {
        DaeModel {
            w1: Matrix::zeros(hidden_size, input_size),
            b1: vec![0.0; hidden_size],
            w2: Matrix::zeros(input_size, hidden_size),
            b2: vec![0.0; input_size],
            activation,
        }
    }

    pub fn from_parts(w1: Matrix, b1: Vec<f64>, w2: Matrix, b2: Vec<f64>, activation: Activation) -> Result<Self> {
        let (h, n) = w1.shape();
        if w2.shape() != (n, h) || b1.len() != h || b2.len() != n {
            return Err(Error::ShapeMismatch {
                op: "DaeModel::from_parts",
                left: w1.shape(),
                right: w2.shape(),
            });
        }
        if !(w1.is_finite() && w2.is_finite() && b1.iter().chain(&b2).all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(DaeModel {
            w1,
            b1,
            w2,
            b2,
            activation,
        })
    }

    pub fn input_size(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w1.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Parameter blocks in file order: `W1, b1, W2, b2`.
    pub fn parameters(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), &self.b1, self.w2.as_slice(), &self.b2]
    }

    pub fn parameters_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn check_input_size(&self, n: usize) -> Result<()> {
        if n != self.input_size() {
            return Err(Error::ShapeMismatch {
                op: "model input",
                left: (self.input_size(), 1),
                right: (n, 1),
            });
        }
        Ok(())
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input_size(x.len())?;
        let batch = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.encode_batch(&batch)?.into_vec())
    }

    pub fn decode(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.hidden_size() {
            return Err(Error::ShapeMismatch {
                op: "decode",
                left: (self.hidden_size(), 1),
                right: (theta.len(), 1),
            });
        }
        let batch = Matrix::from_vec(1, theta.len(), theta.to_vec())?;
        Ok(self.decode_batch(&batch)?.into_vec())
    }

    /// Rows of `x` are inputs; returns one hidden vector per row.
    pub fn encode_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input_size(x.cols())?;
        let mut z = x.matmul_bt(&self.w1)?;
        z.add_row_vector(&self.b1);
        let act = self.activation;
        z.map_inplace(|v| act.apply(v));
        Ok(z)
    }

    /// Rows of `theta` are hidden vectors; returns clipped predictions.
    pub fn decode_batch(&self, theta: &Matrix) -> Result<Matrix> {
        let mut z = theta.matmul_bt(&self.w2)?;
        z.add_row_vector(&self.b2);
        z.map_inplace(|v| clip(sigmoid(v)));
        Ok(z)
    }

    pub fn reconstruct_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.decode_batch(&self.encode_batch(x)?)
    }

    /// Returns the summed per-example loss and gradients of the batch-mean loss.
    pub fn loss_and_gradients(&self, corrupted: &Matrix, target: &Matrix) -> Result<(f64, Gradients)> {
        if corrupted.shape() != target.shape() {
            return Err(Error::ShapeMismatch {
                op: "backward",
                left: corrupted.shape(),
                right: target.shape(),
            });
        }
        self.check_input_size(corrupted.cols())?;
        let batch = corrupted.rows().max(1) as f64;

        let mut pre_hidden = corrupted.matmul_bt(&self.w1)?;
        pre_hidden.add_row_vector(&self.b1);
        let mut hidden = pre_hidden.clone();
        let act = self.activation;
        hidden.map_inplace(|v| act.apply(v));

        let mut out = hidden.matmul_bt(&self.w2)?;
        out.add_row_vector(&self.b2);
        out.map_inplace(sigmoid);

        let mut loss = 0.0;
        // d(mean loss)/d(pre-output) = (μ - x) / B for sigmoid + cross-entropy
        let mut d_out = out;
        for (mu, t) in d_out.as_mut_slice().iter_mut().zip(target.as_slice()) {
            loss += bce_term(clip(*mu), *t);
            *mu = (*mu - t) / batch;
        }

        let w2 = d_out.matmul_at(&hidden)?;
        let b2 = d_out.column_sums();
        let mut d_hidden = d_out.matmul(&self.w2)?;
        for ((d, z), a) in d_hidden
            .as_mut_slice()
            .iter_mut()
            .zip(pre_hidden.as_slice())
            .zip(hidden.as_slice())
        {
            *d *= act.derivative(*z, *a);
        }
        let w1 = d_hidden.matmul_at(corrupted)?;
        let b1 = d_hidden.column_sums();
        Ok((loss, Gradients { w1, b1, w2, b2 }))
    }

    /// `θ ← θ - lr · ∇`
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        self.w1.sub_scaled(&grads.w1, learning_rate);
        self.w2.sub_scaled(&grads.w2, learning_rate);
        for (p, g) in self.b1.iter_mut().zip(&grads.b1) {
            *p -= learning_rate * g;
        }
        for (p, g) in self.b2.iter_mut().zip(&grads.b2) {
            *p -= learning_rate * g;
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (n, h) = (self.input_size(), self.hidden_size());
        let mut out = Vec::with_capacity(13 + 8 * (2 * n * h + n + h));
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(h as u32).to_le_bytes());
        out.push(self.activation.tag());
        for block in self.parameters() {
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 13;
        if bytes.len() < HEADER {
            return Err(Error::Parse {
                offset: bytes.len(),
                message: "truncated model header".into(),
            });
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(Error::Parse {
                offset: 0,
                message: "bad magic, expected RCM1".into(),
            });
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let activation = Activation::from_tag(bytes[12]).ok_or_else(|| Error::Parse {
            offset: 12,
            message: format!("unknown activation tag {}", bytes[12]),
        })?;
        let expected = HEADER + 8 * (2 * n * h + n + h);
        if bytes.len() != expected {
            return Err(Error::Parse {
                offset: bytes.len().min(expected),
                message: format!("model body has {} bytes, expected {}", bytes.len() - HEADER, expected - HEADER),
            });
        }
        let mut values = bytes[HEADER..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |len: usize| -> Vec<f64> { values.by_ref().take(len).collect() };
        let w1 = take(h * n);
        let b1 = take(h);
        let w2 = take(n * h);
        let b2 = take(n);
        DaeModel::from_parts(
            Matrix::from_vec(h, n, w1)?,
            b1,
            Matrix::from_vec(n, h, w2)?,
            b2,
            activation,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads a model and checks it accepts `input_size` pixels.
    pub fn load_expecting(path: impl AsRef<Path>, input_size: usize) -> Result<Self> {
        let model = Self::load(path)?;
        model.check_input_size(input_size)?;
        Ok(model)
    }
}

const MODEL_MAGIC: &[u8; 4] = b"RCM1";

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl Gradients {
    pub fn blocks(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), &self.b1, self.w2.as_slice(), &self.b2]
    }
}

/// Exact gradients of `bce_loss(decode(encode(corrupted)), target)` for one example.
pub fn backward(model: &DaeModel, corrupted: &[f64], target: &[f64]) -> Result<Gradients> {
    let x = Matrix::from_vec(1, corrupted.len(), corrupted.to_vec())?;
    let t = Matrix::from_vec(1, target.len(), target.to_vec())?;
    Ok(model.loss_and_gradients(&x, &t)?.1)
}

#[inline]
fn bce_term(mu: f64, x: f64) -> f64 {
    -(x * mu.ln() + (1.0 - x) * (1.0 - mu).ln())
}

/// Binomial cross-entropy summed over pixels, with `μ` clipped to `[ε, 1-ε]`.
pub fn bce_loss(mu: &[f64], x: &[f64]) -> f64 {
    assert_eq!(mu.len(), x.len(), "bce_loss length mismatch");
    mu.iter().zip(x).map(|(m, t)| bce_term(clip(*m), *t)).sum()
}

/// Replaces each pixel, with probability `p`, by a fair coin flip.
pub fn salt_pepper(x: &[f64], p: f64, rng: &mut Rng) -> Vec<f64> {
    let mut out = x.to_vec();
    salt_pepper_inplace(&mut out, p, rng);
    out
}

pub fn salt_pepper_inplace(x: &mut [f64], p: f64, rng: &mut Rng) {
    if p <= 0.0 {
        return;
    }
    for v in x {
        if rng.bernoulli(p) {
            *v = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
        }
    }
}

pub fn salt_pepper_image(image: &BinaryImage, p: f64, rng: &mut Rng) -> BinaryImage {
    BinaryImage::new(image.width(), image.height(), salt_pepper(image.pixels(), p, rng))
        .expect("corruption preserves geometry and range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::numerics::Rng;

    fn oracle_forward(model: &DaeModel, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let [w1, b1, w2, b2] = model.parameters();
        let (n, h) = (model.input_size(), model.hidden_size());
        let theta: Vec<f64> = (0..h)
            .map(|j| {
                let mut s = b1[j];
                for i in 0..n {
                    s += w1[j * n + i] * x[i];
                }
                match model.activation() {
                    Activation::Relu => if s > 0.0 { s } else { 0.0 },
                    Activation::Sigmoid => 1.0 / (1.0 + (-s).exp()),
                    Activation::Tanh => s.tanh(),
                }
            })
            .collect();
        let mu = (0..n)
            .map(|i| {
                let mut s = b2[i];
                for j in 0..h {
                    s += w2[i * h + j] * theta[j];
                }
                (1.0 / (1.0 + (-s).exp())).clamp(1e-6, 1.0 - 1e-6)
            })
            .collect();
        (theta, mu)
    }

    fn random_input(rng: &mut Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.next_f64()).collect()
    }

    #[test]
    fn zero_model_activations() {
        let x = vec![1.0, 0.0, 1.0];
        let relu = DaeModel::zeros(3, 2, Activation::Relu);
        assert_eq!(relu.encode(&x).unwrap(), vec![0.0, 0.0]);
        let sig = DaeModel::zeros(3, 2, Activation::Sigmoid);
        assert_eq!(sig.encode(&x).unwrap(), vec![0.5, 0.5]);
        assert_eq!(sig.decode(&[0.3, 0.9]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn saturated_decoder_is_clipped_below_one() {
        let mut m = DaeModel::zeros(3, 2, Activation::Relu);
        m.parameters_mut()[3].fill(1e3);
        let mu = m.decode(&[0.0, 0.0]).unwrap();
        assert!(mu.iter().all(|v| *v < 1.0 && (*v - (1.0 - EPSILON)).abs() < 1e-15));
    }

    #[test]
    fn forward_matches_oracle() {
        let mut rng = Rng::new(11);
        for act in Activation::ALL {
            let m = DaeModel::new_random(7, 5, act, 3);
            let x = random_input(&mut rng, 7);
            let theta = m.encode(&x).unwrap();
            let mu = m.decode(&theta).unwrap();
            let (t2, m2) = oracle_forward(&m, &x);
            for (a, b) in theta.iter().zip(&t2).chain(mu.iter().zip(&m2)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn length_mismatch_errors() {
        let m = DaeModel::zeros(4, 2, Activation::Tanh);
        assert!(m.encode(&[0.0; 3]).is_err());
        assert!(m.decode(&[0.0; 3]).is_err());
    }

    #[test]
    fn bce_values() {
        let x = vec![1.0, 0.0, 1.0, 1.0];
        let perfect = bce_loss(&x, &x);
        assert!((perfect - 4.0 * (1.0 - EPSILON).ln().abs()).abs() < 1e-12);
        assert!(perfect < 1e-5);
        let half = bce_loss(&[0.5; 4], &x);
        assert!((half - 4.0 * 2f64.ln()).abs() < 1e-12);
        let v = bce_loss(&[0.9, 0.2], &[1.0, 0.0]);
        assert!((v - -(0.9f64.ln() + 0.8f64.ln())).abs() < 1e-12);
        assert!((v - 0.3285).abs() < 1e-4);
        assert!(bce_loss(&[0.0, 1.0], &[1.0, 0.0]).is_finite());
    }

    #[test]
    fn salt_pepper_identity_at_zero() {
        let mut rng = Rng::new(1);
        let x: Vec<f64> = (0..100).map(|i| (i % 3 == 0) as u8 as f64).collect();
        assert_eq!(salt_pepper(&x, 0.0, &mut rng), x);
    }

    #[test]
    fn salt_pepper_full_replacement_is_fair() {
        let mut rng = Rng::new(2);
        for fill in [0.0, 1.0] {
            let out = salt_pepper(&vec![fill; 100_000], 1.0, &mut rng);
            let frac = out.iter().sum::<f64>() / out.len() as f64;
            assert!((0.49..=0.51).contains(&frac), "{frac}");
        }
    }

    #[test]
    fn salt_pepper_is_pixelwise_independent() {
        // Alternating input: corrupted adjacent pixels keep covariance
        // (1 - p)^2 * cov(x_i, x_{i+1}) under independent replacement.
        let p = 0.4;
        let trials = 20_000;
        let mut rng = Rng::new(3);
        let mut sum = [0.0; 2];
        let mut sum_xy = 0.0;
        let mut base_rng = Rng::new(4);
        for _ in 0..trials {
            let a = if base_rng.bernoulli(0.5) { 1.0 } else { 0.0 };
            let x = [a, a];
            let y = salt_pepper(&x, p, &mut rng);
            sum[0] += y[0];
            sum[1] += y[1];
            sum_xy += y[0] * y[1];
        }
        let n = trials as f64;
        let cov = sum_xy / n - (sum[0] / n) * (sum[1] / n);
        let expected = (1.0 - p) * (1.0 - p) * 0.25;
        assert!((cov - expected).abs() < 0.01, "cov {cov} vs {expected}");
    }

    fn finite_difference_check(model: &DaeModel, x: &[f64], t: &[f64]) -> f64 {
        let grads = backward(model, x, t).unwrap();
        let loss = |m: &DaeModel| {
            let mu = m.decode(&m.encode(x).unwrap()).unwrap();
            bce_loss(&mu, t)
        };
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for block in 0..4 {
            for i in 0..model.parameters()[block].len() {
                let mut plus = model.clone();
                plus.parameters_mut()[block][i] += h;
                let mut minus = model.clone();
                minus.parameters_mut()[block][i] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let analytic = grads.blocks()[block][i];
                let denom = numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max((numeric - analytic).abs() / denom);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(21);
        for act in Activation::ALL {
            for trial in 0..20 {
                let model = DaeModel::new_random(6, 4, act, 100 + trial);
                let x = random_input(&mut rng, 6);
                let t: Vec<f64> = (0..6).map(|_| if rng.bernoulli(0.5) { 1.0 } else { 0.0 }).collect();
                let err = finite_difference_check(&model, &x, &t);
                assert!(err < 1e-4, "{act} trial {trial}: rel err {err}");
            }
        }
    }

    #[test]
    fn dead_relu_unit_has_zero_incoming_gradient() {
        let mut model = DaeModel::new_random(5, 3, Activation::Relu, 8);
        // unit 1 pre-activation strongly negative for any input in [0, 1]
        model.parameters_mut()[1][1] = -100.0;
        let mut rng = Rng::new(0);
        let x = random_input(&mut rng, 5);
        let g = backward(&model, &x, &[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(g.w1.row(1).iter().all(|v| *v == 0.0));
        assert_eq!(g.b1[1], 0.0);
    }

    #[test]
    fn zero_loss_configuration_has_tiny_gradients() {
        // Decoder biases saturate towards the target, so μ ≈ x.
        let mut model = DaeModel::zeros(4, 2, Activation::Relu);
        let target = [1.0, 0.0, 0.0, 1.0];
        for (b, t) in model.parameters_mut()[3].iter_mut().zip(target) {
            *b = if t == 1.0 { 30.0 } else { -30.0 };
        }
        let g = backward(&model, &target, &target).unwrap();
        assert!(g.blocks().iter().all(|b| b.iter().all(|v| v.abs() < 1e-10)));
    }

    #[test]
    fn model_file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.rcm");
        let m = DaeModel::new_random(12, 5, Activation::Tanh, 9);
        m.save(&path).unwrap();
        let back = DaeModel::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), m.to_bytes());
        assert!(matches!(
            DaeModel::load_expecting(&path, 13),
            Err(Error::ShapeMismatch { .. })
        ));
        let bytes = m.to_bytes();
        assert!(DaeModel::from_bytes(&bytes[..13]).is_err());
        assert!(DaeModel::from_bytes(&bytes[..5]).is_err());
        let mut bad = bytes.clone();
        bad[12] = 7;
        assert!(DaeModel::from_bytes(&bad).is_err());
        assert_eq!(&bytes[..4], b"RCM1");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn decode_stays_in_open_interval(seed in any::<u64>(), scale in 0.0f64..1e4) {
            let mut m = DaeModel::new_random(6, 3, Activation::Relu, seed);
            for block in m.parameters_mut() {
                for v in block.iter_mut() {
                    *v *= scale;
                }
            }
            let mut rng = Rng::new(seed);
            let x = random_input(&mut rng, 6);
            let mu = m.decode(&m.encode(&x).unwrap()).unwrap();
            prop_assert!(mu.iter().all(|v| *v >= EPSILON && *v <= 1.0 - EPSILON));
            prop_assert!(bce_loss(&mu, &x).is_finite());
        }
    }
}
