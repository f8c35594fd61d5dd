//! Flat `key = value` run configuration.
//!
//! Keys are the field names of [`RunConfig`]. Lines starting with `#` are
//! comments. Values are resolved in three layers: built-in defaults, then a
//! config file, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dae::{Activation, TrainConfig};
use crate::datasets::{DatasetName, DatasetSpec, GeneratorOptions, Split};
use crate::error::{Error, Result};
use crate::metrics::AmiNormalizer;
use crate::rc::{AssignmentMode, PiMode, RcConfig};
use crate::search::TrainingMode;

/// Ordered `key -> raw value` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues(pub BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(KeyValues(map))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    /// Later layers win.
    pub fn merge(&mut self, other: &KeyValues) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetName,
    pub split: Split,
    pub count: usize,
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub train_data: Option<PathBuf>,
    pub val_data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: PathBuf,

    pub learning_rate: f64,
    pub noise_p: f64,
    pub hidden_size: usize,
    pub activation: Activation,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,

    pub k: usize,
    /// K values for `eval`; empty means just `k`.
    pub ks: Vec<usize>,
    pub max_iters: usize,
    pub ll_tolerance: f64,
    pub assignment_mode: AssignmentMode,
    pub pi_mode: PiMode,
    pub ami_normalizer: AmiNormalizer,
    /// Examples processed by `bind`; 0 means all.
    pub limit: usize,
    pub render: bool,

    pub n_trials: usize,
    pub training_mode: TrainingMode,
    pub n_models: usize,
    pub train_count: usize,
    pub val_count: usize,
    pub score_count: usize,

    pub bar_probability: f64,
    pub mnist_dir: Option<PathBuf>,
    pub mnist_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let rc = RcConfig::default();
        let gen = GeneratorOptions::default();
        RunConfig {
            dataset: DatasetName::Shapes,
            split: Split::TestMulti,
            count: 1000,
            seed: 0,
            data: None,
            train_data: None,
            val_data: None,
            model: None,
            out: PathBuf::from("out"),
            learning_rate: train.learning_rate,
            noise_p: train.noise_p,
            hidden_size: 250,
            activation: Activation::Relu,
            batch_size: train.batch_size,
            patience: train.patience,
            max_epochs: train.max_epochs,
            k: rc.k,
            ks: vec![],
            max_iters: rc.max_iters,
            ll_tolerance: rc.ll_tolerance,
            assignment_mode: rc.assignment_mode,
            pi_mode: rc.pi_mode,
            ami_normalizer: AmiNormalizer::Max,
            limit: 0,
            render: false,
            n_trials: 20,
            training_mode: TrainingMode::SingleObject,
            n_models: 30,
            train_count: 50_000,
            val_count: 10_000,
            score_count: 200,
            bar_probability: gen.bar_probability,
            mnist_dir: None,
            mnist_threshold: gen.mnist_threshold,
        }
    }
}

impl RunConfig {
    /// Defaults overridden by each layer in turn.
    pub fn resolve(layers: &[&KeyValues]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for layer in layers {
            cfg.apply(layer)?;
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        let mut value = serde_json::to_value(&*self).expect("config serialises");
        let obj = value.as_object_mut().expect("config is an object");
        for (key, raw) in &kv.0 {
            let slot = obj
                .get_mut(key)
                .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
            *slot = typed_value(key, slot, raw)?;
        }
        *self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.ks.contains(&0) {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(Error::Config("noise_p must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Every field as `key = value` text; the inverse of [`RunConfig::apply`].
    pub fn to_key_values(&self) -> KeyValues {
        let value = serde_json::to_value(self).expect("config serialises");
        let mut kv = KeyValues::default();
        for (k, v) in value.as_object().expect("object") {
            let text = match v {
                Value::Null => continue,
                Value::String(s) => s.clone(),
                Value::Array(items) => items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            kv.insert(k, text);
        }
        kv
    }

    pub fn k_values(&self) -> Vec<usize> {
        if self.ks.is_empty() {
            vec![self.k]
        } else {
            self.ks.clone()
        }
    }

    pub fn generator_options(&self) -> GeneratorOptions {
        GeneratorOptions {
            bar_probability: self.bar_probability,
            mnist_dir: self.mnist_dir.clone(),
            mnist_threshold: self.mnist_threshold,
            ..GeneratorOptions::default()
        }
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            options: self.generator_options(),
            ..DatasetSpec::new(self.dataset, self.split, self.count, self.seed)
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            noise_p: self.noise_p,
            batch_size: self.batch_size,
            patience: self.patience,
            max_epochs: self.max_epochs,
            seed: self.seed,
        }
    }

    pub fn rc_config(&self, k: usize) -> RcConfig {
        RcConfig {
            k,
            max_iters: self.max_iters,
            ll_tolerance: self.ll_tolerance,
            assignment_mode: self.assignment_mode,
            pi_mode: self.pi_mode,
            seed: self.seed,
            keep_snapshots: self.render,
        }
    }
}

/// Parses `raw` into the JSON type of the field's current value.
fn typed_value(key: &str, current: &Value, raw: &str) -> Result<Value> {
    let bad = |what: &str| Error::Config(format!("`{key}`: expected {what}, got `{raw}`"));
    Ok(match current {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad("true or false"))?),
        Value::Number(n) if n.is_f64() => {
            let x: f64 = raw.parse().map_err(|_| bad("a number"))?;
            serde_json::Number::from_f64(x).map(Value::Number).ok_or_else(|| bad("a finite number"))?
        }
        Value::Number(_) => Value::Number(raw.parse::<u64>().map_err(|_| bad("a non-negative integer"))?.into()),
        Value::Array(_) => Value::Array(
            raw.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<u64>().map(|v| Value::Number(v.into())).map_err(|_| bad("comma-separated integers")))
                .collect::<Result<_>>()?,
        ),
        // strings, enums and optional paths
        _ => Value::String(canonical_enum(raw)),
    })
}

/// Accepts the short activation spelling used in result tables.
fn canonical_enum(raw: &str) -> String {
    match raw {
        "ReL" | "rel" => "relu".to_string(),
        other => other.to_string(),
    }
}
