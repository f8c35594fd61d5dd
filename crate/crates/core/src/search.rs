//! Random hyperparameter search over DAE configurations, scored by the mean
//! AMI that RC achieves with the trained model, plus the loss-vs-score study.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::dae::{train, Activation, DaeModel, TrainConfig};
use crate::datasets::{generate, BinaryImage, DatasetName, DatasetSpec, GeneratorOptions, LabeledExample, Split};
use crate::error::{Error, Result};
use crate::metrics::score_dataset;
use crate::numerics::{derive_seed, Rng, Stream};
use crate::rc::{AssignmentMode, RcConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub noise_levels: Vec<f64>,
    pub hidden_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            learning_rate: (1e-3, 1.0),
            noise_levels: (0..10).map(|i| i as f64 / 10.0).collect(),
            hidden_sizes: vec![100, 250, 500, 1000],
            activations: Activation::ALL.to_vec(),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.learning_rate;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidBounds { lo, hi, log_scale: true });
        }
        if self.noise_levels.is_empty() || self.hidden_sizes.is_empty() || self.activations.is_empty() {
            return Err(Error::InvalidArgument("search space sets must be non-empty".into()));
        }
        if self.noise_levels.iter().any(|p| !(0.0..=1.0).contains(p)) || self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidArgument("search space holds an invalid value".into()));
        }
        Ok(())
    }
}

/// Architecture and optimiser settings drawn for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub learning_rate: f64,
    pub noise_p: f64,
    pub hidden_size: usize,
    pub activation: Activation,
}

impl TrialConfig {
    /// Keys understood by the run configuration, ready for `train --config`.
    pub fn to_key_values(&self, dataset: DatasetName) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("dataset", dataset);
        kv.insert("learning_rate", self.learning_rate);
        kv.insert("noise_p", self.noise_p);
        kv.insert("hidden_size", self.hidden_size);
        kv.insert("activation", self.activation.as_str());
        kv
    }
}

pub fn sample_config(space: &SearchSpace, rng: &mut Rng) -> Result<TrialConfig> {
    space.validate()?;
    let (lo, hi) = space.learning_rate;
    let learning_rate = if lo == hi { lo } else { rng.uniform(lo, hi, true)? };
    Ok(TrialConfig {
        learning_rate,
        noise_p: space.noise_levels[rng.below(space.noise_levels.len())],
        hidden_size: space.hidden_sizes[rng.below(space.hidden_sizes.len())],
        activation: space.activations[rng.below(space.activations.len())],
    })
}

/// Best configurations reported for the original benchmark runs, with their scores.
pub fn reference_config(dataset: DatasetName, mode: TrainingMode) -> Option<(TrialConfig, f64)> {
    use Activation::*;
    use DatasetName::*;
    let c = |learning_rate, hidden_size, activation, noise_p, score| {
        Some((
            TrialConfig {
                learning_rate,
                noise_p,
                hidden_size,
                activation,
            },
            score,
        ))
    };
    match (mode, dataset) {
        (TrainingMode::SingleObject, Bars) => c(0.768015, 100, Relu, 0.0, 0.951809),
        (TrainingMode::SingleObject, Corners) => c(0.001920, 100, Relu, 0.0, 0.853866),
        (TrainingMode::SingleObject, MultiMnist) => c(0.011362, 1000, Relu, 0.6, 0.651657),
        (TrainingMode::SingleObject, MnistShape) => c(0.031685, 250, Sigmoid, 0.6, 0.545559),
        (TrainingMode::SingleObject, Shapes) => c(0.083147, 500, Tanh, 0.4, 0.928792),
        (TrainingMode::SingleObject, SimpleSuperposition) => c(0.366627, 100, Relu, 0.1, 0.890472),
        (TrainingMode::MultiObject, Bars) => c(0.012192, 100, Sigmoid, 0.8, 0.851777),
        (TrainingMode::MultiObject, Corners) => c(0.026035, 100, Relu, 0.7, 0.704285),
        (TrainingMode::MultiObject, MnistShape) => c(0.033200, 1000, Relu, 0.6, 0.259646),
        (TrainingMode::MultiObject, MultiMnist) => c(0.001786, 250, Sigmoid, 0.9, 0.614277),
        (TrainingMode::MultiObject, Shapes) => c(0.049402, 100, Sigmoid, 0.9, 0.776656),
        (TrainingMode::MultiObject, SimpleSuperposition) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    SingleObject,
    MultiObject,
}

impl TrainingMode {
    /// Soft assignments for single-object models, hard ones for multi-object models.
    pub fn rc_mode(self) -> AssignmentMode {
        match self {
            TrainingMode::SingleObject => AssignmentMode::Soft,
            TrainingMode::MultiObject => AssignmentMode::Hard,
        }
    }
}

/// Training, validation and scoring sets shared by every trial.
#[derive(Debug, Clone)]
pub struct SearchData {
    pub dataset: DatasetName,
    pub train: Vec<BinaryImage>,
    pub validation: Vec<BinaryImage>,
    /// Held-out multi-object images used to score trials.
    pub scoring: Vec<LabeledExample>,
}

impl SearchData {
    /// Single-object mode trains on `train_single` and validates on `validation`.
    /// Multi-object mode draws both from `train_multi` under different seeds.
    /// Scoring images are a further `train_multi` draw, keeping `test_multi` unseen.
    pub fn generate(
        dataset: DatasetName,
        mode: TrainingMode,
        counts: (usize, usize, usize),
        seed: u64,
        options: &GeneratorOptions,
    ) -> Result<Self> {
        if mode == TrainingMode::MultiObject && dataset == DatasetName::SimpleSuperposition {
            return Err(Error::InvalidArgument(
                "multi-object training is not offered for simple_superposition".into(),
            ));
        }
        let spec = |split, count, seed| DatasetSpec {
            options: options.clone(),
            ..DatasetSpec::new(dataset, split, count, seed)
        };
        let images = |s: &DatasetSpec| -> Result<Vec<BinaryImage>> {
            Ok(generate(s)?.into_iter().map(|e| e.image).collect())
        };
        let (train_set, validation) = match mode {
            TrainingMode::SingleObject => (
                images(&spec(Split::TrainSingle, counts.0, seed))?,
                images(&spec(Split::Validation, counts.1, seed))?,
            ),
            TrainingMode::MultiObject => (
                images(&spec(Split::TrainMulti, counts.0, seed))?,
                images(&spec(Split::TrainMulti, counts.1, derive_seed(seed, 1)))?,
            ),
        };
        let scoring = generate(&spec(Split::TrainMulti, counts.2, derive_seed(seed, 2)))?;
        Ok(SearchData {
            dataset,
            train: train_set,
            validation,
            scoring,
        })
    }
}

/// Settings shared by all trials of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub n_trials: usize,
    pub training_mode: TrainingMode,
    /// RC cluster count used for scoring.
    pub k: usize,
    pub rc_mode: AssignmentMode,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl SearchSettings {
    pub fn new(dataset: DatasetName, training_mode: TrainingMode, n_trials: usize, seed: u64) -> Self {
        let train = TrainConfig::default();
        SearchSettings {
            n_trials,
            training_mode,
            k: dataset.object_count(),
            rc_mode: training_mode.rc_mode(),
            batch_size: train.batch_size,
            patience: train.patience,
            max_epochs: train.max_epochs,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub config: TrialConfig,
    pub status: TrialStatus,
    pub error: Option<String>,
    pub epochs_run: usize,
    pub best_val_loss: Option<f64>,
    pub val_losses: Vec<f64>,
    /// Mean AMI on the scoring set.
    pub score: Option<f64>,
    #[serde(skip)]
    pub model: Option<DaeModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub trials: Vec<Trial>,
    pub best: usize,
}

impl SearchResult {
    pub fn best_trial(&self) -> &Trial {
        &self.trials[self.best]
    }
}

/// Trains and scores one configuration. Training failures become a failed trial.
pub fn run_trial(data: &SearchData, settings: &SearchSettings, config: TrialConfig, index: usize, seed: u64) -> Trial {
    let mut trial = Trial {
        index,
        seed,
        config,
        status: TrialStatus::Failed,
        error: None,
        epochs_run: 0,
        best_val_loss: None,
        val_losses: vec![],
        score: None,
        model: None,
    };
    let n = match data.train.first() {
        Some(img) => img.len(),
        None => {
            trial.error = Some("empty training set".into());
            return trial;
        }
    };
    let model = DaeModel::new_random(n, config.hidden_size, config.activation, seed);
    let train_cfg = TrainConfig {
        learning_rate: config.learning_rate,
        noise_p: config.noise_p,
        batch_size: settings.batch_size,
        patience: settings.patience,
        max_epochs: settings.max_epochs,
        seed,
    };
    let report = match train(model, &data.train, &data.validation, &train_cfg) {
        Ok(r) => r,
        Err(e) => {
            trial.error = Some(e.to_string());
            return trial;
        }
    };
    trial.epochs_run = report.epochs_run;
    trial.best_val_loss = Some(report.best_val_loss);
    trial.val_losses = report.val_losses;
    let rc = RcConfig {
        k: settings.k,
        assignment_mode: settings.rc_mode,
        seed,
        keep_snapshots: false,
        ..RcConfig::default()
    };
    match score_dataset(&report.model, &data.scoring, &rc) {
        Ok(s) if s.summary.mean_ami.is_finite() => {
            trial.score = Some(s.summary.mean_ami);
            trial.status = TrialStatus::Completed;
            trial.model = Some(report.model);
        }
        Ok(_) => trial.error = Some("no example could be scored".into()),
        Err(e) => trial.error = Some(e.to_string()),
    }
    trial
}

/// Runs `n_trials` independent trials; trial `i` owns the sub-seed `derive_seed(seed, i)`.
///
/// `on_trial` sees each trial as soon as it finishes, e.g. to append it to a log.
pub fn run_search(
    data: &SearchData,
    space: &SearchSpace,
    settings: &SearchSettings,
    mut on_trial: impl FnMut(&Trial),
) -> Result<SearchResult> {
    space.validate()?;
    if settings.n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
    }
    let mut trials = Vec::with_capacity(settings.n_trials);
    for index in 0..settings.n_trials {
        let seed = derive_seed(settings.seed, index as u64);
        let config = sample_config(space, &mut Rng::for_stream(seed, Stream::Search))?;
        let trial = run_trial(data, settings, config, index, seed);
        on_trial(&trial);
        trials.push(trial);
    }
    let best = trials
        .iter()
        .filter_map(|t| t.score.map(|s| (t.index, s)))
        .fold(None, |acc: Option<(usize, f64)>, (i, s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
        .ok_or(Error::AllTrialsFailed(settings.n_trials))?;
    Ok(SearchResult { trials, best })
}

/// Appends one JSON object per line.
pub fn append_json_line(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let line = serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(f, "{line}").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRecord {
    pub index: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub val_loss: Option<f64>,
    pub score: Option<f64>,
    pub error: Option<String>,
}

/// Trains `n_models` DAEs that differ only in learning rate and initialisation
/// and pairs each final validation loss with its RC score.
///
/// Activation and noise are held at `base`; the hidden size is `hidden_size`.
pub fn loss_vs_score_study(
    data: &SearchData,
    settings: &SearchSettings,
    base: TrialConfig,
    hidden_size: usize,
    n_models: usize,
    learning_rate: (f64, f64),
) -> Result<Vec<StudyRecord>> {
    if n_models < 2 {
        return Err(Error::InvalidArgument("the study needs at least two models".into()));
    }
    let space = SearchSpace {
        learning_rate,
        noise_levels: vec![base.noise_p],
        hidden_sizes: vec![hidden_size],
        activations: vec![base.activation],
    };
    let mut out = vec![];
    for index in 0..n_models {
        let seed = derive_seed(settings.seed, index as u64);
        let config = sample_config(&space, &mut Rng::for_stream(seed, Stream::Search))?;
        let t = run_trial(data, settings, config, index, seed);
        out.push(StudyRecord {
            index,
            seed,
            learning_rate: config.learning_rate,
            val_loss: t.best_val_loss,
            score: t.score,
            error: t.error,
        });
    }
    Ok(out)
}

/// Pearson correlation; `NaN` when either series is constant or shorter than two.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
