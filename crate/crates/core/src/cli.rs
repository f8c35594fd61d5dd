//! The `rc` command line: generate, train, search, bind, eval, study,
//! generalize and render.
//!
//! Every command resolves a [`RunConfig`] from defaults, an optional
//! `--config` file and its flags (in that order), writes outputs under
//! `--out`, and appends JSON lines to `<out>/run_log.jsonl`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{KeyValues, RunConfig};
use crate::dae::{train, DaeModel, TrainReport};
use crate::datasets::{generate, load_dataset, save_dataset, BinaryImage, Dataset, LabeledExample};
use crate::error::{Error, Result};
use crate::metrics::{ami_with, confidence, hard_labels, score_dataset_with};
use crate::numerics::{derive_seed, Matrix};
use crate::rc::{run_rc, Assignment};
use crate::render::{assignment_ppm, load_pgm, write_pgm, Palette};
use crate::search::{
    append_json_line, loss_vs_score_study, pearson, run_search, SearchData, SearchSettings, SearchSpace, TrialConfig,
};

#[derive(Debug, Parser)]
#[command(name = "rc", version, about = "Bind objects in binary images by reconstruction clustering")]
pub struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Set any config key, e.g. `--set max_iters=30`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset split and write it as an RCDS file.
    Generate(DataArgs),
    /// Train a denoising autoencoder.
    Train(TrainArgs),
    /// Random hyperparameter search scored by RC.
    Search(SearchArgs),
    /// Run RC on a dataset file and log per-iteration likelihoods.
    Bind(RcArgs),
    /// Score a model over one or more K values.
    Eval(RcArgs),
    /// Validation loss against RC score for models differing in learning rate and init.
    Study(SearchArgs),
    /// Run RC on user-supplied PGM images and render the result.
    Generalize(GeneralizeArgs),
    /// Render dataset inputs (PGM) and their ground truth (PPM).
    Render(RcArgs),
}

#[derive(Debug, Args, Default)]
struct DataArgs {
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    #[arg(long)]
    bar_probability: Option<f64>,
}

#[derive(Debug, Args, Default)]
struct ModelArgs {
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    noise_p: Option<f64>,
    #[arg(long)]
    hidden_size: Option<usize>,
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    training_mode: Option<String>,
    #[arg(long)]
    train_count: Option<usize>,
    #[arg(long)]
    val_count: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// RCDS training file; generated from the dataset settings when absent.
    #[arg(long)]
    train_data: Option<PathBuf>,
    #[arg(long)]
    val_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    n_models: Option<usize>,
    #[arg(long)]
    score_count: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct RcArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// RCDS dataset file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated K values for `eval`.
    #[arg(long)]
    ks: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    assignment_mode: Option<String>,
    #[arg(long)]
    pi_mode: Option<String>,
    #[arg(long)]
    ami_normalizer: Option<String>,
    #[arg(long)]
    limit: Option<usize>,
    /// Write per-iteration assignment frames.
    #[arg(long)]
    render: bool,
}

#[derive(Debug, Args)]
struct GeneralizeArgs {
    #[command(flatten)]
    rc: RcArgs,
    /// PGM images (P5 or P2) matching the model's input size.
    #[arg(required = true)]
    images: Vec<PathBuf>,
}

/// Collects the flags that were actually given.
struct Flags(KeyValues);

impl Flags {
    fn put<T: ToString>(&mut self, key: &str, value: &Option<T>) {
        if let Some(v) = value {
            self.0.insert(key, v.to_string());
        }
    }

    fn data(&mut self, a: &DataArgs) {
        self.put("dataset", &a.dataset);
        self.put("split", &a.split);
        self.put("count", &a.count);
        self.put("mnist_dir", &a.mnist_dir.as_ref().map(|p| p.display().to_string()));
        self.put("bar_probability", &a.bar_probability);
    }

    fn model(&mut self, a: &ModelArgs) {
        self.put("learning_rate", &a.learning_rate);
        self.put("noise_p", &a.noise_p);
        self.put("hidden_size", &a.hidden_size);
        self.put("activation", &a.activation);
        self.put("batch_size", &a.batch_size);
        self.put("patience", &a.patience);
        self.put("max_epochs", &a.max_epochs);
        self.put("training_mode", &a.training_mode);
        self.put("train_count", &a.train_count);
        self.put("val_count", &a.val_count);
    }

    fn rc(&mut self, a: &RcArgs) {
        self.put("model", &a.model.as_ref().map(|p| p.display().to_string()));
        self.put("data", &a.data.as_ref().map(|p| p.display().to_string()));
        self.put("k", &a.k);
        self.put("ks", &a.ks);
        self.put("max_iters", &a.max_iters);
        self.put("assignment_mode", &a.assignment_mode);
        self.put("pi_mode", &a.pi_mode);
        self.put("ami_normalizer", &a.ami_normalizer);
        self.put("limit", &a.limit);
        if a.render {
            self.0.insert("render", "true");
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    let mut flags = Flags(KeyValues::default());
    flags.put("seed", &cli.seed);
    flags.put("out", &cli.out.as_ref().map(|p| p.display().to_string()));
    match &cli.command {
        Command::Generate(a) => flags.data(a),
        Command::Train(a) => {
            flags.data(&a.data);
            flags.model(&a.model);
            flags.put("train_data", &a.train_data.as_ref().map(|p| p.display().to_string()));
            flags.put("val_data", &a.val_data.as_ref().map(|p| p.display().to_string()));
        }
        Command::Search(a) | Command::Study(a) => {
            flags.data(&a.data);
            flags.model(&a.model);
            flags.put("n_trials", &a.n_trials);
            flags.put("n_models", &a.n_models);
            flags.put("score_count", &a.score_count);
        }
        Command::Bind(a) | Command::Eval(a) | Command::Render(a) => flags.rc(a),
        Command::Generalize(a) => flags.rc(&a.rc),
    }
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
        flags.0.insert(k.trim(), v.trim());
    }
    RunConfig::resolve(&[&file, &flags.0])
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate(_) => "generate",
        Command::Train(_) => "train",
        Command::Search(_) => "search",
        Command::Bind(_) => "bind",
        Command::Eval(_) => "eval",
        Command::Study(_) => "study",
        Command::Generalize(_) => "generalize",
        Command::Render(_) => "render",
    }
}

/// Append-only JSON-lines log of one invocation.
struct RunLog {
    path: PathBuf,
    command: &'static str,
}

impl RunLog {
    fn event(&self, event: &str, body: serde_json::Value) -> Result<()> {
        let ts = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        append_json_line(
            &self.path,
            &json!({"timestamp": ts, "command": self.command, "event": event, "body": body}),
        )
    }
}

/// What a command reports back: lines for the terminal and an exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub messages: Vec<String>,
    pub exit_code: i32,
    pub metrics: serde_json::Value,
}

impl Outcome {
    fn say(&mut self, line: impl Into<String>) {
        self.messages.push(line.into());
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    run_parsed(&cli)
}

pub fn run_parsed(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve(cli)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let log = RunLog {
        path: cfg.out.join("run_log.jsonl"),
        command: command_name(&cli.command),
    };
    log.event("start", serde_json::to_value(&cfg).expect("config serialises"))?;
    let result = match &cli.command {
        Command::Generate(_) => cmd_generate(&cfg),
        Command::Train(_) => cmd_train(&cfg, &log),
        Command::Search(_) => cmd_search(&cfg, &log),
        Command::Bind(_) => cmd_bind(&cfg),
        Command::Eval(_) => cmd_eval(&cfg),
        Command::Study(_) => cmd_study(&cfg),
        Command::Generalize(a) => cmd_generalize(&cfg, &a.images),
        Command::Render(_) => cmd_render(&cfg),
    };
    match &result {
        Ok(o) => log.event("end", json!({"exit_code": o.exit_code, "metrics": o.metrics}))?,
        Err(e) => log.event("error", json!({"message": e.to_string()}))?,
    }
    result
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("`{what}` is required for this command")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn cmd_generate(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.dataset_spec();
    let examples = generate(&spec)?;
    let (width, height) = spec.geometry();
    let path = cfg.out.join(format!("{}_{}.rcds", cfg.dataset, cfg.split));
    save_dataset(
        &path,
        &Dataset {
            name: cfg.dataset.to_string(),
            width,
            height,
            examples,
        },
    )?;
    let mut o = Outcome::default();
    o.say(format!("wrote {} examples of {width}x{height} to {}", cfg.count, path.display()));
    o.metrics = json!({"path": path, "count": cfg.count, "width": width, "height": height});
    Ok(o)
}

fn images_of(d: &Dataset) -> Vec<BinaryImage> {
    d.examples.iter().map(|e| e.image.clone()).collect()
}

/// Training and validation images from files or freshly generated.
fn training_images(cfg: &RunConfig) -> Result<(Vec<BinaryImage>, Vec<BinaryImage>)> {
    if let Some(p) = &cfg.train_data {
        let train_set = images_of(&load_dataset(p)?);
        let val = images_of(&load_dataset(require(&cfg.val_data, "val_data")?)?);
        return Ok((train_set, val));
    }
    let data = SearchData::generate(
        cfg.dataset,
        cfg.training_mode,
        (cfg.train_count, cfg.val_count, 1),
        cfg.seed,
        &cfg.generator_options(),
    )?;
    Ok((data.train, data.validation))
}

fn report_json(r: &TrainReport) -> serde_json::Value {
    json!({
        "epochs_run": r.epochs_run,
        "best_epoch": r.best_epoch,
        "best_val_loss": r.best_val_loss,
        "train_losses": r.train_losses,
        "val_losses": r.val_losses,
    })
}

fn cmd_train(cfg: &RunConfig, log: &RunLog) -> Result<Outcome> {
    let (train_set, val) = training_images(cfg)?;
    let n = train_set.first().map(BinaryImage::len).unwrap_or(0);
    let model = DaeModel::new_random(n, cfg.hidden_size, cfg.activation, cfg.seed);
    let report = train(model, &train_set, &val, &cfg.train_config())?;
    let path = cfg.out.join("model.rcm");
    report.model.save(&path)?;
    let metrics = report_json(&report);
    write_json(&cfg.out.join("train_report.json"), &metrics)?;
    log.event("report", metrics.clone())?;
    let mut o = Outcome::default();
    o.say(format!(
        "trained {} epochs; best validation loss {:.4} at epoch {}; model written to {}",
        report.epochs_run,
        report.best_val_loss,
        report.best_epoch,
        path.display()
    ));
    o.metrics = metrics;
    Ok(o)
}

fn search_data(cfg: &RunConfig) -> Result<SearchData> {
    SearchData::generate(
        cfg.dataset,
        cfg.training_mode,
        (cfg.train_count, cfg.val_count, cfg.score_count),
        cfg.seed,
        &cfg.generator_options(),
    )
}

fn search_settings(cfg: &RunConfig, n_trials: usize) -> SearchSettings {
    SearchSettings {
        k: cfg.k,
        batch_size: cfg.batch_size,
        patience: cfg.patience,
        max_epochs: cfg.max_epochs,
        ..SearchSettings::new(cfg.dataset, cfg.training_mode, n_trials, cfg.seed)
    }
}

fn cmd_search(cfg: &RunConfig, log: &RunLog) -> Result<Outcome> {
    let data = search_data(cfg)?;
    let trials_path = cfg.out.join("trials.jsonl");
    let result = run_search(&data, &SearchSpace::default(), &search_settings(cfg, cfg.n_trials), |t| {
        if let Err(e) = append_json_line(&trials_path, t) {
            eprintln!("warning: {e}");
        }
    })?;
    let best = result.best_trial();
    let mut kv = cfg.to_key_values();
    kv.merge(&best.config.to_key_values(cfg.dataset));
    write_text(&cfg.out.join("best_config.txt"), &kv.render())?;
    if let Some(m) = &best.model {
        m.save(cfg.out.join("best_model.rcm"))?;
    }
    let failed = result.trials.iter().filter(|t| t.score.is_none()).count();
    let metrics = json!({"best_index": best.index, "best_score": best.score, "best_config": best.config, "failed_trials": failed});
    log.event("best", metrics.clone())?;
    let mut o = Outcome::default();
    o.say(format!(
        "{} trials ({} failed); best #{} scored {:.4} with {:?}",
        result.trials.len(),
        failed,
        best.index,
        best.score.unwrap_or(f64::NAN),
        best.config
    ));
    o.metrics = metrics;
    Ok(o)
}

fn load_model_and_data(cfg: &RunConfig) -> Result<(DaeModel, Dataset)> {
    let data = load_dataset(require(&cfg.data, "data")?)?;
    let model = DaeModel::load_expecting(require(&cfg.model, "model")?, data.width * data.height)?;
    Ok((model, data))
}

fn limited(examples: &[LabeledExample], limit: usize) -> &[LabeledExample] {
    if limit == 0 {
        examples
    } else {
        &examples[..limit.min(examples.len())]
    }
}

fn frame(gamma: &Assignment, d: &Dataset, image: &BinaryImage, palette: &Palette) -> Result<Vec<u8>> {
    assignment_ppm(gamma, d.width, d.height, palette, Some(&image.lit()))
}

fn cmd_bind(cfg: &RunConfig) -> Result<Outcome> {
    let (model, data) = load_model_and_data(cfg)?;
    let examples = limited(&data.examples, cfg.limit);
    let palette = Palette::default();
    let frames = cfg.out.join("frames");
    if cfg.render {
        std::fs::create_dir_all(&frames).map_err(|e| Error::io(&frames, e))?;
    }
    let trace_path = cfg.out.join("bind_trace.jsonl");
    let _ = std::fs::remove_file(&trace_path);
    let mut scores = vec![];
    for (i, ex) in examples.iter().enumerate() {
        let mut rc = cfg.rc_config(cfg.k);
        rc.seed = derive_seed(cfg.seed, i as u64);
        let trace = run_rc(&model, ex.image.pixels(), &rc)?;
        for (t, ll) in trace.log_likelihoods.iter().enumerate() {
            append_json_line(
                &trace_path,
                &json!({"example": i, "iter": t + 1, "log_likelihood": ll, "gamma_digest": trace.gamma_digests[t]}),
            )?;
        }
        let mask = ex.truth.eval_mask();
        let score = ami_with(&hard_labels(&trace.final_gamma), &ex.truth.labels(), mask, cfg.ami_normalizer).ok();
        scores.push(score);
        if cfg.render {
            write_pgm(&ex.image, frames.join(format!("ex{i:04}_input.pgm")))?;
            for (t, snap) in trace.snapshots.iter().enumerate() {
                let p = frames.join(format!("ex{i:04}_iter{:02}.ppm", t + 1));
                write_file(&p, &frame(&snap.gamma, &data, &ex.image, &palette)?)?;
            }
        }
    }
    let ok: Vec<f64> = scores.iter().flatten().copied().collect();
    let mean = ok.iter().sum::<f64>() / ok.len().max(1) as f64;
    let mut o = Outcome::default();
    o.say(format!(
        "bound {} examples with K={}; mean AMI {:.4}; trace in {}",
        examples.len(),
        cfg.k,
        mean,
        trace_path.display()
    ));
    o.metrics = json!({"examples": examples.len(), "mean_ami": mean});
    Ok(o)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn cmd_eval(cfg: &RunConfig) -> Result<Outcome> {
    let (model, data) = load_model_and_data(cfg)?;
    let examples = limited(&data.examples, cfg.limit);
    let mut table = String::from("k,mean_ami,std_ami,mean_confidence,mean_final_ll,converged_fraction,failures\n");
    let mut rows = vec![];
    let mut o = Outcome::default();
    for k in cfg.k_values() {
        let s = score_dataset_with(&model, examples, &cfg.rc_config(k), cfg.ami_normalizer)?;
        write_text(&cfg.out.join(format!("scores_k{k}.csv")), &s.to_csv())?;
        let m = &s.summary;
        table.push_str(&format!(
            "{k},{},{},{},{},{},{}\n",
            m.mean_ami, m.std_ami, m.mean_confidence, m.mean_final_ll, m.converged_fraction, m.failures
        ));
        o.say(format!("K={k:>2}  AMI {:.4} ± {:.4}  confidence {:.3}  failures {}", m.mean_ami, m.std_ami, m.mean_confidence, m.failures));
        if (m.failures as f64) > 0.01 * m.count as f64 {
            o.exit_code = 1;
        }
        rows.push(json!({"k": k, "summary": m}));
    }
    write_text(&cfg.out.join("eval_table.csv"), &table)?;
    let summary = json!({"config": cfg, "results": rows});
    write_json(&cfg.out.join("eval_summary.json"), &summary)?;
    o.metrics = json!(rows);
    Ok(o)
}

fn cmd_study(cfg: &RunConfig) -> Result<Outcome> {
    let data = search_data(cfg)?;
    let base = TrialConfig {
        learning_rate: cfg.learning_rate,
        noise_p: cfg.noise_p,
        hidden_size: cfg.hidden_size,
        activation: cfg.activation,
    };
    let settings = search_settings(cfg, cfg.n_models);
    let records = loss_vs_score_study(&data, &settings, base, cfg.hidden_size, cfg.n_models, SearchSpace::default().learning_rate)?;
    let mut csv = String::from("index,seed,learning_rate,val_loss,score\n");
    let (mut losses, mut scores) = (vec![], vec![]);
    for r in &records {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{}\n", r.index, r.seed, r.learning_rate, f(r.val_loss), f(r.score)));
        if let (Some(l), Some(s)) = (r.val_loss, r.score) {
            losses.push(-l);
            scores.push(s);
        }
    }
    write_text(&cfg.out.join("study.csv"), &csv)?;
    let r = pearson(&losses, &scores);
    let mut o = Outcome::default();
    o.say(format!("{} of {} models scored; Pearson(-loss, AMI) = {r:.4}", scores.len(), records.len()));
    o.metrics = json!({"models": records.len(), "scored": scores.len(), "pearson": r});
    Ok(o)
}

fn cmd_generalize(cfg: &RunConfig, images: &[PathBuf]) -> Result<Outcome> {
    let model = DaeModel::load(require(&cfg.model, "model")?)?;
    let palette = Palette::default();
    let mut o = Outcome::default();
    for (i, path) in images.iter().enumerate() {
        let image = load_pgm(path)?;
        model.check_input_size(image.len())?;
        let mut rc = cfg.rc_config(cfg.k);
        rc.seed = derive_seed(cfg.seed, i as u64);
        let trace = run_rc(&model, image.pixels(), &rc)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        let out = cfg.out.join(format!("{stem}_assignment.ppm"));
        let bytes = assignment_ppm(&trace.final_gamma, image.width(), image.height(), &palette, Some(&image.lit()))?;
        write_file(&out, &bytes)?;
        let lit: Vec<bool> = image.lit();
        let conf = confidence(&trace.final_gamma, &lit).ok();
        o.say(format!(
            "{}: {} iterations, final log-likelihood {:.3}, confidence {} -> {}",
            path.display(),
            trace.iterations(),
            trace.final_log_likelihood(),
            conf.map_or("n/a".to_string(), |c| format!("{c:.3}")),
            out.display()
        ));
    }
    o.metrics = json!({"images": images.len()});
    Ok(o)
}

fn truth_assignment(ex: &LabeledExample) -> Result<Assignment> {
    let labels = ex.truth.labels();
    let k = ex.truth.object_count().max(1);
    let mut g = Matrix::zeros(labels.len(), k);
    for (i, l) in labels.iter().enumerate() {
        g.set(i, (*l).min(k - 1), 1.0);
    }
    Assignment::new(g)
}

fn cmd_render(cfg: &RunConfig) -> Result<Outcome> {
    let data = load_dataset(require(&cfg.data, "data")?)?;
    let limit = if cfg.limit == 0 { 10 } else { cfg.limit };
    let examples = limited(&data.examples, limit);
    let palette = Palette::default();
    for (i, ex) in examples.iter().enumerate() {
        write_pgm(&ex.image, cfg.out.join(format!("ex{i:04}_input.pgm")))?;
        if ex.truth.object_count() <= palette.colors.len() {
            let g = truth_assignment(ex)?;
            write_file(&cfg.out.join(format!("ex{i:04}_truth.ppm")), &frame(&g, &data, &ex.image, &palette)?)?;
        }
    }
    let mut o = Outcome::default();
    o.say(format!("rendered {} examples to {}", examples.len(), cfg.out.display()));
    o.metrics = json!({"examples": examples.len()});
    Ok(o)
}
