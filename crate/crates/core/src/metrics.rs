//! Adjusted mutual information between pixel groupings, confidence, and
//! dataset-level scoring of RC runs.
//!
//! Only pixels owned by exactly one ground-truth object are scored. AMI uses
//! the exact permutation-model expectation of the mutual information and, by
//! default, the `max(H_pred, H_true)` normaliser.

use serde::Serialize;

use crate::dae::DaeModel;
use crate::datasets::LabeledExample;
use crate::error::{Error, Result};
use crate::numerics::derive_seed;
use crate::rc::{argmax, run_rc, Assignment, RcConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Cross-tabulates two labelings; labels are compacted in order of first appearance.
    pub fn from_labels(a: &[usize], b: &[usize]) -> Self {
        assert_eq!(a.len(), b.len(), "label vectors differ in length");
        let ca = compact(a);
        let cb = compact(b);
        let rows = ca.iter().max().map_or(0, |m| m + 1);
        let cols = cb.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0u64; cols]; rows];
        for (i, j) in ca.iter().zip(&cb) {
            counts[*i][*j] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let cols = counts.first().map_or(0, Vec::len);
        assert!(counts.iter().all(|r| r.len() == cols), "ragged contingency table");
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..cols).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let total = row_sums.iter().sum();
        ContingencyTable {
            counts,
            row_sums,
            col_sums,
            total,
        }
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// True when each nonempty row meets exactly one nonempty column, i.e. the
    /// two labelings agree up to relabelling.
    pub fn is_bijective(&self) -> bool {
        self.counts.iter().zip(&self.row_sums).all(|(row, rs)| *rs == 0 || row.contains(rs))
            && (0..self.col_sums.len())
                .all(|j| self.col_sums[j] == 0 || self.counts.iter().any(|row| row[j] == self.col_sums[j]))
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        let mut terms = vec![];
        for (i, row) in self.counts.iter().enumerate() {
            for (j, nij) in row.iter().enumerate() {
                if *nij == 0 {
                    continue;
                }
                let nij = *nij as f64;
                let outer = self.row_sums[i] as f64 * self.col_sums[j] as f64;
                terms.push(nij / n * (n * nij / outer).ln());
            }
        }
        ordered_sum(terms)
    }

    /// Exact `E[MI]` under random permutations with fixed marginals.
    pub fn expected_mutual_information(&self) -> f64 {
        let n = self.total as usize;
        let lf = log_factorials(n);
        let nf = n as f64;
        let mut terms = vec![];
        for &a in self.row_sums.iter().filter(|a| **a > 0) {
            for &b in self.col_sums.iter().filter(|b| **b > 0) {
                let (a, b) = (a as usize, b as usize);
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                // grouped so swapping a and b yields bit-identical terms
                let fixed = (lf[a] + lf[n - a]) + (lf[b] + lf[n - b]) - lf[n];
                let outer = a as f64 * b as f64;
                for nij in lo..=hi {
                    let nijf = nij as f64;
                    let log_p = fixed
                        - lf[nij]
                        - (lf[a - nij] + lf[b - nij])
                        - lf[n + nij - a - b];
                    terms.push(nijf / nf * (nf * nijf / outer).ln() * log_p.exp());
                }
            }
        }
        ordered_sum(terms)
    }
}

fn compact(labels: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = vec![];
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(p) => p,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

/// Sums in sorted order so the result does not depend on table orientation or label order.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = Vec::with_capacity(n + 1);
    lf.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        lf.push(acc);
    }
    lf
}

fn entropy(marginals: &[u64], total: u64) -> f64 {
    let n = total as f64;
    ordered_sum(
        marginals
            .iter()
            .filter(|c| **c > 0)
            .map(|c| {
                let p = *c as f64 / n;
                -p * p.ln()
            })
            .collect(),
    )
}

/// Entropy combination in the AMI denominator. `Max` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmiNormalizer {
    #[default]
    Max,
    Arithmetic,
    Geometric,
    Min,
}

impl AmiNormalizer {
    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            AmiNormalizer::Max => a.max(b),
            AmiNormalizer::Arithmetic => (a + b) / 2.0,
            AmiNormalizer::Geometric => (a * b).sqrt(),
            AmiNormalizer::Min => a.min(b),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AmiNormalizer::Max => "max",
            AmiNormalizer::Arithmetic => "arithmetic",
            AmiNormalizer::Geometric => "geometric",
            AmiNormalizer::Min => "min",
        }
    }
}

impl std::str::FromStr for AmiNormalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(AmiNormalizer::Max),
            "arithmetic" => Ok(AmiNormalizer::Arithmetic),
            "geometric" => Ok(AmiNormalizer::Geometric),
            "min" => Ok(AmiNormalizer::Min),
            other => Err(Error::InvalidArgument(format!("unknown AMI normalizer {other:?}"))),
        }
    }
}

/// AMI of two full labelings (no mask).
pub fn ami_unmasked(pred: &[usize], truth: &[usize]) -> f64 {
    let table = ContingencyTable::from_labels(pred, truth);
    ami_from_table(&table, AmiNormalizer::Max)
}

pub fn ami_from_table(table: &ContingencyTable, normalizer: AmiNormalizer) -> f64 {
    let single_rows = table.row_sums.iter().filter(|c| **c > 0).count() <= 1;
    let single_cols = table.col_sums.iter().filter(|c| **c > 0).count() <= 1;
    match (single_rows, single_cols) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    if table.is_bijective() {
        return 1.0;
    }
    let mi = table.mutual_information();
    let emi = table.expected_mutual_information();
    let h = normalizer.combine(entropy(&table.row_sums, table.total), entropy(&table.col_sums, table.total));
    let denom = h - emi;
    if denom.abs() < 1e-15 {
        // every item in its own cluster on both sides
        return 1.0;
    }
    (mi - emi) / denom
}

/// AMI between predicted and true labels over the pixels where `eval_mask` is set.
pub fn ami(pred: &[usize], truth: &[usize], eval_mask: &[bool]) -> Result<f64> {
    ami_with(pred, truth, eval_mask, AmiNormalizer::Max)
}

pub fn ami_with(pred: &[usize], truth: &[usize], eval_mask: &[bool], normalizer: AmiNormalizer) -> Result<f64> {
    if pred.len() != truth.len() || pred.len() != eval_mask.len() {
        return Err(Error::ShapeMismatch {
            op: "ami",
            left: (pred.len(), truth.len()),
            right: (eval_mask.len(), 1),
        });
    }
    let (p, t): (Vec<usize>, Vec<usize>) = eval_mask
        .iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(i, _)| (pred[i], truth[i]))
        .unzip();
    if p.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(ami_from_table(&ContingencyTable::from_labels(&p, &t), normalizer))
}

/// Per-pixel argmax of γ, ties to the lowest cluster index.
pub fn hard_labels(gamma: &Assignment) -> Vec<usize> {
    (0..gamma.pixels()).map(|i| argmax(gamma.row(i))).collect()
}

/// Mean over masked pixels of `max_k γ_ik`.
pub fn confidence(gamma: &Assignment, eval_mask: &[bool]) -> Result<f64> {
    if eval_mask.len() != gamma.pixels() {
        return Err(Error::ShapeMismatch {
            op: "confidence",
            left: (gamma.pixels(), gamma.clusters()),
            right: (eval_mask.len(), 1),
        });
    }
    let maxima: Vec<f64> = eval_mask
        .iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(i, _)| gamma.row(i).iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    if maxima.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(maxima.iter().sum::<f64>() / maxima.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub ami: f64,
    pub confidence: f64,
    pub evaluated_pixel_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleScore {
    pub index: usize,
    pub score: Option<Score>,
    pub error: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    pub final_ll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub failures: usize,
    pub mean_ami: f64,
    pub std_ami: f64,
    pub mean_confidence: f64,
    pub mean_final_ll: f64,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetScore {
    pub examples: Vec<ExampleScore>,
    pub summary: Summary,
}

impl DatasetScore {
    /// `index,ami,confidence,iterations,final_ll` with one row per example.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,ami,confidence,iterations,final_ll\n");
        for e in &self.examples {
            let (a, c) = match &e.score {
                Some(s) => (s.ami.to_string(), s.confidence.to_string()),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!("{},{},{},{},{}\n", e.index, a, c, e.iterations, e.final_ll));
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn score_example(
    model: &DaeModel,
    example: &LabeledExample,
    cfg: &RcConfig,
    normalizer: AmiNormalizer,
    index: usize,
) -> ExampleScore {
    let mut cfg = cfg.clone();
    cfg.seed = derive_seed(cfg.seed, index as u64);
    cfg.keep_snapshots = false;
    let trace = match run_rc(model, example.image.pixels(), &cfg) {
        Ok(t) => t,
        Err(e) => {
            return ExampleScore {
                index,
                score: None,
                error: Some(e.to_string()),
                iterations: 0,
                converged: false,
                final_ll: f64::NAN,
            }
        }
    };
    let mask = example.truth.eval_mask();
    let labels = hard_labels(&trace.final_gamma);
    let scored = ami_with(&labels, &example.truth.labels(), mask, normalizer).and_then(|a| {
        Ok(Score {
            ami: a,
            confidence: confidence(&trace.final_gamma, mask)?,
            evaluated_pixel_count: mask.iter().filter(|m| **m).count(),
        })
    });
    let (score, error) = match scored {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ExampleScore {
        index,
        score,
        error,
        iterations: trace.iterations(),
        converged: trace.converged,
        final_ll: trace.final_log_likelihood(),
    }
}

/// Runs RC on every example and aggregates AMI and confidence.
///
/// Example `i` is initialised from `derive_seed(cfg.seed, i)`. Failures are
/// recorded per example and excluded from the summary statistics.
pub fn score_dataset(model: &DaeModel, examples: &[LabeledExample], cfg: &RcConfig) -> Result<DatasetScore> {
    score_dataset_with(model, examples, cfg, AmiNormalizer::Max)
}

pub fn score_dataset_with(
    model: &DaeModel,
    examples: &[LabeledExample],
    cfg: &RcConfig,
    normalizer: AmiNormalizer,
) -> Result<DatasetScore> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("no examples to score".into()));
    }
    let scored: Vec<ExampleScore> = examples
        .iter()
        .enumerate()
        .map(|(i, ex)| score_example(model, ex, cfg, normalizer, i))
        .collect();
    let ok: Vec<&Score> = scored.iter().filter_map(|e| e.score.as_ref()).collect();
    let amis: Vec<f64> = ok.iter().map(|s| s.ami).collect();
    let (mean_ami, std_ami) = mean_std(&amis);
    let (mean_confidence, _) = mean_std(&ok.iter().map(|s| s.confidence).collect::<Vec<_>>());
    let lls: Vec<f64> = scored.iter().map(|e| e.final_ll).filter(|l| l.is_finite()).collect();
    let (mean_final_ll, _) = mean_std(&lls);
    let converged = scored.iter().filter(|e| e.converged).count();
    let summary = Summary {
        count: scored.len(),
        failures: scored.len() - ok.len(),
        mean_ami,
        std_ami,
        mean_confidence,
        mean_final_ll,
        converged_fraction: converged as f64 / scored.len() as f64,
    };
    Ok(DatasetScore {
        examples: scored,
        summary,
    })
}
