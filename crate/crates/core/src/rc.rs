//! Reconstruction clustering.
//!
//! Pixels of one image are softly assigned to `K` clusters. Each iteration
//! runs the denoising autoencoder on every cluster's masked image `γ_k ⊙ x`
//! (R-step) and then reassigns pixels by how well each cluster's prediction
//! explains them (E-step). The complete-data log-likelihood is recorded after
//! each E-step and the loop stops once it changes by less than the tolerance.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dae::{clip, DaeModel};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Stream};

/// `N × K` responsibilities; rows are on the simplex (soft) or one-hot (hard).
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    gamma: Matrix,
}

impl Assignment {
    pub fn new(gamma: Matrix) -> Result<Self> {
        if gamma.cols() == 0 {
            return Err(Error::InvalidArgument("assignment needs at least one cluster".into()));
        }
        for i in 0..gamma.rows() {
            let row = gamma.row(i);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|g| !(0.0..=1.0).contains(g)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::NotSimplex(format!("row {i} = {row:?}")));
            }
        }
        Ok(Assignment { gamma })
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        Assignment {
            gamma: Matrix::filled(n, k, 1.0 / k as f64),
        }
    }

    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }

    pub fn pixels(&self) -> usize {
        self.gamma.rows()
    }

    pub fn clusters(&self) -> usize {
        self.gamma.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.gamma.row(i)
    }

    pub fn is_hard(&self) -> bool {
        (0..self.pixels()).all(|i| {
            let row = self.row(i);
            row.iter().filter(|g| **g == 1.0).count() == 1 && row.iter().all(|g| *g == 0.0 || *g == 1.0)
        })
    }

    /// FNV-1a over the bit patterns of γ, for compact trace logs.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.gamma.as_slice() {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    Soft,
    Hard,
}

impl FromStr for AssignmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(AssignmentMode::Soft),
            "hard" => Ok(AssignmentMode::Hard),
            _ => Err(Error::InvalidArgument(format!("unknown assignment mode `{s}`"))),
        }
    }
}

impl AssignmentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignmentMode::Soft => "soft",
            AssignmentMode::Hard => "hard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiMode {
    FixedUniform,
    Estimated,
}

impl FromStr for PiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_uniform" | "uniform" => Ok(PiMode::FixedUniform),
            "estimated" => Ok(PiMode::Estimated),
            _ => Err(Error::InvalidArgument(format!("unknown pi mode `{s}`"))),
        }
    }
}

impl PiMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PiMode::FixedUniform => "fixed_uniform",
            PiMode::Estimated => "estimated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingWeights {
    pi: Vec<f64>,
    mode: PiMode,
}

impl MixingWeights {
    pub fn uniform(k: usize) -> Self {
        MixingWeights {
            pi: vec![1.0 / k as f64; k],
            mode: PiMode::FixedUniform,
        }
    }

    pub fn new(pi: Vec<f64>, mode: PiMode) -> Result<Self> {
        let sum: f64 = pi.iter().sum();
        if pi.is_empty() || pi.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotSimplex(format!("{pi:?}")));
        }
        Ok(MixingWeights { pi, mode })
    }

    pub fn values(&self) -> &[f64] {
        &self.pi
    }

    pub fn mode(&self) -> PiMode {
        self.mode
    }
}

/// Per-cluster object representation `θ_k` and its clipped prediction `μ_·k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub theta: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcConfig {
    pub k: usize,
    pub max_iters: usize,
    pub ll_tolerance: f64,
    pub assignment_mode: AssignmentMode,
    pub pi_mode: PiMode,
    pub seed: u64,
    /// Keep γ and μ of every iteration in the trace.
    #[serde(default = "default_true")]
    pub keep_snapshots: bool,
}

fn default_true() -> bool {
    true
}

impl Default for RcConfig {
    fn default() -> Self {
        RcConfig {
            k: 3,
            max_iters: 15,
            ll_tolerance: 1e-3,
            assignment_mode: AssignmentMode::Soft,
            pi_mode: PiMode::FixedUniform,
            seed: 0,
            keep_snapshots: true,
        }
    }
}

impl RcConfig {
    pub fn with_k(k: usize) -> Self {
        RcConfig {
            k,
            ..RcConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub gamma: Assignment,
    /// `K × N` predictions.
    pub mu: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcTrace {
    pub log_likelihoods: Vec<f64>,
    /// Empty unless [`RcConfig::keep_snapshots`] is set.
    pub snapshots: Vec<Snapshot>,
    pub gamma_digests: Vec<String>,
    pub final_gamma: Assignment,
    pub final_states: Vec<ClusterState>,
    pub final_pi: MixingWeights,
    pub converged: bool,
}

impl RcTrace {
    pub fn iterations(&self) -> usize {
        self.log_likelihoods.len()
    }

    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihoods.last().expect("at least one iteration")
    }

    /// One JSON object per iteration: `{iter, log_likelihood, gamma_digest}`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (i, (ll, digest)) in self.log_likelihoods.iter().zip(&self.gamma_digests).enumerate() {
            let line = serde_json::json!({
                "iter": i + 1,
                "log_likelihood": ll,
                "gamma_digest": digest,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Rows drawn i.i.d. from `U(0, 1)` and normalised onto the simplex.
pub fn init_assignment(n: usize, k: usize, rng: &mut Rng) -> Result<Assignment> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument("init_assignment needs N, K >= 1".into()));
    }
    let mut gamma = Matrix::zeros(n, k);
    for i in 0..n {
        let row = gamma.row_mut(i);
        for g in row.iter_mut() {
            // keep strictly positive so the row can always be normalised
            *g = rng.next_f64().max(f64::MIN_POSITIVE);
        }
        let sum: f64 = row.iter().sum();
        for g in row.iter_mut() {
            *g /= sum;
        }
    }
    Ok(Assignment { gamma })
}

/// `θ_k = f(γ_·k ⊙ x)`, `μ_·k = clip(g(θ_k))` for every cluster.
pub fn r_step(model: &DaeModel, x: &[f64], gamma: &Assignment) -> Result<Vec<ClusterState>> {
    model.check_input_size(x.len())?;
    if gamma.pixels() != x.len() {
        return Err(Error::ShapeMismatch {
            op: "r_step",
            left: gamma.gamma.shape(),
            right: (x.len(), 1),
        });
    }
    let (theta, mu) = r_step_matrices(model, x, gamma)?;
    Ok((0..gamma.clusters())
        .map(|k| ClusterState {
            theta: theta.row(k).to_vec(),
            mu: mu.row(k).to_vec(),
        })
        .collect())
}

fn r_step_matrices(model: &DaeModel, x: &[f64], gamma: &Assignment) -> Result<(Matrix, Matrix)> {
    let (n, k) = gamma.gamma.shape();
    let mut masked = Matrix::zeros(k, n);
    for i in 0..n {
        for (c, g) in gamma.row(i).iter().enumerate() {
            masked.set(c, i, g * x[i]);
        }
    }
    let theta = model.encode_batch(&masked)?;
    let mu = model.decode_batch(&theta)?;
    Ok((theta, mu))
}

#[inline]
fn bernoulli(mu: f64, x: f64) -> f64 {
    if x == 1.0 {
        mu
    } else if x == 0.0 {
        1.0 - mu
    } else {
        mu.powf(x) * (1.0 - mu).powf(1.0 - x)
    }
}

fn check_states(x: &[f64], states: &[ClusterState], pi: &MixingWeights) -> Result<()> {
    if states.is_empty() || states.len() != pi.pi.len() {
        return Err(Error::InvalidArgument(format!(
            "{} cluster states but {} mixing weights",
            states.len(),
            pi.pi.len()
        )));
    }
    if let Some(s) = states.iter().find(|s| s.mu.len() != x.len()) {
        return Err(Error::ShapeMismatch {
            op: "e_step",
            left: (s.mu.len(), 1),
            right: (x.len(), 1),
        });
    }
    Ok(())
}

/// `γ_ik ∝ μ_ik^x_i (1 - μ_ik)^(1 - x_i) π_k`, normalised over clusters.
pub fn e_step_soft(x: &[f64], states: &[ClusterState], pi: &MixingWeights) -> Result<Assignment> {
    check_states(x, states, pi)?;
    let mu = stack_mu(states);
    Ok(soft_from_mu(x, &mu, &pi.pi))
}

/// Soft E-step followed by a one-hot argmax per pixel (ties go to the lowest index).
pub fn e_step_hard(x: &[f64], states: &[ClusterState], pi: &MixingWeights) -> Result<Assignment> {
    check_states(x, states, pi)?;
    let mu = stack_mu(states);
    Ok(harden(soft_from_mu(x, &mu, &pi.pi)))
}

fn stack_mu(states: &[ClusterState]) -> Matrix {
    let n = states[0].mu.len();
    let data = states.iter().flat_map(|s| s.mu.iter().map(|m| clip(*m))).collect();
    Matrix::from_vec(states.len(), n, data).expect("consistent state lengths")
}

fn soft_from_mu(x: &[f64], mu: &Matrix, pi: &[f64]) -> Assignment {
    let k = mu.rows();
    let mut gamma = Matrix::zeros(x.len(), k);
    for (i, xi) in x.iter().enumerate() {
        let row = gamma.row_mut(i);
        let mut total = 0.0;
        for (c, g) in row.iter_mut().enumerate() {
            *g = bernoulli(mu.get(c, i), *xi) * pi[c];
            total += *g;
        }
        for g in row.iter_mut() {
            *g /= total;
        }
    }
    Assignment { gamma }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = c;
        }
    }
    best
}

fn harden(mut a: Assignment) -> Assignment {
    for i in 0..a.pixels() {
        let row = a.gamma.row_mut(i);
        let hot = argmax(row);
        row.fill(0.0);
        row[hot] = 1.0;
    }
    a
}

/// `Σ_i Σ_k γ_ik [x_i ln μ_ik + (1 - x_i) ln(1 - μ_ik) + ln π_k]`.
pub fn complete_log_likelihood(
    x: &[f64],
    gamma: &Assignment,
    states: &[ClusterState],
    pi: &MixingWeights,
) -> Result<f64> {
    check_states(x, states, pi)?;
    if gamma.pixels() != x.len() || gamma.clusters() != states.len() {
        return Err(Error::ShapeMismatch {
            op: "complete_log_likelihood",
            left: gamma.gamma.shape(),
            right: (x.len(), states.len()),
        });
    }
    Ok(log_likelihood_from_mu(x, gamma, &stack_mu(states), &pi.pi))
}

fn log_likelihood_from_mu(x: &[f64], gamma: &Assignment, mu: &Matrix, pi: &[f64]) -> f64 {
    let ln_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
    let mut ll = 0.0;
    for (i, xi) in x.iter().enumerate() {
        for (c, g) in gamma.row(i).iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            let m = clip(mu.get(c, i));
            ll += g * (xi * m.ln() + (1.0 - xi) * (1.0 - m).ln() + ln_pi[c]);
        }
    }
    ll
}

/// `π_k = Σ_i γ_ik / N`.
pub fn update_pi(gamma: &Assignment) -> MixingWeights {
    let n = gamma.pixels() as f64;
    let mut pi: Vec<f64> = gamma.gamma.column_sums().into_iter().map(|s| s / n).collect();
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    MixingWeights {
        pi,
        mode: PiMode::Estimated,
    }
}

/// Runs RC on one image: random init, then R-step, optional π update, E-step
/// and log-likelihood per iteration until `|Δll| < ll_tolerance` or `max_iters`.
pub fn run_rc(model: &DaeModel, x: &[f64], cfg: &RcConfig) -> Result<RcTrace> {
    cfg.validate()?;
    model.check_input_size(x.len())?;
    let mut rng = Rng::for_stream(cfg.seed, Stream::RcInit);
    let mut gamma = init_assignment(x.len(), cfg.k, &mut rng)?;
    let mut pi = MixingWeights::uniform(cfg.k);

    let mut log_likelihoods = Vec::with_capacity(cfg.max_iters);
    let mut snapshots = vec![];
    let mut gamma_digests = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    let mut last = None;

    for _ in 0..cfg.max_iters {
        let (theta, mu) = r_step_matrices(model, x, &gamma)?;
        if cfg.pi_mode == PiMode::Estimated {
            pi = update_pi(&gamma);
        }
        gamma = soft_from_mu(x, &mu, &pi.pi);
        if cfg.assignment_mode == AssignmentMode::Hard {
            gamma = harden(gamma);
        }
        let ll = log_likelihood_from_mu(x, &gamma, &mu, &pi.pi);
        gamma_digests.push(gamma.digest());
        if cfg.keep_snapshots {
            snapshots.push(Snapshot {
                gamma: gamma.clone(),
                mu: mu.clone(),
            });
        }
        let done = log_likelihoods
            .last()
            .is_some_and(|prev: &f64| (ll - prev).abs() < cfg.ll_tolerance);
        log_likelihoods.push(ll);
        last = Some((theta, mu));
        if done {
            converged = true;
            break;
        }
    }

    let (theta, mu) = last.expect("max_iters >= 1");
    let final_states = (0..cfg.k)
        .map(|c| ClusterState {
            theta: theta.row(c).to_vec(),
            mu: mu.row(c).to_vec(),
        })
        .collect();
    Ok(RcTrace {
        log_likelihoods,
        snapshots,
        gamma_digests,
        final_gamma: gamma,
        final_states,
        final_pi: pi,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::{Activation, EPSILON};
    use proptest::prelude::*;
    use crate::numerics::Rng;

    fn states_from(mu_rows: &[Vec<f64>]) -> Vec<ClusterState> {
        mu_rows
            .iter()
            .map(|m| ClusterState {
                theta: vec![],
                mu: m.clone(),
            })
            .collect()
    }

    /// Direct per-pixel evaluation of the posterior, written independently.
    fn brute_force_gamma(x: &[f64], mu: &[Vec<f64>], pi: &[f64]) -> Vec<Vec<f64>> {
        x.iter()
            .enumerate()
            .map(|(i, xi)| {
                let lik: Vec<f64> = (0..mu.len())
                    .map(|k| mu[k][i].powf(*xi) * (1.0 - mu[k][i]).powf(1.0 - xi) * pi[k])
                    .collect();
                let z: f64 = lik.iter().sum();
                lik.iter().map(|l| l / z).collect()
            })
            .collect()
    }

    fn brute_force_ll(x: &[f64], gamma: &[Vec<f64>], mu: &[Vec<f64>], pi: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..x.len() {
            for k in 0..pi.len() {
                let p = mu[k][i].powf(x[i]) * (1.0 - mu[k][i]).powf(1.0 - x[i]);
                total += gamma[i][k] * (p.ln() + pi[k].ln());
            }
        }
        total
    }

    fn random_instance(seed: u64, n: usize, k: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = Rng::new(seed);
        let x = (0..n).map(|_| if rng.bernoulli(0.4) { 1.0 } else { 0.0 }).collect();
        let mu = (0..k)
            .map(|_| (0..n).map(|_| clip(rng.next_f64())).collect())
            .collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.next_f64() + 0.05).collect();
        let s: f64 = raw.iter().sum();
        (x, mu, raw.iter().map(|r| r / s).collect())
    }

    #[test]
    fn init_single_cluster_is_all_ones() {
        let mut rng = Rng::new(1);
        let a = init_assignment(50, 1, &mut rng).unwrap();
        assert!(a.gamma().as_slice().iter().all(|g| *g == 1.0));
    }

    #[test]
    fn init_rows_sum_to_one_and_are_seeded() {
        for k in 1..6 {
            let a = init_assignment(100, k, &mut Rng::new(3)).unwrap();
            let b = init_assignment(100, k, &mut Rng::new(3)).unwrap();
            assert_eq!(a, b);
            for i in 0..100 {
                assert!((a.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn e_step_identical_predictions_give_prior() {
        let pi = MixingWeights::new(vec![0.2, 0.3, 0.5], PiMode::Estimated).unwrap();
        let mu = vec![0.3, 0.8, 0.5];
        let states = states_from(&[mu.clone(), mu.clone(), mu]);
        let g = e_step_soft(&[1.0, 0.0, 1.0], &states, &pi).unwrap();
        for i in 0..3 {
            for (a, b) in g.row(i).iter().zip(pi.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn e_step_hand_values() {
        let pi = MixingWeights::uniform(2);
        let g = e_step_soft(&[1.0], &states_from(&[vec![0.9], vec![0.1]]), &pi).unwrap();
        assert!((g.row(0)[0] - 0.9).abs() < 1e-12 && (g.row(0)[1] - 0.1).abs() < 1e-12);
        let g = e_step_soft(&[0.0], &states_from(&[vec![0.9], vec![0.2]]), &pi).unwrap();
        assert!((g.row(0)[0] - 0.1 / 0.9).abs() < 1e-12);
        assert!((g.row(0)[1] - 0.8 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn hard_e_step_argmax_and_ties() {
        let pi = MixingWeights::uniform(2);
        let g = e_step_hard(&[1.0], &states_from(&[vec![0.6], vec![0.4]]), &pi).unwrap();
        assert_eq!(g.row(0), &[1.0, 0.0]);
        let g = e_step_hard(&[1.0], &states_from(&[vec![0.5], vec![0.5]]), &pi).unwrap();
        assert_eq!(g.row(0), &[1.0, 0.0]);
        let g = e_step_hard(&[0.0], &states_from(&[vec![0.6], vec![0.4]]), &pi).unwrap();
        assert_eq!(g.row(0), &[0.0, 1.0]);
        assert!(g.is_hard());
    }

    #[test]
    fn log_likelihood_half_predictions() {
        let n = 20;
        for k in 1..5 {
            let x: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
            let states = states_from(&vec![vec![0.5; n]; k]);
            let pi = MixingWeights::uniform(k);
            let gamma = init_assignment(n, k, &mut Rng::new(k as u64)).unwrap();
            let ll = complete_log_likelihood(&x, &gamma, &states, &pi).unwrap();
            let expected = n as f64 * (0.5f64.ln() - (k as f64).ln());
            assert!((ll - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn log_likelihood_perfect_fit() {
        let x = vec![1.0, 0.0, 0.0, 1.0];
        let states = states_from(&[x.clone()]);
        let gamma = Assignment::new(Matrix::filled(4, 1, 1.0)).unwrap();
        let ll = complete_log_likelihood(&x, &gamma, &states, &MixingWeights::uniform(1)).unwrap();
        assert!((ll - 4.0 * (1.0 - EPSILON).ln()).abs() < 1e-12);
    }

    #[test]
    fn update_pi_values() {
        let a = Assignment::uniform(6, 3);
        for p in update_pi(&a).values() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        let mut g = Matrix::zeros(5, 3);
        for i in 0..5 {
            g.set(i, 0, 1.0);
        }
        assert_eq!(update_pi(&Assignment::new(g).unwrap()).values(), &[1.0, 0.0, 0.0]);
        let g = Matrix::from_rows(&vec![vec![0.25, 0.75]; 4]).unwrap();
        assert_eq!(update_pi(&Assignment::new(g).unwrap()).values(), &[0.25, 0.75]);
    }

    fn small_model() -> DaeModel {
        DaeModel::new_random(16, 6, Activation::Tanh, 4)
    }

    fn image16() -> Vec<f64> {
        (0..16).map(|i| if i % 5 < 2 { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn r_step_full_and_empty_masks() {
        let model = small_model();
        let x = image16();
        let gamma = Assignment::new(Matrix::filled(16, 1, 1.0)).unwrap();
        let s = r_step(&model, &x, &gamma).unwrap();
        assert_eq!(s[0].theta, model.encode(&x).unwrap());
        let mut g = Matrix::zeros(16, 2);
        for i in 0..16 {
            g.set(i, 0, 1.0);
        }
        let s = r_step(&model, &x, &Assignment::new(g).unwrap()).unwrap();
        let empty = model.encode(&[0.0; 16]).unwrap();
        assert_eq!(s[1].theta, empty);
        assert_eq!(s[1].mu, model.decode(&empty).unwrap());
    }

    #[test]
    fn single_cluster_reduces_to_iterated_dae() {
        let model = small_model();
        let x = image16();
        let cfg = RcConfig {
            k: 1,
            max_iters: 4,
            ll_tolerance: 0.0,
            ..RcConfig::default()
        };
        let trace = run_rc(&model, &x, &cfg).unwrap();
        assert_eq!(trace.iterations(), 4);
        // γ stays all-ones, so every iteration is one plain DAE pass on x
        let mu = model.decode(&model.encode(&x).unwrap()).unwrap();
        for snap in &trace.snapshots {
            assert!(snap.gamma.gamma().as_slice().iter().all(|g| *g == 1.0));
            assert_eq!(snap.mu.row(0), &mu[..]);
        }
    }

    #[test]
    fn run_rc_respects_max_iters_and_determinism() {
        let model = small_model();
        let x = image16();
        let one = run_rc(&model, &x, &RcConfig { max_iters: 1, ..RcConfig::with_k(3) }).unwrap();
        assert_eq!(one.iterations(), 1);
        assert!(!one.converged);
        let cfg = RcConfig {
            seed: 9,
            ..RcConfig::with_k(3)
        };
        let a = run_rc(&model, &x, &cfg).unwrap();
        let b = run_rc(&model, &x, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iterations() <= cfg.max_iters);
        assert_eq!(a.to_json_lines().lines().count(), a.iterations());
    }

    #[test]
    fn run_rc_invariants_hold_every_iteration() {
        let model = small_model();
        let x = image16();
        for mode in [AssignmentMode::Soft, AssignmentMode::Hard] {
            for pi_mode in [PiMode::FixedUniform, PiMode::Estimated] {
                let cfg = RcConfig {
                    k: 4,
                    assignment_mode: mode,
                    pi_mode,
                    ll_tolerance: 0.0,
                    ..RcConfig::default()
                };
                let t = run_rc(&model, &x, &cfg).unwrap();
                for snap in &t.snapshots {
                    for i in 0..16 {
                        let row = snap.gamma.row(i);
                        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    }
                    if mode == AssignmentMode::Hard {
                        assert!(snap.gamma.is_hard());
                    }
                    assert!(snap.mu.as_slice().iter().all(|m| *m >= EPSILON && *m <= 1.0 - EPSILON));
                }
                assert!(t.log_likelihoods.iter().all(|l| l.is_finite()));
            }
        }
    }

    #[test]
    fn run_rc_rejects_bad_config() {
        let model = small_model();
        assert!(run_rc(&model, &image16(), &RcConfig::with_k(0)).is_err());
        assert!(run_rc(&model, &[0.0; 3], &RcConfig::with_k(2)).is_err());
    }

    proptest! {
        #[test]
        fn soft_e_step_matches_brute_force(seed in any::<u64>(), n in 1usize..30, k in 1usize..6) {
            let (x, mu, pi) = random_instance(seed, n, k);
            let weights = MixingWeights::new(pi.clone(), PiMode::Estimated).unwrap();
            let g = e_step_soft(&x, &states_from(&mu), &weights).unwrap();
            let oracle = brute_force_gamma(&x, &mu, &pi);
            for i in 0..n {
                prop_assert!((g.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
                for c in 0..k {
                    prop_assert!((g.row(i)[c] - oracle[i][c]).abs() < 1e-12);
                }
            }
            let hard = e_step_hard(&x, &states_from(&mu), &weights).unwrap();
            prop_assert!(hard.is_hard());
        }

        #[test]
        fn log_likelihood_matches_brute_force(seed in any::<u64>(), n in 1usize..30, k in 1usize..6) {
            let (x, mu, pi) = random_instance(seed, n, k);
            let gamma = init_assignment(n, k, &mut Rng::new(seed ^ 1)).unwrap();
            let weights = MixingWeights::new(pi.clone(), PiMode::Estimated).unwrap();
            let ll = complete_log_likelihood(&x, &gamma, &states_from(&mu), &weights).unwrap();
            let g: Vec<Vec<f64>> = (0..n).map(|i| gamma.row(i).to_vec()).collect();
            let oracle = brute_force_ll(&x, &g, &mu, &pi);
            prop_assert!((ll - oracle).abs() <= 1e-10 * oracle.abs().max(1.0));
        }

        #[test]
        fn uniform_pi_term_is_constant(seed in any::<u64>(), n in 1usize..30, k in 1usize..6) {
            let (x, mu, _) = random_instance(seed, n, k);
            let states = states_from(&mu);
            let uniform = MixingWeights::uniform(k);
            let g1 = init_assignment(n, k, &mut Rng::new(seed ^ 2)).unwrap();
            let g2 = init_assignment(n, k, &mut Rng::new(seed ^ 3)).unwrap();
            let ll1 = complete_log_likelihood(&x, &g1, &states, &uniform).unwrap();
            let ll2 = complete_log_likelihood(&x, &g2, &states, &uniform).unwrap();
            let term = |g: &Assignment| -> f64 {
                (0..n).map(|i| (0..k).map(|c| g.row(i)[c] * bernoulli(clip(mu[c][i]), x[i]).ln()).sum::<f64>()).sum()
            };
            let offset = -(n as f64) * (k as f64).ln();
            prop_assert!((ll1 - term(&g1) - offset).abs() < 1e-9);
            prop_assert!(((ll1 - ll2) - (term(&g1) - term(&g2))).abs() < 1e-9);
        }

        #[test]
        fn hard_assignment_invariant_under_rescaling(seed in any::<u64>(), n in 1usize..20, k in 2usize..5, scale in 0.01f64..100.0) {
            let (x, mu, pi) = random_instance(seed, n, k);
            let weights = MixingWeights::new(pi.clone(), PiMode::Estimated).unwrap();
            let hard = e_step_hard(&x, &states_from(&mu), &weights).unwrap();
            for i in 0..n {
                let unnormalised: Vec<f64> = (0..k).map(|c| bernoulli(mu[c][i], x[i]) * pi[c] * scale).collect();
                prop_assert_eq!(hard.row(i)[argmax(&unnormalised)], 1.0);
            }
        }
    }
}
