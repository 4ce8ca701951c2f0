//! Estimating ambiguity from a finite number of annotations.
//!
//! The plug-in estimator evaluates a measure at the empirical frequencies
//! `n / n`. For the `New` measure its expectation under `Multinomial(n, q)` is
//! available in closed form,
//!
//! ```text
//! E(amb̂) = 1 - (1 - q_cs^n)/n - [1/(1-q_cs) - (1 - q_cs^n)/(n (1-q_cs)²)] Σ q_k²
//! ```
//!
//! so its bias `-(1 - q_cs^n)/n · (1 - Σ q_k² / (1-q_cs)²)` is never positive
//! and shrinks to zero from below. For the other measures, and as an oracle,
//! [`exhaustive_expected_estimator`] sums over every multinomial outcome.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{MeasureKind, ProbabilityVector, DEGENERACY_TOL};
use crate::numerics::rng::{derive_seed, stream_rng};
use crate::numerics::{compensated_sum, ln_gamma_unchecked, DirichletParams};
use crate::posterior_analytics::{expected_amb, expected_amb_modified, posterior_update};
use crate::posterior_sampling::{sample_transformed, summarize};

/// Largest sample size accepted by [`exhaustive_expected_estimator`].
pub const ENUMERATION_MAX_N: u64 = 12;
/// Largest number of entries (proper categories plus can't-solve) accepted by
/// [`exhaustive_expected_estimator`].
pub const ENUMERATION_MAX_ENTRIES: usize = 4;
/// Posterior draws behind each Bayesian point estimate unless configured.
pub const DEFAULT_POSTERIOR_SAMPLES: usize = 10_000;

/// Response counts for one item: one entry per proper category plus the
/// can't-solve count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountVector {
    proper: Vec<u64>,
    cs: u64,
}

impl CountVector {
    pub fn new(proper: Vec<u64>, cs: u64) -> Self {
        Self { proper, cs }
    }

    pub fn zeros(num_categories: usize) -> Self {
        Self { proper: vec![0; num_categories], cs: 0 }
    }

    pub fn proper(&self) -> &[u64] {
        &self.proper
    }

    pub fn cs(&self) -> u64 {
        self.cs
    }

    pub fn num_categories(&self) -> usize {
        self.proper.len()
    }

    pub fn total(&self) -> u64 {
        self.proper.iter().sum::<u64>() + self.cs
    }

    pub(crate) fn increment(&mut self, category: Option<usize>) {
        match category {
            Some(k) => self.proper[k] += 1,
            None => self.cs += 1,
        }
    }

    /// Entries with the can't-solve count last.
    pub fn to_vec(&self) -> Vec<u64> {
        let mut v = self.proper.clone();
        v.push(self.cs);
        v
    }

    fn from_entries(entries: &[u64]) -> Self {
        let (cs, proper) = entries.split_last().expect("at least one entry");
        Self { proper: proper.to_vec(), cs: *cs }
    }
}

/// The measure evaluated at the empirical frequencies.
pub fn plugin_estimate(counts: &CountVector, measure: MeasureKind) -> Result<f64> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if measure == MeasureKind::New {
        if counts.cs() == n {
            return Ok(1.0);
        }
        let squares: u128 = counts.proper().iter().map(|&c| c as u128 * c as u128).sum();
        let denom = n as u128 * (n - counts.cs()) as u128;
        return Ok(1.0 - squares as f64 / denom as f64);
    }
    measure.evaluate(&ProbabilityVector::from_counts(counts)?)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    Ok(())
}

/// `(1 - q_cs^n)/n` and `Σ q_k² / (1 - q_cs)²`; `None` when all mass is on
/// can't-solve.
fn plugin_terms(q: &ProbabilityVector, n: u64) -> Option<(f64, f64)> {
    let rest = 1.0 - q.cs();
    if rest <= DEGENERACY_TOL {
        return None;
    }
    let miss = (1.0 - q.cs().powf(n as f64)) / n as f64;
    let sq = compensated_sum(q.proper().iter().map(|x| x * x));
    Some((miss, sq / (rest * rest)))
}

/// `E(plug-in)` for the `New` measure under `Multinomial(n, q)`.
pub fn expected_plugin(q: &ProbabilityVector, n: u64) -> Result<f64> {
    check_n(n)?;
    let Some((miss, _)) = plugin_terms(q, n) else {
        return Ok(1.0);
    };
    let rest = 1.0 - q.cs();
    let sq = compensated_sum(q.proper().iter().map(|x| x * x));
    Ok((1.0 - miss) - (1.0 / rest - miss / (rest * rest)) * sq)
}

/// `E(plug-in) - amb(q)` for the `New` measure, in the factored form
/// `-(1 - q_cs^n)/n · (1 - Σ q_k² / (1-q_cs)²)`.
pub fn bias_plugin(q: &ProbabilityVector, n: u64) -> Result<f64> {
    check_n(n)?;
    Ok(match plugin_terms(q, n) {
        None => 0.0,
        Some((miss, ratio)) => -miss * (1.0 - ratio),
    })
}

/// Calls `visit` with every vector of `entries` nonnegative integers summing to `n`.
fn for_each_composition<F: FnMut(&[u64]) -> Result<()>>(entries: usize, n: u64, mut visit: F) -> Result<()> {
    fn rec<F: FnMut(&[u64]) -> Result<()>>(buf: &mut Vec<u64>, entries: usize, left: u64, visit: &mut F) -> Result<()> {
        if buf.len() + 1 == entries {
            buf.push(left);
            let r = visit(buf);
            buf.pop();
            return r;
        }
        for k in 0..=left {
            buf.push(k);
            rec(buf, entries, left - k, visit)?;
            buf.pop();
        }
        Ok(())
    }
    rec(&mut Vec::with_capacity(entries), entries, n, &mut visit)
}

/// `ln Multinomial(counts; n, probs)`, `-∞` for impossible outcomes.
fn ln_multinomial_pmf(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut acc = ln_gamma_unchecked(n as f64 + 1.0);
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += c as f64 * p.ln() - ln_gamma_unchecked(c as f64 + 1.0);
    }
    acc
}

/// `E(estimator(counts))` for `counts ~ Multinomial(n, q)`, by summing over
/// every outcome.
pub fn exhaustive_expected_estimator<F>(q: &ProbabilityVector, n: u64, mut estimator: F) -> Result<f64>
where
    F: FnMut(&CountVector) -> Result<f64>,
{
    check_n(n)?;
    let entries = q.num_categories() + 1;
    if n > ENUMERATION_MAX_N || entries > ENUMERATION_MAX_ENTRIES {
        return Err(Error::TooLarge(format!(
            "enumeration is limited to n <= {ENUMERATION_MAX_N} and {ENUMERATION_MAX_ENTRIES} entries, got n = {n} with {entries}"
        )));
    }
    let probs = q.to_vec();
    let mut terms = Vec::new();
    for_each_composition(entries, n, |c| {
        let lp = ln_multinomial_pmf(c, &probs);
        if lp > f64::NEG_INFINITY {
            terms.push(lp.exp() * estimator(&CountVector::from_entries(c))?);
        }
        Ok(())
    })?;
    Ok(compensated_sum(terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesEstimates {
    pub posterior_mean: f64,
    pub posterior_mode: f64,
}

/// Posterior mean and mode of `measure(q)` under a symmetric `Dir(β)` prior.
///
/// The mean is exact for `New` and `Modified` and a Monte-Carlo average for
/// `Old`; the mode is the histogram mode of `mc_samples` posterior draws.
pub fn bayes_point_estimates(
    counts: &CountVector,
    prior_beta: f64,
    measure: MeasureKind,
    mc_samples: usize,
    seed: u64,
) -> Result<BayesEstimates> {
    let prior = DirichletParams::symmetric(counts.num_categories(), prior_beta)?;
    let post = posterior_update(&prior, counts)?;
    let draws = sample_transformed(&post, measure, mc_samples, seed)?;
    let summary = summarize(&draws, 0.95)?;
    let posterior_mean = match measure {
        MeasureKind::New => expected_amb(&post),
        MeasureKind::Modified => expected_amb_modified(&post)?,
        MeasureKind::Old => summary.mean,
    };
    Ok(BayesEstimates { posterior_mean, posterior_mode: summary.mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "beta", rename_all = "snake_case")]
pub enum Estimator {
    Plugin,
    BayesMean(f64),
    BayesMode(f64),
}

impl Estimator {
    pub fn label(&self) -> String {
        match self {
            Estimator::Plugin => "plugin".to_string(),
            Estimator::BayesMean(b) => format!("bayes_mean({b})"),
            Estimator::BayesMode(b) => format!("bayes_mode({b})"),
        }
    }

    fn prior_beta(&self) -> Option<f64> {
        match self {
            Estimator::Plugin => None,
            Estimator::BayesMean(b) | Estimator::BayesMode(b) => Some(*b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasMethod {
    /// Closed-form expectation.
    Exact,
    /// Sum over every multinomial outcome.
    Enumeration,
    /// Average over simulated count vectors.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasConfig {
    pub measure: MeasureKind,
    pub estimators: Vec<Estimator>,
    pub mc_repeats: usize,
    pub posterior_samples: usize,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            measure: MeasureKind::New,
            estimators: vec![Estimator::Plugin, Estimator::BayesMean(1.0), Estimator::BayesMode(1.0)],
            mc_repeats: 1000,
            posterior_samples: DEFAULT_POSTERIOR_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasCurve {
    pub estimator: Estimator,
    pub label: String,
    /// One entry per sample size.
    pub bias: Vec<f64>,
    pub stderr: Vec<f64>,
    pub method: Vec<BiasMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasSeries {
    pub measure: MeasureKind,
    pub truth: f64,
    pub n_values: Vec<u64>,
    pub curves: Vec<BiasCurve>,
}

impl BiasSeries {
    pub fn curve(&self, label: &str) -> Option<&BiasCurve> {
        self.curves.iter().find(|c| c.label == label)
    }
}

/// One `Multinomial(n, probs)` draw by sequential binomial splitting.
fn sample_multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(probs.len());
    let mut left = n;
    let mut rest = 1.0;
    for &p in &probs[..probs.len() - 1] {
        let x = if left == 0 || rest <= 0.0 {
            0
        } else {
            let share = (p / rest).clamp(0.0, 1.0);
            Binomial::new(left, share).expect("share in [0, 1]").sample(rng)
        };
        out.push(x);
        left -= x;
        rest -= p;
    }
    out.push(left);
    out
}

fn counts_seed(seed: u64, counts: &CountVector) -> u64 {
    counts.proper().iter().chain(std::iter::once(&counts.cs())).fold(seed, |s, &c| derive_seed(s, c))
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Bias of each configured estimator at every sample size in `n_values`.
///
/// The plug-in curve is exact for `New`, enumerated for other measures while
/// the outcome space is small, and simulated otherwise. Bayesian estimators
/// are always simulated: `mc_repeats` count vectors are drawn from
/// `Multinomial(n, q)` with a stream derived from `(seed, n)`, and every
/// estimator sees the same draws.
pub fn bias_curve(q: &ProbabilityVector, n_values: &[u64], config: &BiasConfig, seed: u64) -> Result<BiasSeries> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("n_values must not be empty".into()));
    }
    if n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n_values must be positive and strictly increasing".into()));
    }
    if config.estimators.is_empty() {
        return Err(Error::InvalidParameter("no estimators configured".into()));
    }
    let simulated = config.estimators.iter().any(|e| e.prior_beta().is_some())
        || (config.measure != MeasureKind::New
            && n_values.iter().any(|&n| n > ENUMERATION_MAX_N || q.num_categories() + 1 > ENUMERATION_MAX_ENTRIES));
    if simulated && config.mc_repeats < 2 {
        return Err(Error::InvalidParameter("mc_repeats must be at least 2".into()));
    }
    let measure = config.measure;
    let truth = measure.evaluate(q)?;
    let probs = q.to_vec();
    let mut curves: Vec<BiasCurve> = config
        .estimators
        .iter()
        .map(|e| BiasCurve { estimator: *e, label: e.label(), bias: vec![], stderr: vec![], method: vec![] })
        .collect();

    for &n in n_values {
        let mut draws: Option<Vec<CountVector>> = None;
        let mut simulate = || -> Vec<CountVector> {
            let mut rng = stream_rng(derive_seed(seed, n), 0);
            (0..config.mc_repeats)
                .map(|_| CountVector::from_entries(&sample_multinomial(&mut rng, n, &probs)))
                .collect()
        };
        for curve in curves.iter_mut() {
            let (bias, stderr, method) = match curve.estimator {
                Estimator::Plugin if measure == MeasureKind::New => (bias_plugin(q, n)?, 0.0, BiasMethod::Exact),
                Estimator::Plugin
                    if n <= ENUMERATION_MAX_N && q.num_categories() + 1 <= ENUMERATION_MAX_ENTRIES =>
                {
                    let e = exhaustive_expected_estimator(q, n, |c| plugin_estimate(c, measure))?;
                    (e - truth, 0.0, BiasMethod::Enumeration)
                }
                est => {
                    let sample = draws.get_or_insert_with(&mut simulate);
                    let mut memo: HashMap<&CountVector, f64> = HashMap::new();
                    let mut values = Vec::with_capacity(sample.len());
                    for c in sample.iter() {
                        let v = match memo.get(c) {
                            Some(v) => *v,
                            None => {
                                let v = match est {
                                    Estimator::Plugin => plugin_estimate(c, measure)?,
                                    Estimator::BayesMean(b) | Estimator::BayesMode(b) => {
                                        let s = counts_seed(derive_seed(seed, b.to_bits()), c);
                                        let e = bayes_point_estimates(c, b, measure, config.posterior_samples, s)?;
                                        if matches!(est, Estimator::BayesMean(_)) {
                                            e.posterior_mean
                                        } else {
                                            e.posterior_mode
                                        }
                                    }
                                };
                                memo.insert(c, v);
                                v
                            }
                        };
                        values.push(v - truth);
                    }
                    let (m, se) = mean_and_stderr(&values);
                    (m, se, BiasMethod::MonteCarlo)
                }
            };
            curve.bias.push(bias);
            curve.stderr.push(stderr);
            curve.method.push(method);
        }
    }
    Ok(BiasSeries { measure, truth, n_values: n_values.to_vec(), curves })
}
