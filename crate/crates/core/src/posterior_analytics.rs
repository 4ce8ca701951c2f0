//! Closed-form posterior quantities for `q ~ Dir(α)`.
//!
//! Writes `α₀` for the total concentration and `A = α₀ - α_cs` for the proper
//! part. The conditional vector `p ~ Dir(α_1..α_C)` is independent of
//! `q_cs ~ Beta(α_cs, A)`, which gives
//!
//! ```text
//! E(amb)   = 1 - Σ α_k(α_k+1) / (α₀ (A+1))
//! E(amb²)  = R + S (1 - E(amb))² + 2 E(amb) - 1
//! Var(amb) = R + (S - 1)(1 - E(amb))²
//! R = Σ α_k(α_k+1)[(α_k+2)(α_k+3) - α_k(α_k+1)] / (α₀(α₀+1)(A+2)(A+3))
//! S = α₀ (A+1)² / ((α₀+1)(A+2)(A+3))
//! ```
//!
//! The `Modified` measure follows from `amb~ = (C·amb - q_cs)/(C-1)`. The `Old`
//! measure has no elementary expectation and is only available by sampling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frequentist::CountVector;
use crate::measures::MeasureKind;
use crate::numerics::{compensated_sum, digamma, DirichletParams};

/// Negative variances down to this magnitude are rounding noise.
const VARIANCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorMoments {
    pub measure: MeasureKind,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

impl PosteriorMoments {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Conjugate update `α + n`.
pub fn posterior_update(prior: &DirichletParams, counts: &CountVector) -> Result<DirichletParams> {
    if prior.num_categories() != counts.num_categories() {
        return Err(Error::ShapeMismatch { expected: prior.num_categories(), got: counts.num_categories() });
    }
    let proper = prior.proper().iter().zip(counts.proper()).map(|(a, &n)| a + n as f64).collect();
    DirichletParams::new(proper, prior.cs() + counts.cs() as f64)
}

/// `E(H(p)/ln M)` for `p ~ Dir(alpha)` over `M = alpha.len()` entries.
pub fn expected_normalized_entropy(alpha: &[f64]) -> Result<f64> {
    let m = alpha.len();
    if m < 2 {
        return Err(Error::SingleCategoryUnsupported);
    }
    if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter("Dirichlet concentrations must be positive".into()));
    }
    let total = compensated_sum(alpha.iter().copied());
    let mut acc = Vec::with_capacity(m);
    for &a in alpha {
        acc.push(a / total * digamma(a + 1.0)?);
    }
    Ok((digamma(total + 1.0)? - compensated_sum(acc)) / (m as f64).ln())
}

struct Totals {
    all: f64,
    proper: f64,
    cs: f64,
    /// Σ α_k (α_k + 1)
    pair_sum: f64,
}

fn totals(params: &DirichletParams) -> Totals {
    Totals {
        all: params.total(),
        proper: params.proper_total(),
        cs: params.cs(),
        pair_sum: compensated_sum(params.proper().iter().map(|a| a * (a + 1.0))),
    }
}

pub fn expected_amb(params: &DirichletParams) -> f64 {
    let t = totals(params);
    1.0 - t.pair_sum / (t.all * (t.proper + 1.0))
}

/// `E(q_cs) = α_cs / α₀`.
fn expected_cs(t: &Totals) -> f64 {
    t.cs / t.all
}

fn var_cs(t: &Totals) -> f64 {
    t.cs * t.proper / (t.all * t.all * (t.all + 1.0))
}

fn require_two(params: &DirichletParams) -> Result<f64> {
    let c = params.num_categories();
    if c < 2 {
        return Err(Error::SingleCategoryUnsupported);
    }
    Ok(c as f64)
}

pub fn expected_amb_modified(params: &DirichletParams) -> Result<f64> {
    let c = require_two(params)?;
    let t = totals(params);
    Ok((c * expected_amb(params) - expected_cs(&t)) / (c - 1.0))
}

/// The `R` and `S` terms of the second moment.
fn r_and_s(params: &DirichletParams, t: &Totals) -> (f64, f64) {
    let a = t.proper;
    let r_num = compensated_sum(params.proper().iter().map(|&x| {
        let pair = x * (x + 1.0);
        pair * ((x + 2.0) * (x + 3.0) - pair)
    }));
    let r = r_num / (t.all * (t.all + 1.0) * (a + 2.0) * (a + 3.0));
    let s = t.all * (a + 1.0) * (a + 1.0) / ((t.all + 1.0) * (a + 2.0) * (a + 3.0));
    (r, s)
}

pub fn second_moment_amb(params: &DirichletParams) -> f64 {
    let t = totals(params);
    let (r, s) = r_and_s(params, &t);
    let mean = expected_amb(params);
    r + s * (1.0 - mean).powi(2) + 2.0 * mean - 1.0
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v.is_nan() || v < -VARIANCE_CLAMP {
        return Err(Error::Internal(format!("negative variance {v}")));
    }
    Ok(v.max(0.0))
}

pub fn var_amb(params: &DirichletParams) -> Result<f64> {
    let t = totals(params);
    let (r, s) = r_and_s(params, &t);
    let mean = expected_amb(params);
    clamp_variance(r + (s - 1.0) * (1.0 - mean).powi(2))
}

/// `Cov(amb, q_cs) = α_cs / (α₀(α₀+1)) · (1 - E(amb))`.
pub fn cov_amb_qcs(params: &DirichletParams) -> f64 {
    let t = totals(params);
    t.cs / (t.all * (t.all + 1.0)) * (1.0 - expected_amb(params))
}

pub fn var_amb_modified(params: &DirichletParams) -> Result<f64> {
    let c = require_two(params)?;
    let t = totals(params);
    let v = (c * c * var_amb(params)? + var_cs(&t) - 2.0 * c * cov_amb_qcs(params)) / ((c - 1.0) * (c - 1.0));
    clamp_variance(v)
}

/// Mean, second moment and variance of `measure(q)`; `Old` has no closed form.
pub fn moments(params: &DirichletParams, measure: MeasureKind) -> Result<PosteriorMoments> {
    let (mean, variance) = match measure {
        MeasureKind::New => (expected_amb(params), var_amb(params)?),
        MeasureKind::Modified => (expected_amb_modified(params)?, var_amb_modified(params)?),
        MeasureKind::Old => return Err(Error::NoClosedForm(measure)),
    };
    Ok(PosteriorMoments { measure, mean, second_moment: variance + mean * mean, variance })
}
