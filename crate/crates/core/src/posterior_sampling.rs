//! Monte-Carlo posterior inference for any of the three measures.
//!
//! Draws `q ~ Dir(α)`, maps each draw through the measure and summarizes the
//! resulting sample. The posterior mode is taken as the midpoint of the
//! fullest bin of a 256-bin histogram over `[0, 1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::MeasureKind;
use crate::numerics::rng::derive_seed;
use crate::numerics::{for_each_draw, DirichletParams};

pub const MIN_SUMMARY_SAMPLES: usize = 1000;
pub const MODE_BINS: usize = 256;
/// Quantile levels reported alongside the credible interval.
pub const QUANTILE_LEVELS: [f64; 7] = [0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CredibleInterval {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub samples: usize,
    pub mean: f64,
    pub mode: f64,
    pub sd: f64,
    pub quantiles: Vec<Quantile>,
    pub credible_interval: CredibleInterval,
}

impl PosteriorSummary {
    /// Monte-Carlo standard error of the mean.
    pub fn stderr(&self) -> f64 {
        self.sd / (self.samples as f64).sqrt()
    }

    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|q| q.level == level).map(|q| q.value)
    }
}

/// `count` draws of `measure(q)` with `q ~ Dir(params)`.
pub fn sample_transformed(
    params: &DirichletParams,
    measure: MeasureKind,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    if params.num_categories() < measure.min_categories() {
        return Err(Error::SingleCategoryUnsupported);
    }
    let mut out = Vec::with_capacity(count);
    let mut failure = None;
    for_each_draw(params, count, seed, |proper, cs| match measure.evaluate_raw(proper, cs) {
        Ok(v) => out.push(v),
        Err(e) => {
            if failure.is_none() {
                failure = Some(e);
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Linear interpolation between order statistics (`sorted` must be ascending).
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn histogram_bin(x: f64, bins: usize) -> usize {
    ((x * bins as f64) as usize).min(bins - 1)
}

fn histogram_mode(samples: &[f64], min: f64, max: f64) -> f64 {
    if min == max {
        return min;
    }
    let mut counts = [0usize; MODE_BINS];
    for &x in samples {
        counts[histogram_bin(x, MODE_BINS)] += 1;
    }
    // first bin wins ties
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    (best as f64 + 0.5) / MODE_BINS as f64
}

pub fn summarize(samples: &[f64], credible_mass: f64) -> Result<PosteriorSummary> {
    if samples.len() < MIN_SUMMARY_SAMPLES {
        return Err(Error::TooFewSamples { got: samples.len(), need: MIN_SUMMARY_SAMPLES });
    }
    if !(credible_mass > 0.0 && credible_mass < 1.0) {
        return Err(Error::InvalidParameter(format!("credible mass {credible_mass} outside (0, 1)")));
    }
    if let Some(x) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("sample value {x} outside [0, 1]")));
    }
    let n = samples.len() as f64;
    // shifted by the first draw so constant samples reproduce exactly
    let shift = samples[0];
    let mean = shift + samples.iter().map(|x| x - shift).sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mode = histogram_mode(samples, sorted[0], sorted[sorted.len() - 1]);
    let tail = (1.0 - credible_mass) / 2.0;
    let quantiles =
        QUANTILE_LEVELS.iter().map(|&level| Quantile { level, value: quantile_sorted(&sorted, level) }).collect();
    Ok(PosteriorSummary {
        samples: samples.len(),
        mean,
        mode,
        sd,
        quantiles,
        credible_interval: CredibleInterval {
            lo: quantile_sorted(&sorted, tail),
            hi: quantile_sorted(&sorted, 1.0 - tail),
            mass: credible_mass,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityConfig {
    pub samples_per_repeat: usize,
    pub bins: usize,
    pub repeats: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { samples_per_repeat: 100_000, bins: 256, repeats: 100 }
    }
}

/// Histogram density with its Monte-Carlo spread across repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub bin_edges: Vec<f64>,
    pub median_density: Vec<f64>,
    pub iqr_lo: Vec<f64>,
    pub iqr_hi: Vec<f64>,
}

impl DensityEstimate {
    pub fn bin_width(&self) -> f64 {
        1.0 / self.median_density.len() as f64
    }

    pub fn bin_midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}

/// Normalized histogram of `measure(q)` from one seed.
pub fn histogram_density(
    params: &DirichletParams,
    measure: MeasureKind,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let draws = sample_transformed(params, measure, samples, seed)?;
    let mut counts = vec![0u64; bins];
    for x in draws {
        counts[histogram_bin(x, bins)] += 1;
    }
    let scale = bins as f64 / samples as f64;
    Ok(counts.into_iter().map(|c| c as f64 * scale).collect())
}

/// Per-bin median and interquartile range of `repeats` histograms; repeat `r`
/// uses seed `derive_seed(seed, r)`.
pub fn density_with_uncertainty(
    params: &DirichletParams,
    measure: MeasureKind,
    config: DensityConfig,
    seed: u64,
) -> Result<DensityEstimate> {
    if config.repeats == 0 {
        return Err(Error::InvalidParameter("need at least one repeat".into()));
    }
    let bins = config.bins;
    let mut per_bin = vec![Vec::with_capacity(config.repeats); bins];
    for r in 0..config.repeats {
        let hist = histogram_density(params, measure, config.samples_per_repeat, bins, derive_seed(seed, r as u64))?;
        for (slot, v) in per_bin.iter_mut().zip(hist) {
            slot.push(v);
        }
    }
    let mut median_density = Vec::with_capacity(bins);
    let mut iqr_lo = Vec::with_capacity(bins);
    let mut iqr_hi = Vec::with_capacity(bins);
    for mut values in per_bin {
        values.sort_by(f64::total_cmp);
        iqr_lo.push(quantile_sorted(&values, 0.25));
        median_density.push(quantile_sorted(&values, 0.5));
        iqr_hi.push(quantile_sorted(&values, 0.75));
    }
    let bin_edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    Ok(DensityEstimate { bin_edges, median_density, iqr_lo, iqr_hi })
}
