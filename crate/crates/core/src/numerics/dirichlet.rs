use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::{Deserialize, Serialize};

use super::rng::stream_rng;
use super::special::{compensated_sum, rising_factorial};
use crate::error::{Error, Result};
use crate::measures::ProbabilityVector;

/// Draws per independent random stream. Output for a given seed does not
/// depend on how many draws are requested beyond a prefix.
pub const SAMPLE_BLOCK: usize = 1 << 16;

/// Concentration of a Dirichlet over the proper categories and the
/// can't-solve entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    proper: Vec<f64>,
    cs: f64,
}

impl DirichletParams {
    pub fn new(proper: Vec<f64>, cs: f64) -> Result<Self> {
        if proper.is_empty() {
            return Err(Error::InvalidParameter("Dirichlet needs at least one proper category".into()));
        }
        if let Some(x) = proper.iter().chain(std::iter::once(&cs)).find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet concentrations must be positive and finite, got {x}"
            )));
        }
        Ok(Self { proper, cs })
    }

    /// `Dir(β · 1)` over `num_categories + 1` entries.
    pub fn symmetric(num_categories: usize, beta: f64) -> Result<Self> {
        Self::new(vec![beta; num_categories], beta)
    }

    pub fn proper(&self) -> &[f64] {
        &self.proper
    }

    pub fn cs(&self) -> f64 {
        self.cs
    }

    pub fn num_categories(&self) -> usize {
        self.proper.len()
    }

    /// Sum over the proper entries, `α₀ - α_cs`.
    pub fn proper_total(&self) -> f64 {
        compensated_sum(self.proper.iter().copied())
    }

    /// `α₀`, the sum over all entries.
    pub fn total(&self) -> f64 {
        compensated_sum(self.proper.iter().copied().chain(std::iter::once(self.cs)))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.proper.clone();
        v.push(self.cs);
        v
    }

    /// `count` independent draws; identical for identical seeds.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<ProbabilityVector> {
        let mut out = Vec::with_capacity(count);
        for_each_draw(self, count, seed, |proper, cs| {
            out.push(ProbabilityVector::from_parts_unchecked(proper.to_vec(), cs));
        });
        out
    }
}

/// `E(p_k^s p_l^t)` for `p ~ Dir(alpha)` (indices are 0-based).
pub fn dirichlet_mixed_moment(alpha: &[f64], k: usize, l: usize, s: u32, t: u32) -> Result<f64> {
    for &i in &[k, l] {
        if i >= alpha.len() {
            return Err(Error::Index { index: i, len: alpha.len() });
        }
    }
    if alpha.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidParameter("Dirichlet concentrations must be positive".into()));
    }
    let total = compensated_sum(alpha.iter().copied());
    let numerator = if k == l {
        rising_factorial(alpha[k], s + t)
    } else {
        rising_factorial(alpha[k], s) * rising_factorial(alpha[l], t)
    };
    Ok(numerator / rising_factorial(total, s + t))
}

/// Gamma variate on the log scale. Shapes below 1 use the boost
/// `G_α = G_{α+1} · U^{1/α}`, kept in logs so tiny shapes cannot underflow.
struct LogGamma {
    gamma: Gamma<f64>,
    inv_shape: Option<f64>,
}

impl LogGamma {
    fn new(shape: f64) -> Self {
        let (boosted, inv_shape) = if shape < 1.0 { (shape + 1.0, Some(1.0 / shape)) } else { (shape, None) };
        let gamma = Gamma::new(boosted, 1.0).expect("shape validated positive");
        Self { gamma, inv_shape }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut l = self.gamma.sample(rng).ln();
        if let Some(inv) = self.inv_shape {
            let u: f64 = Open01.sample(rng);
            l += u.ln() * inv;
        }
        l
    }
}

/// Calls `visit(proper, cs)` for each of `count` draws of `Dir(params)`.
///
/// Draw `i` comes from stream `i / SAMPLE_BLOCK` of `seed`.
pub(crate) fn for_each_draw<F: FnMut(&[f64], f64)>(params: &DirichletParams, count: usize, seed: u64, mut visit: F) {
    let c = params.num_categories();
    let samplers: Vec<LogGamma> =
        params.proper.iter().chain(std::iter::once(&params.cs)).map(|&a| LogGamma::new(a)).collect();
    let mut logs = vec![0.0; c + 1];
    let mut proper = vec![0.0; c];
    let mut done = 0usize;
    let mut block = 0u64;
    while done < count {
        let mut rng = stream_rng(seed, block);
        let n = SAMPLE_BLOCK.min(count - done);
        for _ in 0..n {
            let mut max = f64::NEG_INFINITY;
            for (l, s) in logs.iter_mut().zip(&samplers) {
                *l = s.sample(&mut rng);
                max = max.max(*l);
            }
            let mut total = 0.0;
            for l in logs.iter_mut() {
                *l = (*l - max).exp();
                total += *l;
            }
            for (p, w) in proper.iter_mut().zip(&logs) {
                *p = w / total;
            }
            visit(&proper, logs[c] / total);
        }
        done += n;
        block += 1;
    }
}
