use serde::Serialize;

use super::special::{ln_beta, regularized_incomplete_beta};
use crate::error::{Error, Result};

/// Shape parameters of a `Beta(alpha, beta)` distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
    #[serde(skip)]
    ln_norm: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Beta shapes must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta, ln_norm: ln_beta(alpha, beta)? })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Density at `x ∈ [0, 1]`.
    ///
    /// At an endpoint with a zero exponent the finite limit is returned; with a
    /// negative exponent the density diverges and `f64::INFINITY` is returned.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("Beta density argument {x} outside [0, 1]")));
        }
        Ok(self.pdf_unchecked(x))
    }

    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        let (a1, b1) = (self.alpha - 1.0, self.beta - 1.0);
        if x <= 0.0 {
            return endpoint_density(a1, self.ln_norm);
        }
        if x >= 1.0 {
            return endpoint_density(b1, self.ln_norm);
        }
        (a1 * x.ln() + b1 * (-x).ln_1p() - self.ln_norm).exp()
    }

    /// Density at `1 - y`, accurate when `y` is tiny.
    pub(crate) fn pdf_complement_unchecked(&self, y: f64) -> f64 {
        let (a1, b1) = (self.alpha - 1.0, self.beta - 1.0);
        if y <= 0.0 {
            return endpoint_density(b1, self.ln_norm);
        }
        if y >= 1.0 {
            return endpoint_density(a1, self.ln_norm);
        }
        (a1 * (-y).ln_1p() + b1 * y.ln() - self.ln_norm).exp()
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        regularized_incomplete_beta(self.alpha, self.beta, x)
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// `E(π^n) = Π (α+i) / Π (α+β+i)`, `i = 0..n-1`.
    pub fn moment(&self, n: u32) -> f64 {
        // ratio of rising factorials, accumulated termwise to avoid overflow
        (0..n)
            .map(|i| (self.alpha + i as f64) / (self.alpha + self.beta + i as f64))
            .product()
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    /// `E(π (1 - π)) = αβ / ((α+β)(α+β+1))`.
    pub fn mixed_expectation(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * (s + 1.0))
    }

    /// Same moment as [`BetaParams::moment`] computed as a plain ratio of
    /// rising factorials; kept for cross-checking.
    #[cfg(test)]
    fn moment_ratio(&self, n: u32) -> f64 {
        use super::special::rising_factorial;
        rising_factorial(self.alpha, n) / rising_factorial(self.alpha + self.beta, n)
    }
}

/// Density at the endpoint whose exponent is `e_here`; the other factor is 1.
fn endpoint_density(e_here: f64, ln_norm: f64) -> f64 {
    if e_here > 0.0 {
        0.0
    } else if e_here == 0.0 {
        (-ln_norm).exp()
    } else {
        f64::INFINITY
    }
}
