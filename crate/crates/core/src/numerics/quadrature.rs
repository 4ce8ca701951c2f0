//! Adaptive Simpson quadrature.

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance and recursion cap for [`adaptive_simpson`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    /// Absolute error target over the whole interval.
    pub tol: f64,
    /// Maximum number of bisections along any branch.
    pub max_depth: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { tol: 1e-8, max_depth: 50 }
    }
}

impl Quadrature {
    pub fn new(tol: f64, max_depth: u32) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) || max_depth == 0 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs tol > 0 and max_depth >= 1, got ({tol}, {max_depth})"
            )));
        }
        Ok(Self { tol, max_depth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Set when some branch hit `max_depth` before meeting its tolerance.
    pub depth_limited: bool,
    pub evaluations: usize,
}

/// Bisections always performed before the error test may accept a panel, so
/// that a peak narrower than the initial panel is not skipped.
const MIN_DEPTH: u32 = 3;

struct State<F> {
    f: F,
    max_depth: u32,
    depth_limited: bool,
    evaluations: usize,
}

impl<F: FnMut(f64) -> f64> State<F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evaluations += 1;
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { x })
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, fa: f64, m: f64, fm: f64, b: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth >= self.max_depth {
            self.depth_limited = true;
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        let l = self.refine(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.refine(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

/// `∫_a^b f(x) dx` by recursive Simpson bisection with Richardson correction.
///
/// Hitting `max_depth` is not an error: the best estimate is returned with
/// `depth_limited` set.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, q: Quadrature) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Domain(format!("integration bounds [{a}, {b}] are not an interval")));
    }
    let mut st = State { f, max_depth: q.max_depth, depth_limited: false, evaluations: 0 };
    if a == b {
        return Ok(Integral { value: 0.0, depth_limited: false, evaluations: 0 });
    }
    let m = 0.5 * (a + b);
    let fa = st.eval(a)?;
    let fm = st.eval(m)?;
    let fb = st.eval(b)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = st.refine(a, fa, m, fm, b, fb, whole, q.tol, 1)?;
    Ok(Integral { value, depth_limited: st.depth_limited, evaluations: st.evaluations })
}
