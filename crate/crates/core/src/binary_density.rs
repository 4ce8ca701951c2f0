//! Exact posterior density of ambiguity for two proper categories.
//!
//! With `q = (p(1-u), (1-p)(1-u), u)` the posterior factorizes into
//! `u ~ Beta(α_cs, α⁺ + α⁻)` and `p ~ Beta(α⁺, α⁻)`. For a fixed `u` the
//! measure is symmetric in `p ↔ 1-p`, and the density of `a = measure(q)` is
//!
//! ```text
//! f(a) = ∫_{g(a)}^{a} f_cs(u) [f_p(ξ) + f_p(1-ξ)] ∂ξ/∂a du
//! ```
//!
//! where `ξ(a, u) ≤ 1/2` is the smaller root of `measure = a` in `p`.
//! The integrand has power-law singularities at both ends of the `u` range;
//! each half of the range is integrated after substituting `u = g + s^m` or
//! `u = a - s^m` with `m` chosen from the Beta shapes, and the algebra below
//! is arranged so the square-root factors cancel exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frequentist::CountVector;
use crate::measures::MeasureKind;
use crate::numerics::{adaptive_simpson, BetaParams, DirichletParams, Quadrature};

/// Tolerance for slightly negative radicands.
const RADICAND_TOL: f64 = 1e-12;
/// Denominators below this make `∂ξ/∂a` singular.
const SINGULAR_DENOMINATOR: f64 = 1e-300;
/// Substituted variables start this fraction of their range away from zero,
/// where the integrand may be `0 · ∞`.
const S_FLOOR: f64 = 1e-9;
/// Same for the outer variables, large enough that `1 - s²` stays below 1.
const OUTER_S_FLOOR: f64 = 1e-6;
/// Tolerance of the pilot pass that sets the scale of the density.
const COARSE_TOL: f64 = 1e-3;
/// Default tabulation grid.
pub const GRID_POINTS: usize = 512;
pub const GRID_EDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinaryCounts {
    pub n_plus: u64,
    pub n_minus: u64,
    pub n_cs: u64,
}

impl BinaryCounts {
    pub fn new(n_plus: u64, n_minus: u64, n_cs: u64) -> Self {
        Self { n_plus, n_minus, n_cs }
    }

    pub fn total(&self) -> u64 {
        self.n_plus + self.n_minus + self.n_cs
    }

    /// `Dir(n⁺ + β, n⁻ + β | n_cs + β)`.
    pub fn posterior(&self, prior_beta: f64) -> Result<DirichletParams> {
        DirichletParams::new(
            vec![self.n_plus as f64 + prior_beta, self.n_minus as f64 + prior_beta],
            self.n_cs as f64 + prior_beta,
        )
    }
}

impl From<BinaryCounts> for CountVector {
    fn from(c: BinaryCounts) -> Self {
        CountVector::new(vec![c.n_plus, c.n_minus], c.n_cs)
    }
}

impl TryFrom<&CountVector> for BinaryCounts {
    type Error = Error;

    fn try_from(c: &CountVector) -> Result<Self> {
        match c.proper() {
            &[plus, minus] => Ok(Self::new(plus, minus, c.cs())),
            other => Err(Error::ShapeMismatch { expected: 2, got: other.len() }),
        }
    }
}

fn require_supported(measure: MeasureKind) -> Result<()> {
    match measure {
        MeasureKind::New | MeasureKind::Modified => Ok(()),
        MeasureKind::Old => Err(Error::NoClosedForm(MeasureKind::Old)),
    }
}

/// `g(a)`: `max(0, 2a - 1)` for `New`, `0` for `Modified`.
pub fn lower_bound(a: f64, measure: MeasureKind) -> f64 {
    match measure {
        MeasureKind::New => (2.0 * a - 1.0).max(0.0),
        _ => 0.0,
    }
}

/// `(1 - u, r)` where `ξ = (1 - √r)/2`.
///
/// New: `r = 2(1-a)/(1-u) - 1 = (1 - 2a + u)/(1 - u)`.
/// Modified: `r = (1-a)/(1-u)`.
fn radicand(a: f64, u: f64, measure: MeasureKind) -> Result<(f64, f64)> {
    let one_minus_u = 1.0 - u;
    if one_minus_u <= 0.0 {
        return Err(Error::Domain(format!("u = {u} must be below 1")));
    }
    let num = match measure {
        MeasureKind::New => 1.0 - 2.0 * a + u,
        _ => 1.0 - a,
    };
    let r = num / one_minus_u;
    if r < -RADICAND_TOL {
        return Err(Error::Domain(format!("negative radicand {r} at a = {a}, u = {u}")));
    }
    Ok((one_minus_u, r.max(0.0)))
}

pub fn xi(a: f64, u: f64, measure: MeasureKind) -> Result<f64> {
    require_supported(measure)?;
    let (_, r) = radicand(a, u, measure)?;
    Ok(0.5 * (1.0 - r.sqrt()))
}

/// `∂ξ/∂a` at fixed `u`.
pub fn xi_partial_a(a: f64, u: f64, measure: MeasureKind) -> Result<f64> {
    require_supported(measure)?;
    let (one_minus_u, _) = radicand(a, u, measure)?;
    let prod = match measure {
        MeasureKind::New => 4.0 * one_minus_u * (1.0 - 2.0 * a + u),
        _ => 16.0 * (1.0 - a) * one_minus_u,
    };
    if !(prod.sqrt() >= SINGULAR_DENOMINATOR) {
        return Err(Error::SingularPoint(format!("dξ/da at a = {a}, u = {u}")));
    }
    Ok(1.0 / prod.sqrt())
}

struct Posterior {
    cs: BetaParams,
    p: BetaParams,
    measure: MeasureKind,
    /// Exponents of the substitutions `u = g + s^m` and `u = a - s^m`.
    m_lower: f64,
    m_upper: f64,
}

/// Smallest even-power substitution that turns `x^(α-1) dx` into a bounded
/// integrand in `s`.
fn substitution_exponent(alpha: f64) -> f64 {
    if alpha >= 1.0 {
        2.0
    } else {
        2.0 / alpha
    }
}

fn power(s: f64, m: f64) -> (f64, f64) {
    if m == 2.0 {
        (s * s, 2.0 * s)
    } else {
        (s.powf(m), m * s.powf(m - 1.0))
    }
}

impl Posterior {
    fn new(counts: BinaryCounts, prior_beta: f64, measure: MeasureKind) -> Result<Self> {
        require_supported(measure)?;
        if !(prior_beta > 0.0 && prior_beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("prior beta must be positive, got {prior_beta}")));
        }
        let plus = counts.n_plus as f64 + prior_beta;
        let minus = counts.n_minus as f64 + prior_beta;
        let alpha_cs = counts.n_cs as f64 + prior_beta;
        Ok(Self {
            cs: BetaParams::new(alpha_cs, plus + minus)?,
            p: BetaParams::new(plus, minus)?,
            measure,
            m_lower: substitution_exponent(alpha_cs),
            m_upper: substitution_exponent(plus.min(minus)),
        })
    }

    /// The `New` density is infinite at 1/2 when `u^(α_cs - 1)` meets the
    /// `u^(-1/2)` pole of `∂ξ/∂a` there.
    fn infinite_at(&self, a: f64) -> bool {
        self.measure == MeasureKind::New && a == 0.5 && self.cs.alpha() <= 0.5
    }

    /// Integrand times the Jacobian of `u = g + s^m` (lower half) or
    /// `u = a - s^m` (upper half).
    fn integrand(&self, a: f64, s: f64, upper: bool) -> f64 {
        let g = lower_bound(a, self.measure);
        let m = if upper { self.m_upper } else { self.m_lower };
        let (v, dv) = power(s, m);
        // u and a - u, the latter exact in the upper half
        let (u, gap) = if upper { (a - v, v) } else { (g + v, (a - g - v).max(0.0)) };
        let one_minus_u = 1.0 - u;
        let (xi, jac) = match self.measure {
            MeasureKind::New => {
                // 1 - 2a + u, exact in the lower half when g = 2a - 1
                let d2 = if upper { 1.0 - a - v } else { (1.0 - 2.0 * a).max(0.0) + v };
                let d2 = d2.max(0.0);
                let root = (d2 / one_minus_u).sqrt();
                // 1 - √r = 2(a - u) / ((1 - u)(1 + √r))
                let xi = gap / (one_minus_u * (1.0 + root));
                let jac = if upper || a <= 0.5 {
                    dv / (2.0 * (one_minus_u * d2).sqrt())
                } else {
                    // d2 = s^m here
                    0.5 * m * s.powf(0.5 * m - 1.0) / one_minus_u.sqrt()
                };
                (xi, jac)
            }
            _ => {
                let root = ((1.0 - a) / one_minus_u).sqrt();
                let xi = 0.5 * gap / (one_minus_u * (1.0 + root));
                (xi, dv / (4.0 * ((1.0 - a) * one_minus_u).sqrt()))
            }
        };
        let xi = xi.min(0.5);
        self.cs.pdf_unchecked(u) * (self.p.pdf_unchecked(xi) + self.p.pdf_complement_unchecked(xi)) * jac
    }

    fn density(&self, a: f64, q: Quadrature) -> Result<f64> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("density argument {a} outside (0, 1)")));
        }
        if self.infinite_at(a) {
            return Ok(f64::INFINITY);
        }
        let g = lower_bound(a, self.measure);
        let mid = 0.5 * (g + a);
        let s_lo = (mid - g).powf(1.0 / self.m_lower);
        let s_hi = (a - mid).powf(1.0 / self.m_upper);
        let halves = |tol: f64| -> Result<f64> {
            let half = Quadrature { tol: 0.5 * tol, ..q };
            let lower = adaptive_simpson(|s| self.integrand(a, s.max(S_FLOOR * s_lo), false), 0.0, s_lo, half)?;
            let upper = adaptive_simpson(|s| self.integrand(a, s.max(S_FLOOR * s_hi), true), 0.0, s_hi, half)?;
            Ok(lower.value + upper.value)
        };
        // relative accuracy where the density is large, e.g. near a = 1
        let scale = halves(COARSE_TOL)?.abs().max(1.0);
        Ok(halves(q.tol * scale)?.max(0.0))
    }

    /// Density for use inside an outer quadrature. An infinite value can only
    /// sit on a panel endpoint at 1/2, where the singularity is logarithmic,
    /// so it is dropped as a single point.
    fn integrable_density(&self, a: f64, q: Quadrature) -> Result<f64> {
        self.density(a, q).map(|v| if v.is_infinite() { 0.0 } else { v })
    }

    /// `∫_lo^hi w(t) f(t) dt`, split at 1/4, 1/2 and 3/4. The outer pieces
    /// use `t = s²` and `t = 1 - s²` for the endpoint behaviour at 0 and 1,
    /// the inner ones `t = 1/2 ∓ s³`, which keeps the kink at 1/2 on a panel
    /// boundary and flattens its possible logarithmic pole.
    fn integrate<W: Fn(f64) -> f64>(&self, lo: f64, hi: f64, w: W, q: Quadrature) -> Result<f64> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Domain(format!("range [{lo}, {hi}] outside [0, 1]")));
        }
        let inner = Quadrature { tol: q.tol * 1e-2, ..q };
        let mut failure = None;
        let mut total = 0.0;
        for piece in OuterPiece::ALL {
            let (t0, t1) = piece.range();
            let (a, b) = (lo.max(t0), hi.min(t1));
            if a >= b {
                continue;
            }
            let (s0, s1) = piece.s_limits(a, b);
            let s_floor = OUTER_S_FLOOR * piece.s_max();
            total += adaptive_simpson(
                |s| {
                    let s = s.max(s_floor);
                    let t = piece.t(s);
                    match self.integrable_density(t, inner) {
                        Ok(v) => w(t) * v * piece.jacobian(s),
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                s0,
                s1,
                q,
            )?
            .value;
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum OuterPiece {
    Low,
    BelowHalf,
    AboveHalf,
    High,
}

impl OuterPiece {
    const ALL: [Self; 4] = [Self::Low, Self::BelowHalf, Self::AboveHalf, Self::High];

    fn range(self) -> (f64, f64) {
        match self {
            Self::Low => (0.0, 0.25),
            Self::BelowHalf => (0.25, 0.5),
            Self::AboveHalf => (0.5, 0.75),
            Self::High => (0.75, 1.0),
        }
    }

    fn t(self, s: f64) -> f64 {
        match self {
            Self::Low => s * s,
            Self::BelowHalf => 0.5 - s * s * s,
            Self::AboveHalf => 0.5 + s * s * s,
            Self::High => 1.0 - s * s,
        }
    }

    fn s(self, t: f64) -> f64 {
        match self {
            Self::Low => t.sqrt(),
            Self::BelowHalf => (0.5 - t).cbrt(),
            Self::AboveHalf => (t - 0.5).cbrt(),
            Self::High => (1.0 - t).sqrt(),
        }
    }

    fn s_max(self) -> f64 {
        match self {
            Self::Low | Self::High => 0.5,
            Self::BelowHalf | Self::AboveHalf => 0.25f64.cbrt(),
        }
    }

    /// Increasing `s` limits for the `t` range `[a, b]`.
    fn s_limits(self, a: f64, b: f64) -> (f64, f64) {
        let (sa, sb) = (self.s(a), self.s(b));
        if sa <= sb {
            (sa, sb)
        } else {
            (sb, sa)
        }
    }

    fn jacobian(self, s: f64) -> f64 {
        match self {
            Self::Low | Self::High => 2.0 * s,
            Self::BelowHalf | Self::AboveHalf => 3.0 * s * s,
        }
    }
}

/// Posterior density of `measure(q)` at `a ∈ (0, 1)` given binary counts and
/// a symmetric `Dir(β)` prior. For the `New` measure with `α_cs ≤ 1/2` the
/// density has a logarithmic pole at `a = 1/2` and `+∞` is returned there.
pub fn posterior_density_binary(
    a: f64,
    counts: BinaryCounts,
    prior_beta: f64,
    measure: MeasureKind,
    q: Quadrature,
) -> Result<f64> {
    Posterior::new(counts, prior_beta, measure)?.density(a, q)
}

/// `P(measure(q) ≤ a)` by integrating the density.
pub fn posterior_cdf_binary(
    a: f64,
    counts: BinaryCounts,
    prior_beta: f64,
    measure: MeasureKind,
    q: Quadrature,
) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    Posterior::new(counts, prior_beta, measure)?.integrate(0.0, a, |_| 1.0, q)
}

/// `∫ a f(a) da`.
pub fn posterior_mean_binary(
    counts: BinaryCounts,
    prior_beta: f64,
    measure: MeasureKind,
    q: Quadrature,
) -> Result<f64> {
    Posterior::new(counts, prior_beta, measure)?.integrate(0.0, 1.0, |t| t, q)
}

/// 512 evenly spaced points on `[1e-6, 1 - 1e-6]` with the point nearest
/// 1/2 moved onto the kink of the `New` density.
pub fn default_grid() -> Vec<f64> {
    let step = (1.0 - 2.0 * GRID_EDGE) / (GRID_POINTS - 1) as f64;
    let mut grid: Vec<f64> = (0..GRID_POINTS).map(|i| GRID_EDGE + i as f64 * step).collect();
    let nearest = (0.5 - GRID_EDGE) / step;
    grid[nearest.round() as usize] = 0.5;
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub a: Vec<f64>,
    pub density: Vec<f64>,
    pub cdf: Vec<f64>,
    /// `∫_0^1 f`; should be 1 up to quadrature error.
    pub normalization: f64,
}

/// Density and CDF tabulated on an increasing `grid` inside `(0, 1)`.
pub fn density_curve(
    counts: BinaryCounts,
    prior_beta: f64,
    measure: MeasureKind,
    grid: &[f64],
    q: Quadrature,
) -> Result<DensityCurve> {
    let post = Posterior::new(counts, prior_beta, measure)?;
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("grid must be nonempty and strictly increasing".into()));
    }
    let density = grid.iter().map(|&a| post.density(a, q)).collect::<Result<Vec<_>>>()?;
    let mut cdf = Vec::with_capacity(grid.len());
    let mut acc = post.integrate(0.0, grid[0], |_| 1.0, q)?;
    cdf.push(acc);
    for w in grid.windows(2) {
        acc += post.integrate(w[0], w[1], |_| 1.0, q)?;
        cdf.push(acc);
    }
    let normalization = post.integrate(0.0, 1.0, |_| 1.0, q)?;
    Ok(DensityCurve { a: grid.to_vec(), density, cdf, normalization })
}
