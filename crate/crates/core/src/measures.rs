//! Ambiguity measures over a categorical distribution with a can't-solve entry.
//!
//! For a probability vector `q = (q_1, .., q_C | q_cs)`:
//!
//! * `New`:      `1 - Σ q_k² / (1 - q_cs)`, the probability that an annotator
//!   abstains or that two annotators who both answer disagree.
//! * `Modified`: `q_cs + C/(C-1) · [(1 - q_cs) - Σ q_k² / (1 - q_cs)]`, the same
//!   quantity with the disagreement term rescaled to reach 1 on uniform answers.
//! * `Old`:      `1 - (1 - q_cs)/2 · C/(C-1) · Σ |p_k - 1/C|`, based on the total
//!   variation distance of the conditional vector `p` from uniform.
//!
//! All three evaluate to 1 when the whole mass sits on the can't-solve entry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ q = 1` accepted on construction.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// `q_cs` at or above `1 - DEGENERACY_TOL` is treated as total unsolvability.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Out-of-range results smaller than this are rounding noise and get clamped.
const CLAMP_TOL: f64 = 1e-12;

/// Names of the proper answer categories plus the can't-solve label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySchema {
    labels: Vec<String>,
    cs_label: String,
}

impl CategorySchema {
    pub fn new(labels: Vec<String>, cs_label: impl Into<String>) -> Result<Self> {
        let cs_label = cs_label.into();
        if labels.is_empty() {
            return Err(Error::InvalidParameter("schema needs at least one proper label".into()));
        }
        if cs_label.is_empty() || labels.iter().any(|l| l.is_empty()) {
            return Err(Error::InvalidParameter("labels must be nonempty strings".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidParameter(format!("duplicate label {l:?}")));
            }
            if *l == cs_label {
                return Err(Error::InvalidParameter(format!(
                    "can't-solve label {cs_label:?} is also a proper label"
                )));
            }
        }
        Ok(Self { labels, cs_label })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cs_label(&self) -> &str {
        &self.cs_label
    }

    pub fn num_categories(&self) -> usize {
        self.labels.len()
    }

    /// Where a response lands: `Some(Some(k))` for proper label `k`,
    /// `Some(None)` for can't-solve, `None` for an unknown label.
    pub fn classify(&self, response: &str) -> Option<Option<usize>> {
        if response == self.cs_label {
            return Some(None);
        }
        self.labels.iter().position(|l| l == response).map(Some)
    }
}

/// A probability vector over `C` proper categories and the can't-solve entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityVector {
    proper: Vec<f64>,
    cs: f64,
}

impl ProbabilityVector {
    /// Validates entries in `[0, 1]` and a total of 1 within [`SIMPLEX_TOL`].
    /// Inputs are never renormalized.
    pub fn new(proper: Vec<f64>, cs: f64) -> Result<Self> {
        if proper.is_empty() {
            return Err(Error::InvalidProbability("no proper categories".into()));
        }
        for (i, &x) in proper.iter().chain(std::iter::once(&cs)).enumerate() {
            if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidProbability(format!("entry {i} = {x} is outside [0, 1]")));
            }
        }
        let total = proper.iter().sum::<f64>() + cs;
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidProbability(format!("entries sum to {total}, not 1")));
        }
        Ok(Self { proper, cs })
    }

    /// `(1 - q_cs)/C` on every proper category.
    pub fn uniform(num_categories: usize, cs: f64) -> Result<Self> {
        if num_categories == 0 {
            return Err(Error::InvalidProbability("no proper categories".into()));
        }
        let each = (1.0 - cs) / num_categories as f64;
        Self::new(vec![each; num_categories], cs)
    }

    /// Empirical frequencies of a count vector.
    pub fn from_counts(counts: &crate::CountVector) -> Result<Self> {
        let n = counts.total();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let n = n as f64;
        Ok(Self {
            proper: counts.proper().iter().map(|&c| c as f64 / n).collect(),
            cs: counts.cs() as f64 / n,
        })
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

    /// All `C + 1` entries with the can't-solve entry last.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.proper.clone();
        v.push(self.cs);
        v
    }

    pub(crate) fn from_parts_unchecked(proper: Vec<f64>, cs: f64) -> Self {
        Self { proper, cs }
    }
}

/// Proper-category probabilities renormalized after removing the can't-solve mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalVector {
    p: Vec<f64>,
}

impl ConditionalVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// Which ambiguity measure to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    New,
    Modified,
    Old,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 3] = [MeasureKind::New, MeasureKind::Modified, MeasureKind::Old];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::New => "new",
            MeasureKind::Modified => "modified",
            MeasureKind::Old => "old",
        }
    }

    /// Smallest number of proper categories the measure is defined for.
    pub fn min_categories(self) -> usize {
        match self {
            MeasureKind::New => 1,
            MeasureKind::Modified | MeasureKind::Old => 2,
        }
    }

    pub fn evaluate(self, q: &ProbabilityVector) -> Result<f64> {
        match self {
            MeasureKind::New => Ok(ambiguity_new(q)),
            MeasureKind::Modified => ambiguity_modified(q),
            MeasureKind::Old => ambiguity_old(q),
        }
    }

    /// Evaluate on raw entries; `proper` and `cs` must already form a valid simplex.
    pub(crate) fn evaluate_raw(self, proper: &[f64], cs: f64) -> Result<f64> {
        match self {
            MeasureKind::New => Ok(amb_new_raw(proper, cs)),
            MeasureKind::Modified => amb_modified_raw(proper, cs),
            MeasureKind::Old => amb_old_raw(proper, cs),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "new" | "amb" => Ok(MeasureKind::New),
            "modified" | "mod" => Ok(MeasureKind::Modified),
            "old" | "amb0" => Ok(MeasureKind::Old),
            other => Err(Error::InvalidParameter(format!("unknown measure {other:?}"))),
        }
    }
}

#[inline]
fn is_degenerate(cs: f64) -> bool {
    cs >= 1.0 - DEGENERACY_TOL
}

pub(crate) fn clamp_unit(x: f64) -> Result<f64> {
    if x.is_nan() || x < -CLAMP_TOL || x > 1.0 + CLAMP_TOL {
        return Err(Error::Internal(format!("ambiguity value {x} outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

fn sum_of_squares(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum()
}

pub fn conditional_vector(q: &ProbabilityVector) -> Result<ConditionalVector> {
    if is_degenerate(q.cs) {
        return Err(Error::DegenerateCsMass);
    }
    let solvable = 1.0 - q.cs;
    Ok(ConditionalVector { p: q.proper.iter().map(|&x| x / solvable).collect() })
}

pub fn ambiguity_new(q: &ProbabilityVector) -> f64 {
    amb_new_raw(&q.proper, q.cs)
}

pub(crate) fn amb_new_raw(proper: &[f64], cs: f64) -> f64 {
    if is_degenerate(cs) {
        return 1.0;
    }
    let v = 1.0 - sum_of_squares(proper) / (1.0 - cs);
    // a valid simplex keeps Σq_k² ≤ (1 - q_cs)², so only rounding noise can leave [0, 1]
    v.clamp(0.0, 1.0)
}

pub fn ambiguity_modified(q: &ProbabilityVector) -> Result<f64> {
    amb_modified_raw(&q.proper, q.cs)
}

pub(crate) fn amb_modified_raw(proper: &[f64], cs: f64) -> Result<f64> {
    let c = proper.len();
    if c < 2 {
        return Err(Error::SingleCategoryUnsupported);
    }
    if is_degenerate(cs) {
        return Ok(1.0);
    }
    let solvable = 1.0 - cs;
    let scale = c as f64 / (c as f64 - 1.0);
    clamp_unit(cs + scale * (solvable - sum_of_squares(proper) / solvable))
}

/// `(C·amb - q_cs) / (C - 1)`.
pub fn modified_from_new(amb: f64, cs: f64, num_categories: usize) -> Result<f64> {
    if num_categories < 2 {
        return Err(Error::SingleCategoryUnsupported);
    }
    let c = num_categories as f64;
    Ok((c * amb - cs) / (c - 1.0))
}

pub fn ambiguity_old(q: &ProbabilityVector) -> Result<f64> {
    amb_old_raw(&q.proper, q.cs)
}

pub(crate) fn amb_old_raw(proper: &[f64], cs: f64) -> Result<f64> {
    let c = proper.len();
    if c < 2 {
        return Err(Error::SingleCategoryUnsupported);
    }
    if is_degenerate(cs) {
        return Ok(1.0);
    }
    let solvable = 1.0 - cs;
    let uniform = 1.0 / c as f64;
    let tv: f64 = proper.iter().map(|&x| (x / solvable - uniform).abs()).sum();
    let scale = c as f64 / (c as f64 - 1.0);
    clamp_unit(1.0 - 0.5 * solvable * scale * tv)
}

/// Shannon entropy divided by `ln M`, with `0 · ln(1/0) = 0`.
///
/// `p` is any probability vector over `M ≥ 2` entries, e.g. a
/// [`ConditionalVector`] or [`ProbabilityVector::to_vec`].
pub fn normalized_entropy(p: &[f64]) -> Result<f64> {
    let m = p.len();
    if m < 2 {
        return Err(Error::SingleCategoryUnsupported);
    }
    if p.iter().any(|&x| !x.is_finite() || !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidProbability("entries must lie in [0, 1]".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidProbability(format!("entries sum to {total}, not 1")));
    }
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    clamp_unit(h / (m as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pv(proper: &[f64], cs: f64) -> ProbabilityVector {
        ProbabilityVector::new(proper.to_vec(), cs).unwrap()
    }

    #[test]
    fn schema_validation() {
        let s = CategorySchema::new(vec!["a".into(), "b".into()], "cs").unwrap();
        assert_eq!(s.classify("b"), Some(Some(1)));
        assert_eq!(s.classify("cs"), Some(None));
        assert_eq!(s.classify("c"), None);
        assert!(CategorySchema::new(vec![], "cs").is_err());
        assert!(CategorySchema::new(vec!["a".into(), "a".into()], "cs").is_err());
        assert!(CategorySchema::new(vec!["a".into(), "cs".into()], "cs").is_err());
    }

    #[test]
    fn probability_vector_rejects_off_simplex() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5], 0.1).is_err());
        assert!(ProbabilityVector::new(vec![1.2, -0.2], 0.0).is_err());
        assert!(ProbabilityVector::new(vec![], 1.0).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.5 + 5e-10], 0.0).is_ok());
    }

    #[test]
    fn conditional_vector_examples() {
        let p = conditional_vector(&pv(&[0.4, 0.4], 0.2)).unwrap();
        assert_abs_diff_eq!(p.as_slice()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.as_slice()[1], 0.5, epsilon = 1e-15);
        let p = conditional_vector(&pv(&[0.9, 0.1], 0.0)).unwrap();
        assert_eq!(p.as_slice(), &[0.9, 0.1]);
        let p = conditional_vector(&pv(&[0.25, 0.25], 0.5)).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
        assert!(matches!(
            conditional_vector(&pv(&[0.0, 0.0], 1.0)),
            Err(Error::DegenerateCsMass)
        ));
    }

    #[test]
    fn new_measure_examples() {
        assert_eq!(ambiguity_new(&pv(&[1.0, 0.0], 0.0)), 0.0);
        assert_eq!(ambiguity_new(&pv(&[0.0, 0.0], 1.0)), 1.0);
        assert_abs_diff_eq!(ambiguity_new(&pv(&[0.9, 0.1], 0.0)), 0.18, epsilon = 1e-12);
        assert_abs_diff_eq!(ambiguity_new(&pv(&[0.25, 0.25], 0.5)), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(ambiguity_new(&pv(&[0.2; 5], 0.0)), 0.8, epsilon = 1e-12);
        // single proper category: amb = q_cs
        assert_abs_diff_eq!(ambiguity_new(&pv(&[0.7], 0.3)), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn modified_measure_examples() {
        assert_abs_diff_eq!(ambiguity_modified(&pv(&[0.5, 0.5], 0.0)).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ambiguity_modified(&pv(&[0.8, 0.2], 0.0)).unwrap(), 0.64, epsilon = 1e-12);
        assert_eq!(ambiguity_modified(&pv(&[1.0, 0.0], 0.0)).unwrap(), 0.0);
        assert!(matches!(
            ambiguity_modified(&pv(&[0.5], 0.5)),
            Err(Error::SingleCategoryUnsupported)
        ));
    }

    #[test]
    fn modified_from_new_examples() {
        assert_abs_diff_eq!(modified_from_new(0.18, 0.0, 2).unwrap(), 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(modified_from_new(0.75, 0.5, 2).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(modified_from_new(0.0, 0.0, 7).unwrap(), 0.0);
        assert!(modified_from_new(0.3, 0.3, 1).is_err());
    }

    #[test]
    fn old_measure_examples() {
        assert_abs_diff_eq!(ambiguity_old(&pv(&[0.7, 0.3], 0.0)).unwrap(), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(ambiguity_old(&pv(&[0.1, 0.1, 0.1], 0.7)).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(ambiguity_old(&pv(&[1.0, 0.0], 0.0)).unwrap(), 0.0);
        assert_eq!(ambiguity_old(&pv(&[0.0, 0.0], 1.0)).unwrap(), 1.0);
        assert!(ambiguity_old(&pv(&[1.0], 0.0)).is_err());
    }

    #[test]
    fn normalized_entropy_examples() {
        assert_eq!(normalized_entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(normalized_entropy(&[0.25; 4]).unwrap(), 1.0, epsilon = 1e-12);
        let expected = 1.5 * 2f64.ln() / 3f64.ln();
        assert_abs_diff_eq!(normalized_entropy(&[0.5, 0.25, 0.25]).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.9464, epsilon = 1e-4);
        assert!(normalized_entropy(&[1.0]).is_err());
    }

    #[test]
    fn measure_kind_parsing() {
        assert_eq!("New".parse::<MeasureKind>().unwrap(), MeasureKind::New);
        assert_eq!("modified".parse::<MeasureKind>().unwrap(), MeasureKind::Modified);
        assert_eq!("old".parse::<MeasureKind>().unwrap(), MeasureKind::Old);
        assert!("gini".parse::<MeasureKind>().is_err());
    }

    fn simplex_point(max_c: usize) -> impl Strategy<Value = ProbabilityVector> {
        (2..=max_c)
            .prop_flat_map(|c| prop::collection::vec(0.0f64..1.0, c + 1))
            .prop_map(|w| {
                let total: f64 = w.iter().sum::<f64>().max(1e-12);
                let mut v: Vec<f64> = w.iter().map(|x| x / total).collect();
                let cs = v.pop().unwrap();
                ProbabilityVector::from_parts_unchecked(v, cs)
            })
    }

    proptest! {
        #[test]
        fn measures_are_permutation_invariant(q in simplex_point(6), rot in 0usize..6) {
            let mut proper = q.proper().to_vec();
            let len = proper.len();
            proper.rotate_left(rot % len);
            let r = ProbabilityVector::from_parts_unchecked(proper, q.cs());
            for m in MeasureKind::ALL {
                let a = m.evaluate(&q).unwrap();
                let b = m.evaluate(&r).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn modified_dominates_new(q in simplex_point(6)) {
            let new = ambiguity_new(&q);
            let modified = ambiguity_modified(&q).unwrap();
            prop_assert!(modified >= new - 1e-12);
            let via = modified_from_new(new, q.cs(), q.num_categories()).unwrap();
            prop_assert!((via - modified).abs() < 1e-12);
        }
    }
}
