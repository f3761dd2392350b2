//! Domain types and validation shared by the estimators, the simulator,
//! and the CLI.
//!
//! Everything here is an immutable value type; instances can be shared or
//! sent across threads freely.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Reported summary statistics for one group within a study.
///
/// Quartiles are optional: many studies report only the median and the
/// group size. A study is eligible for the quantile-estimation pipeline
/// only when both of its groups carry `q1` and `q3`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    /// Number of participants in the group.
    pub n: u64,
    /// Sample median of the outcome.
    pub median: f64,
    /// First quartile, when reported.
    pub q1: Option<f64>,
    /// Third quartile, when reported.
    pub q3: Option<f64>,
}

impl GroupSummary {
    /// Summary with median only.
    pub fn new(n: u64, median: f64) -> Self {
        Self { n, median, q1: None, q3: None }
    }

    /// Summary with median and both quartiles.
    pub fn with_quartiles(n: u64, median: f64, q1: f64, q3: f64) -> Self {
        Self { n, median, q1: Some(q1), q3: Some(q3) }
    }

    /// True when both quartiles are reported.
    pub fn has_quartiles(&self) -> bool {
        self.q1.is_some() && self.q3.is_some()
    }
}

/// One study's contribution to a meta-analysis: two group summaries and a
/// label.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub id: String,
    pub group1: GroupSummary,
    pub group2: GroupSummary,
}

impl StudyRecord {
    pub fn new(id: impl Into<String>, group1: GroupSummary, group2: GroupSummary) -> Self {
        Self { id: id.into(), group1, group2 }
    }

    /// Study-level effect: median of group 1 minus median of group 2.
    ///
    /// This sign convention is fixed everywhere; a zero effect is ordinary
    /// data.
    pub fn effect(&self) -> f64 {
        self.group1.median - self.group2.median
    }

    /// Total sample size across both groups.
    pub fn total_n(&self) -> u64 {
        self.group1.n + self.group2.n
    }

    /// Eligible for the quantile-estimation pipeline: both groups report
    /// both quartiles.
    pub fn is_qe_eligible(&self) -> bool {
        self.group1.has_quartiles() && self.group2.has_quartiles()
    }
}

/// Validation failure for a list of study records.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    /// Pooling needs at least two studies; zero or one were supplied.
    #[error("pooling requires at least two studies (got {found})")]
    EmptyInput { found: usize },
    #[error("study `{id}`: group {group} has zero participants")]
    NonPositiveSize { id: String, group: u8 },
    #[error(
        "study `{id}`: group {group} quartiles out of order \
         (need q1 <= median <= q3, got q1={q1}, median={median}, q3={q3})"
    )]
    QuartileOrderViolation { id: String, group: u8, q1: f64, median: f64, q3: f64 },
    #[error("duplicate study id `{id}`")]
    DuplicateStudyId { id: String },
    #[error("study `{id}`: group {group} has a non-finite summary value")]
    NonFiniteValue { id: String, group: u8 },
}

fn check_group(id: &str, group: u8, g: &GroupSummary) -> Result<(), ValidationError> {
    if g.n == 0 {
        return Err(ValidationError::NonPositiveSize { id: id.to_owned(), group });
    }
    let finite = g.median.is_finite()
        && g.q1.is_none_or(f64::is_finite)
        && g.q3.is_none_or(f64::is_finite);
    if !finite {
        return Err(ValidationError::NonFiniteValue { id: id.to_owned(), group });
    }
    if let (Some(q1), Some(q3)) = (g.q1, g.q3) {
        if !(q1 <= g.median && g.median <= q3) {
            return Err(ValidationError::QuartileOrderViolation {
                id: id.to_owned(),
                group,
                q1,
                median: g.median,
                q3,
            });
        }
    }
    Ok(())
}

/// Validates a list of study records and passes it through unchanged.
///
/// Requires at least two studies (one study cannot support a pooled
/// variance), positive group sizes, ordered quartiles wherever both are
/// present, and distinct study ids. Validation is idempotent.
pub fn validate_studies(records: Vec<StudyRecord>) -> Result<Vec<StudyRecord>, ValidationError> {
    if records.len() < 2 {
        return Err(ValidationError::EmptyInput { found: records.len() });
    }
    let mut seen = HashSet::new();
    for record in &records {
        if !seen.insert(record.id.as_str()) {
            return Err(ValidationError::DuplicateStudyId { id: record.id.clone() });
        }
        check_group(&record.id, 1, &record.group1)?;
        check_group(&record.id, 2, &record.group2)?;
    }
    Ok(records)
}

/// Failure to build a [`WeightVector`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("weight {weight} at index {index} is negative or non-finite")]
    Invalid { index: usize, weight: f64 },
    #[error("weights sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("weight {weight} at index {index} reaches the 1/2 dominance bound")]
    Dominant { index: usize, weight: f64 },
}

/// Normalized nonnegative study weights.
///
/// Entries sum to one (within [`WeightVector::SUM_TOLERANCE`]) and every
/// entry stays strictly below 1/2: the no-dominance condition that keeps
/// the direct variance estimator finite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Tolerance on `|sum - 1|` accepted at construction.
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self, WeightError> {
        for (index, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() || weight < 0.0 {
                return Err(WeightError::Invalid { index, weight });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(WeightError::NotNormalized { sum });
        }
        if let Some((index, &weight)) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            if weight >= 0.5 {
                return Err(WeightError::Dominant { index, weight });
            }
        }
        Ok(Self(weights))
    }

    /// Equal weights `1/n` for `n >= 3` studies (for `n = 2` the equal
    /// weight 1/2 violates the dominance bound).
    pub fn equal(n: usize) -> Result<Self, WeightError> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest weight together with its index.
    pub fn max_weight(&self) -> (usize, f64) {
        self.0
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("weight vector is never empty")
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Pooling method associated with a [`PooledResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dive,
    QeRe,
    QeFe,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dive, Method::QeRe, Method::QeFe];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dive => "DiVE",
            Method::QeRe => "QE-RE",
            Method::QeFe => "QE-FE",
        })
    }
}

/// Which critical value a Wald interval uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiFlavor {
    /// Standard normal critical value.
    Z,
    /// Student-t critical value with `n_studies - 1` degrees of freedom.
    T,
}

/// A pooled median difference with its uncertainty summary.
///
/// Both intervals are centered on the estimate; the t interval is never
/// narrower than the z interval. `weights` records the normalized
/// per-study weights actually used, for transparency reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledResult {
    pub method: Method,
    /// Pooled median difference, in outcome units.
    pub estimate: f64,
    /// Estimated variance of the pooled estimate.
    pub variance: f64,
    /// `sqrt(variance)`.
    pub se: f64,
    /// Wald interval with the standard normal critical value.
    pub ci_z: (f64, f64),
    /// Wald interval with the t critical value on `df` degrees of freedom.
    /// Unbounded when `df == 0`.
    pub ci_t: (f64, f64),
    /// Two-sided p-value under the standard normal reference.
    pub p_z: f64,
    /// Two-sided p-value under the t reference; 1 when `df == 0`.
    pub p_t: f64,
    /// `n_studies - 1`.
    pub df: u64,
    pub n_studies: usize,
    /// Total participants across the analyzed studies.
    pub n_total: u64,
    /// Between-study variance used by the method, when it has one.
    pub tau2: Option<f64>,
    /// `(study id, normalized weight)` for every analyzed study.
    pub weights: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, n1: u64, m1: f64, n2: u64, m2: f64) -> StudyRecord {
        StudyRecord::new(id, GroupSummary::new(n1, m1), GroupSummary::new(n2, m2))
    }

    #[test]
    fn effect_sign_convention() {
        let r = record("a", 10, 15.0, 12, 30.0);
        assert_eq!(r.effect(), -15.0);
        assert_eq!(r.total_n(), 22);
    }

    #[test]
    fn zero_effect_is_ordinary() {
        let records = vec![record("a", 10, 5.0, 10, 5.0), record("b", 10, 5.0, 10, 5.0)];
        let validated = validate_studies(records).unwrap();
        assert_eq!(validated[0].effect(), 0.0);
    }

    #[test]
    fn single_record_rejected_for_pooling() {
        let err = validate_studies(vec![record("a", 10, 1.0, 10, 2.0)]).unwrap_err();
        assert_eq!(err, ValidationError::EmptyInput { found: 1 });
        let err = validate_studies(vec![]).unwrap_err();
        assert_eq!(err, ValidationError::EmptyInput { found: 0 });
    }

    #[test]
    fn quartile_order_violation() {
        let bad = StudyRecord::new(
            "a",
            GroupSummary::with_quartiles(10, 15.0, 22.0, 30.0),
            GroupSummary::new(10, 2.0),
        );
        let err = validate_studies(vec![bad, record("b", 10, 1.0, 10, 2.0)]).unwrap_err();
        assert!(matches!(err, ValidationError::QuartileOrderViolation { group: 1, .. }));
    }

    #[test]
    fn partial_quartiles_are_allowed() {
        let mut r = record("a", 10, 15.0, 10, 2.0);
        r.group1.q1 = Some(22.0); // lone q1 above the median: only full pairs are checked
        assert!(!r.is_qe_eligible());
        validate_studies(vec![r, record("b", 10, 1.0, 10, 2.0)]).unwrap();
    }

    #[test]
    fn zero_size_rejected() {
        let err = validate_studies(vec![record("a", 0, 1.0, 10, 2.0), record("b", 10, 1.0, 10, 2.0)])
            .unwrap_err();
        assert_eq!(err, ValidationError::NonPositiveSize { id: "a".into(), group: 1 });
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = validate_studies(vec![record("a", 10, 1.0, 10, 2.0), record("a", 5, 1.0, 5, 2.0)])
            .unwrap_err();
        assert_eq!(err, ValidationError::DuplicateStudyId { id: "a".into() });
    }

    #[test]
    fn validation_is_idempotent() {
        let records = vec![record("a", 10, 1.0, 10, 2.0), record("b", 10, 1.0, 10, 2.0)];
        let once = validate_studies(records.clone()).unwrap();
        let twice = validate_studies(once.clone()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once, records);
    }

    #[test]
    fn weight_vector_guards() {
        assert!(WeightVector::new(vec![0.3, 0.3, 0.4]).is_ok());
        let err = WeightVector::new(vec![0.25, 0.25, 0.5]).unwrap_err();
        assert_eq!(err, WeightError::Dominant { index: 2, weight: 0.5 });
        assert!(matches!(
            WeightVector::new(vec![0.3, 0.3]).unwrap_err(),
            WeightError::NotNormalized { .. }
        ));
        assert!(matches!(
            WeightVector::new(vec![-0.1, 0.7, 0.4]).unwrap_err(),
            WeightError::Invalid { index: 0, .. }
        ));
        // equal weights at n = 2 hit the dominance bound exactly
        assert!(WeightVector::equal(2).is_err());
        assert!(WeightVector::equal(3).is_ok());
    }

    #[test]
    fn max_weight_reports_index() {
        let w = WeightVector::new(vec![0.2, 0.45, 0.35]).unwrap();
        assert_eq!(w.max_weight(), (1, 0.45));
    }
}
