//! Sample-size-weighted pooling of study-level effects with a direct
//! closed-form estimator of the pooled estimator's variance.
//!
//! The variance estimator weights squared deviations of the effects around
//! the pooled estimate by coefficients `h_i / (1 + sum(h))` with
//! `h_i = w_i^2 / (1 - 2 w_i)`. It needs nothing from inside the studies:
//! no within-study variances, no between-study component, no distributional
//! model. It is finite exactly when no study weight reaches 1/2.
//!
//! Weights are treated as fixed throughout: they are supplied by the
//! caller (normalized sample sizes via [`sample_size_weights`], or any
//! other pre-specified scheme) and never recomputed from the observed
//! effects.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::model::{
    CiFlavor, Method, PooledResult, StudyRecord, WeightError, WeightVector,
};

use std::f64::consts::SQRT_2;

/// Weights at or above this value trigger a sensitivity warning on the
/// result: the coefficient `h = w^2/(1-2w)` grows without bound as the
/// weight approaches 1/2.
pub const NEAR_DOMINANCE_WARNING: f64 = 0.45;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiveError {
    #[error("pooling requires at least two studies (got {0})")]
    TooFewStudies(usize),
    #[error(
        "study `{id}` holds weight {weight:.3} >= 1/2; \
         the variance estimator is undefined under a dominant study"
    )]
    DominantStudy { id: String, weight: f64 },
    #[error("{effects} effects but {weights} weights")]
    LengthMismatch { effects: usize, weights: usize },
    #[error("alpha must lie strictly between 0 and 1 (got {0})")]
    InvalidAlpha(f64),
    #[error("standard error is zero; the test statistic is undefined")]
    ZeroSe,
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// Normalized sample-size weights `n_i / sum(n)`.
///
/// Fails with [`DiveError::DominantStudy`] naming the offending study when
/// any weight reaches 1/2, so that the variance is always computable
/// downstream.
pub fn sample_size_weights(records: &[StudyRecord]) -> Result<WeightVector, DiveError> {
    if records.len() < 2 {
        return Err(DiveError::TooFewStudies(records.len()));
    }
    let total: u64 = records.iter().map(StudyRecord::total_n).sum();
    let weights: Vec<f64> = records
        .iter()
        .map(|r| r.total_n() as f64 / total as f64)
        .collect();
    WeightVector::new(weights).map_err(|e| match e {
        WeightError::Dominant { index, weight } => DiveError::DominantStudy {
            id: records[index].id.clone(),
            weight,
        },
        other => DiveError::Weight(other),
    })
}

/// Weighted pool `sum(w_i * y_i)` of study effects under normalized
/// weights.
pub fn pool(effects: &[f64], weights: &WeightVector) -> Result<f64, DiveError> {
    if effects.len() != weights.len() {
        return Err(DiveError::LengthMismatch {
            effects: effects.len(),
            weights: weights.len(),
        });
    }
    Ok(effects
        .iter()
        .zip(weights.as_slice())
        .map(|(y, w)| w * y)
        .sum())
}

/// The variance coefficients `h_i = w_i^2 / (1 - 2 w_i)` and their
/// normalizer `1 + sum(h)`.
///
/// The normalized coefficients `k_i = h_i / (1 + sum(h))` satisfy
/// `k_i (1 - 2 w_i) + sum(k) w_i^2 = w_i^2` for every study, which is the
/// identity that makes the variance estimator unbiased under fixed
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiveCoefficients {
    pub h: Vec<f64>,
    pub normalizer: f64,
}

impl DiveCoefficients {
    pub fn from_weights(weights: &WeightVector) -> Self {
        let h: Vec<f64> = weights
            .as_slice()
            .iter()
            .map(|&w| w * w / (1.0 - 2.0 * w))
            .collect();
        let normalizer = 1.0 + h.iter().sum::<f64>();
        Self { h, normalizer }
    }

    /// Normalized coefficient `k_i` applied to the i-th squared deviation.
    pub fn coefficient(&self, i: usize) -> f64 {
        self.h[i] / self.normalizer
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Direct variance estimate of the pooled effect:
/// `sum_i k_i (y_i - pooled)^2` with `k_i = h_i / (1 + sum(h))`.
///
/// Always nonnegative; finite because [`WeightVector`] guarantees
/// `max(w) < 1/2`.
pub fn direct_variance(
    effects: &[f64],
    weights: &WeightVector,
) -> Result<(f64, DiveCoefficients), DiveError> {
    if effects.len() < 2 {
        return Err(DiveError::TooFewStudies(effects.len()));
    }
    let pooled = pool(effects, weights)?;
    let coeffs = DiveCoefficients::from_weights(weights);
    let variance = effects
        .iter()
        .enumerate()
        .map(|(i, y)| coeffs.coefficient(i) * (y - pooled).powi(2))
        .sum();
    Ok((variance, coeffs))
}

fn z_critical(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Student-t critical value on `df` degrees of freedom.
///
/// Comes from an incomplete-beta based quantile routine (no table
/// lookup), accurate to better than 1e-10 relative, so results reproduce
/// across platforms.
fn t_critical(alpha: f64, df: u64) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(1.0 - alpha / 2.0)
}

/// Wald interval `estimate +/- crit * sqrt(variance)` where `crit` is the
/// `1 - alpha/2` quantile of the standard normal (`Z`) or of Student-t
/// with `n_studies - 1` degrees of freedom (`T`).
pub fn wald_ci(
    estimate: f64,
    variance: f64,
    n_studies: usize,
    alpha: f64,
    flavor: CiFlavor,
) -> Result<(f64, f64), DiveError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DiveError::InvalidAlpha(alpha));
    }
    let crit = match flavor {
        CiFlavor::Z => z_critical(alpha),
        CiFlavor::T => {
            if n_studies < 2 {
                return Err(DiveError::TooFewStudies(n_studies));
            }
            t_critical(alpha, (n_studies - 1) as u64)
        }
    };
    let half = crit * variance.sqrt();
    Ok((estimate - half, estimate + half))
}

/// Two-sided p-value of `estimate / se` under the standard normal or the
/// Student-t reference with `n_studies - 1` degrees of freedom.
pub fn p_value(estimate: f64, se: f64, n_studies: usize, flavor: CiFlavor) -> Result<f64, DiveError> {
    if !(se > 0.0) {
        return Err(DiveError::ZeroSe);
    }
    let stat = (estimate / se).abs();
    Ok(match flavor {
        CiFlavor::Z => erfc(stat / SQRT_2),
        CiFlavor::T => {
            if n_studies < 2 {
                return Err(DiveError::TooFewStudies(n_studies));
            }
            let t = StudentsT::new(0.0, 1.0, (n_studies - 1) as f64).expect("df >= 1");
            2.0 * (1.0 - t.cdf(stat))
        }
    })
}

/// Assembles a [`PooledResult`] from an estimate and its variance,
/// filling in both interval flavors and p-values.
///
/// With `df == 0` (a single study, only reachable through the
/// fixed-effect path) the t interval is unbounded and its p-value is 1.
pub(crate) fn build_result(
    method: Method,
    estimate: f64,
    variance: f64,
    n_studies: usize,
    n_total: u64,
    tau2: Option<f64>,
    alpha: f64,
    weights: Vec<(String, f64)>,
    warnings: Vec<String>,
) -> Result<PooledResult, DiveError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DiveError::InvalidAlpha(alpha));
    }
    let se = variance.sqrt();
    let ci_z = wald_ci(estimate, variance, n_studies, alpha, CiFlavor::Z)?;
    let (ci_t, p_t) = if n_studies >= 2 {
        (
            wald_ci(estimate, variance, n_studies, alpha, CiFlavor::T)?,
            if se > 0.0 {
                p_value(estimate, se, n_studies, CiFlavor::T)?
            } else {
                if estimate != 0.0 { 0.0 } else { 1.0 }
            },
        )
    } else {
        ((f64::NEG_INFINITY, f64::INFINITY), 1.0)
    };
    let p_z = if se > 0.0 {
        p_value(estimate, se, n_studies, CiFlavor::Z)?
    } else {
        if estimate != 0.0 { 0.0 } else { 1.0 }
    };
    Ok(PooledResult {
        method,
        estimate,
        variance,
        se,
        ci_z,
        ci_t,
        p_z,
        p_t,
        df: (n_studies - 1) as u64,
        n_studies,
        n_total,
        tau2,
        weights,
        warnings,
    })
}

/// Full pipeline on validated records: sample-size weights, pooled
/// estimate, direct variance, both interval flavors and p-values.
///
/// Attaches a sensitivity warning when the largest weight lies in
/// `[0.45, 0.5)`.
pub fn analyze(records: &[StudyRecord], alpha: f64) -> Result<PooledResult, DiveError> {
    let weights = sample_size_weights(records)?;
    let effects: Vec<f64> = records.iter().map(StudyRecord::effect).collect();
    let estimate = pool(&effects, &weights)?;
    let (variance, _) = direct_variance(&effects, &weights)?;

    let mut warnings = Vec::new();
    let (max_idx, max_w) = weights.max_weight();
    if max_w >= NEAR_DOMINANCE_WARNING {
        warnings.push(format!(
            "study `{}` carries weight {:.3}, close to the 1/2 dominance bound; \
             the variance estimate is sensitive to this study",
            records[max_idx].id, max_w
        ));
    }

    let n_total = records.iter().map(StudyRecord::total_n).sum();
    let labeled = records
        .iter()
        .zip(weights.as_slice())
        .map(|(r, &w)| (r.id.clone(), w))
        .collect();
    build_result(
        Method::Dive,
        estimate,
        variance,
        records.len(),
        n_total,
        None,
        alpha,
        labeled,
        warnings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupSummary;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn esd_records() -> Vec<StudyRecord> {
        // (id, n1, median1, n2, median2)
        let rows: [(&str, u64, f64, u64, f64); 8] = [
            ("Adelaide-2000", 42, 15.0, 44, 30.0),
            ("Adelaide-2016", 31, 16.0, 32, 20.0),
            ("Belfast-2004", 59, 31.0, 54, 32.0),
            ("Copenhagen-2009", 31, 18.0, 30, 16.0),
            ("London-1997", 167, 6.0, 164, 12.0),
            ("Oslo-2000", 42, 22.0, 40, 31.0),
            ("Stockholm-1998", 39, 12.0, 38, 23.0),
            ("Trondheim-2004", 31, 12.0, 31, 10.0),
        ];
        rows.iter()
            .map(|&(id, n1, m1, n2, m2)| {
                StudyRecord::new(id, GroupSummary::new(n1, m1), GroupSummary::new(n2, m2))
            })
            .collect()
    }

    #[test]
    fn esd_sample_size_weights() {
        let w = sample_size_weights(&esd_records()).unwrap();
        assert_abs_diff_eq!(w[4], 0.378, epsilon = 5e-4); // London-1997, 331/875
        assert_abs_diff_eq!(w[0], 0.098, epsilon = 5e-4); // Adelaide-2000, 86/875
        assert_abs_diff_eq!(w.as_slice().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_sizes_give_equal_weights() {
        let records: Vec<StudyRecord> = (0..5)
            .map(|i| {
                StudyRecord::new(
                    format!("s{i}"),
                    GroupSummary::new(40, 1.0),
                    GroupSummary::new(40, 2.0),
                )
            })
            .collect();
        let w = sample_size_weights(&records).unwrap();
        for &wi in w.as_slice() {
            assert_abs_diff_eq!(wi, 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn dominant_study_is_named() {
        let records = vec![
            StudyRecord::new("a", GroupSummary::new(25, 0.0), GroupSummary::new(25, 0.0)),
            StudyRecord::new("b", GroupSummary::new(25, 0.0), GroupSummary::new(25, 0.0)),
            StudyRecord::new("big", GroupSummary::new(50, 0.0), GroupSummary::new(50, 0.0)),
        ];
        match sample_size_weights(&records).unwrap_err() {
            DiveError::DominantStudy { id, weight } => {
                assert_eq!(id, "big");
                assert_eq!(weight, 0.5);
            }
            other => panic!("expected DominantStudy, got {other:?}"),
        }
    }

    #[test]
    fn pool_is_a_convex_combination() {
        let w = WeightVector::new(vec![0.3, 0.3, 0.4]).unwrap();
        assert_abs_diff_eq!(pool(&[7.0, 7.0, 7.0], &w).unwrap(), 7.0, epsilon = 1e-15);
        // alternating (0, 2) under equal weights averages to 1
        let w4 = WeightVector::equal(4).unwrap();
        assert_abs_diff_eq!(pool(&[0.0, 2.0, 0.0, 2.0], &w4).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            pool(&[1.0], &w).unwrap_err(),
            DiveError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn esd_pooled_estimate() {
        let records = esd_records();
        let w = sample_size_weights(&records).unwrap();
        let effects: Vec<f64> = records.iter().map(StudyRecord::effect).collect();
        assert_abs_diff_eq!(pool(&effects, &w).unwrap(), -5.69, epsilon = 0.005);
    }

    #[test]
    fn h_coefficient_hand_value() {
        // w = 331/875: h = w^2 / (1 - 2w) = 0.5879 (hand arithmetic)
        let w = 331.0 / 875.0;
        let h = w * w / (1.0 - 2.0 * w);
        assert_abs_diff_eq!(h, 0.5879, epsilon = 5e-5);
        let weights = sample_size_weights(&esd_records()).unwrap();
        let coeffs = DiveCoefficients::from_weights(&weights);
        assert_abs_diff_eq!(coeffs.h[4], h, epsilon = 1e-15);
    }

    #[test]
    fn esd_direct_variance() {
        // frozen from an independent evaluation of the estimator's
        // defining formula over the study table, cross-checked against the
        // published interval half-width
        let records = esd_records();
        let w = sample_size_weights(&records).unwrap();
        let effects: Vec<f64> = records.iter().map(StudyRecord::effect).collect();
        let (var, coeffs) = direct_variance(&effects, &w).unwrap();
        assert_abs_diff_eq!(var, 1.6103312057084762, epsilon = 1e-12);
        assert_abs_diff_eq!(var.sqrt(), 1.269, epsilon = 5e-4);
        assert_abs_diff_eq!(coeffs.normalizer, 1.660121082433542, epsilon = 1e-12);
    }

    #[test]
    fn equal_weights_reduce_to_unbiased_sample_mean_variance() {
        let effects = [3.0, -1.0, 4.0, 1.0, 5.0];
        let n = effects.len();
        let w = WeightVector::equal(n).unwrap();
        let (var, _) = direct_variance(&effects, &w).unwrap();
        let mean = effects.iter().sum::<f64>() / n as f64;
        let oracle =
            effects.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n as f64 * (n - 1) as f64);
        assert_relative_eq!(var, oracle, max_relative = 1e-12);
    }

    #[test]
    fn esd_wald_intervals() {
        let r = analyze(&esd_records(), 0.05).unwrap();
        assert_abs_diff_eq!(r.ci_z.0, -8.18, epsilon = 0.01);
        assert_abs_diff_eq!(r.ci_z.1, -3.20, epsilon = 0.01);
        assert_abs_diff_eq!(r.ci_t.0, -8.69, epsilon = 0.01);
        assert_abs_diff_eq!(r.ci_t.1, -2.69, epsilon = 0.01);
        assert_abs_diff_eq!(r.p_t, 0.003, epsilon = 0.001);
        assert!(r.p_z < 0.001);
        assert_eq!(r.df, 7);
        assert_eq!(r.n_total, 875);
        assert!(r.warnings.is_empty(), "max ESD weight 0.378 is below the warning band");
    }

    #[test]
    fn degenerate_interval_at_zero_variance() {
        let ci = wald_ci(4.2, 0.0, 5, 0.05, CiFlavor::T).unwrap();
        assert_eq!(ci, (4.2, 4.2));
    }

    #[test]
    fn invalid_alpha_rejected() {
        assert!(matches!(
            wald_ci(0.0, 1.0, 5, 0.0, CiFlavor::Z),
            Err(DiveError::InvalidAlpha(_))
        ));
        assert!(matches!(
            wald_ci(0.0, 1.0, 5, 1.0, CiFlavor::T),
            Err(DiveError::InvalidAlpha(_))
        ));
    }

    #[test]
    fn p_value_edge_cases() {
        assert_eq!(p_value(0.0, 1.0, 8, CiFlavor::Z).unwrap(), 1.0);
        assert_eq!(p_value(0.0, 1.0, 8, CiFlavor::T).unwrap(), 1.0);
        assert!(matches!(p_value(1.0, 0.0, 8, CiFlavor::Z), Err(DiveError::ZeroSe)));
    }

    #[test]
    fn p_value_matches_two_study_reference() {
        // statistic 5.9186/8.4801 under the standard normal: p = 0.485
        let p = p_value(-5.918587730641363, 8.480091967251255, 2, CiFlavor::Z).unwrap();
        assert_abs_diff_eq!(p, 0.485, epsilon = 0.001);
        let pt = p_value(-5.918587730641363, 8.480091967251255, 2, CiFlavor::T).unwrap();
        assert_abs_diff_eq!(pt, 0.612, epsilon = 0.001);
    }

    #[test]
    fn t_critical_reference_values() {
        // reference quantiles from a standard statistical library
        assert_relative_eq!(t_critical(0.05, 1), 12.706204736432095, max_relative = 1e-10);
        assert_relative_eq!(t_critical(0.05, 7), 2.3646242515927844, max_relative = 1e-10);
        assert_relative_eq!(t_critical(0.05, 9), 2.2621571628540993, max_relative = 1e-10);
        assert_relative_eq!(t_critical(0.05, 29), 2.045229642132703, max_relative = 1e-10);
        assert_relative_eq!(z_critical(0.05), 1.959963984540054, max_relative = 1e-12);
    }

    #[test]
    fn near_dominance_warning_attached() {
        let records = vec![
            StudyRecord::new("big", GroupSummary::new(47, 1.0), GroupSummary::new(47, 0.0)),
            StudyRecord::new("a", GroupSummary::new(28, 2.0), GroupSummary::new(28, 0.0)),
            StudyRecord::new("b", GroupSummary::new(25, 3.0), GroupSummary::new(25, 0.0)),
        ];
        let r = analyze(&records, 0.05).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("big"));
    }

    #[test]
    fn two_equal_studies_hit_the_dominance_bound() {
        let records = vec![
            StudyRecord::new("a", GroupSummary::new(10, 1.0), GroupSummary::new(10, 0.0)),
            StudyRecord::new("b", GroupSummary::new(10, 2.0), GroupSummary::new(10, 0.0)),
        ];
        assert!(matches!(
            analyze(&records, 0.05),
            Err(DiveError::DominantStudy { .. })
        ));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    /// Random study sizes whose normalized weights satisfy the dominance
    /// bound.
    fn arb_weights() -> impl Strategy<Value = WeightVector> {
        proptest::collection::vec(1u64..=100, 3..20)
            .prop_filter_map("needs max weight < 1/2", |sizes| {
                let total: u64 = sizes.iter().sum();
                let w: Vec<f64> = sizes.iter().map(|&n| n as f64 / total as f64).collect();
                WeightVector::new(w).ok()
            })
    }

    fn arb_effects(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0..100.0f64, len)
    }

    proptest! {
        #[test]
        fn coefficients_satisfy_defining_identity(weights in arb_weights()) {
            // k_i (1 - 2 w_i) + sum(k) w_i^2 = w_i^2 for every i
            let coeffs = DiveCoefficients::from_weights(&weights);
            let k_sum: f64 = (0..coeffs.len()).map(|i| coeffs.coefficient(i)).sum();
            for (i, &w) in weights.as_slice().iter().enumerate() {
                let lhs = coeffs.coefficient(i) * (1.0 - 2.0 * w) + k_sum * w * w;
                prop_assert!((lhs - w * w).abs() < 1e-10);
            }
        }

        #[test]
        fn location_and_scale_equivariance(
            weights in arb_weights(),
            shift in -50.0..50.0f64,
            scale in 0.1..10.0f64,
        ) {
            let n = weights.len();
            let effects: Vec<f64> = (0..n).map(|i| (i as f64 * 1.7).sin() * 20.0).collect();
            let base_pool = pool(&effects, &weights).unwrap();
            let (base_var, _) = direct_variance(&effects, &weights).unwrap();

            let shifted: Vec<f64> = effects.iter().map(|y| y + shift).collect();
            let shifted_pool = pool(&shifted, &weights).unwrap();
            let (shifted_var, _) = direct_variance(&shifted, &weights).unwrap();
            prop_assert!((shifted_pool - (base_pool + shift)).abs() < 1e-9);
            prop_assert!((shifted_var - base_var).abs() <= 1e-9 * base_var.max(1.0));

            let scaled: Vec<f64> = effects.iter().map(|y| y * scale).collect();
            let (scaled_var, _) = direct_variance(&scaled, &weights).unwrap();
            prop_assert!((scaled_var - scale * scale * base_var).abs() <= 1e-9 * scaled_var.max(1.0));
        }

        #[test]
        fn equal_weight_reduction_identity(
            n in 3usize..15,
            seed in 0u64..1000,
        ) {
            let effects: Vec<f64> = (0..n)
                .map(|i| ((seed as f64 + 1.0) * (i as f64 + 0.5)).sin() * 30.0)
                .collect();
            let w = WeightVector::equal(n).unwrap();
            let (var, _) = direct_variance(&effects, &w).unwrap();
            let mean = effects.iter().sum::<f64>() / n as f64;
            let oracle = effects.iter().map(|y| (y - mean).powi(2)).sum::<f64>()
                / (n as f64 * (n - 1) as f64);
            prop_assert!((var - oracle).abs() <= 1e-12 * oracle.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn sensitivity_monotone_in_weight(a in 0.001..0.499f64, b in 0.001..0.499f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi > lo);
            let h = |w: f64| w * w / (1.0 - 2.0 * w);
            prop_assert!(h(hi) > h(lo));
        }

        #[test]
        fn variance_nonnegative(weights in arb_weights(), seed in 0u64..500) {
            let effects: Vec<f64> = (0..weights.len())
                .map(|i| ((seed + i as u64) as f64).cos() * 40.0)
                .collect();
            let (var, _) = direct_variance(&effects, &weights).unwrap();
            prop_assert!(var >= 0.0);
        }

        #[test]
        fn z_interval_nested_in_t_interval(
            weights in arb_weights(),
            seed in 0u64..500,
        ) {
            let effects: Vec<f64> = (0..weights.len())
                .map(|i| ((seed + 3 * i as u64) as f64).sin() * 10.0)
                .collect();
            let est = pool(&effects, &weights).unwrap();
            let (var, _) = direct_variance(&effects, &weights).unwrap();
            let n = weights.len();
            let ci_z = wald_ci(est, var, n, 0.05, CiFlavor::Z).unwrap();
            let ci_t = wald_ci(est, var, n, 0.05, CiFlavor::T).unwrap();
            prop_assert!(ci_t.0 <= ci_z.0 && ci_z.1 <= ci_t.1);
            // both centered on the estimate
            prop_assert!((0.5 * (ci_z.0 + ci_z.1) - est).abs() < 1e-9);
            prop_assert!((0.5 * (ci_t.0 + ci_t.1) - est).abs() < 1e-9);
        }
    }
}
