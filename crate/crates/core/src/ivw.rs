//! Classical fixed-effect and random-effects inverse-variance pooling with
//! the DerSimonian-Laird moment estimator of the between-study variance.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IvwError {
    #[error("no studies supplied")]
    EmptyInput,
    #[error("{effects} effects but {variances} within-study variances")]
    LengthMismatch { effects: usize, variances: usize },
    #[error("within-study variance {value} at index {index} is not positive")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("the heterogeneity estimator needs at least two studies (got {0})")]
    NeedTwoStudies(usize),
    #[error("between-study variance {0} is negative or not finite")]
    InvalidTau2(f64),
}

/// Study-level effects paired with their within-study variances.
#[derive(Debug, Clone, PartialEq)]
pub struct IvwInput {
    effects: Vec<f64>,
    within_var: Vec<f64>,
}

impl IvwInput {
    pub fn new(effects: Vec<f64>, within_var: Vec<f64>) -> Result<Self, IvwError> {
        if effects.is_empty() {
            return Err(IvwError::EmptyInput);
        }
        if effects.len() != within_var.len() {
            return Err(IvwError::LengthMismatch {
                effects: effects.len(),
                variances: within_var.len(),
            });
        }
        for (index, &value) in within_var.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(IvwError::NonPositiveVariance { index, value });
            }
        }
        Ok(Self { effects, within_var })
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn effects(&self) -> &[f64] {
        &self.effects
    }

    pub fn within_var(&self) -> &[f64] {
        &self.within_var
    }
}

/// Point estimate and variance of an inverse-variance weighted pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledEstimate {
    pub estimate: f64,
    pub variance: f64,
}

/// DerSimonian-Laird heterogeneity summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterogeneityEstimate {
    /// Truncated estimate, `max(0, tau2_untruncated)`.
    pub tau2: f64,
    /// Moment estimate before truncation at zero, kept for diagnostics.
    pub tau2_untruncated: f64,
    /// Cochran Q statistic under fixed-effect weights.
    pub q_stat: f64,
    /// `n_studies - 1`.
    pub df: u64,
}

/// Fixed-effect pool: weights `1/sigma_i^2`, variance `1/sum(w)`.
pub fn fe_pool(input: &IvwInput) -> PooledEstimate {
    weighted_pool(input, 0.0)
}

/// Random-effects pool with a known (or previously estimated)
/// between-study variance: weights `1/(sigma_i^2 + tau2)`.
pub fn re_pool(input: &IvwInput, tau2: f64) -> Result<PooledEstimate, IvwError> {
    if !tau2.is_finite() || tau2 < 0.0 {
        return Err(IvwError::InvalidTau2(tau2));
    }
    Ok(weighted_pool(input, tau2))
}

fn weighted_pool(input: &IvwInput, tau2: f64) -> PooledEstimate {
    let mut w_sum = 0.0;
    let mut wy_sum = 0.0;
    for (&y, &v) in input.effects.iter().zip(&input.within_var) {
        let w = 1.0 / (v + tau2);
        w_sum += w;
        wy_sum += w * y;
    }
    PooledEstimate { estimate: wy_sum / w_sum, variance: 1.0 / w_sum }
}

/// DerSimonian-Laird moment estimator of the between-study variance:
/// `tau2 = max(0, (Q - (N-1)) / (sum(w) - sum(w^2)/sum(w)))` with
/// fixed-effect weights `w = 1/sigma^2`.
pub fn dl_tau2(input: &IvwInput) -> Result<HeterogeneityEstimate, IvwError> {
    let n = input.len();
    if n < 2 {
        return Err(IvwError::NeedTwoStudies(n));
    }
    let w: Vec<f64> = input.within_var.iter().map(|v| 1.0 / v).collect();
    let w_sum: f64 = w.iter().sum();
    let w2_sum: f64 = w.iter().map(|x| x * x).sum();
    let mu_fe = input
        .effects
        .iter()
        .zip(&w)
        .map(|(y, w)| w * y)
        .sum::<f64>()
        / w_sum;
    let q_stat: f64 = input
        .effects
        .iter()
        .zip(&w)
        .map(|(y, w)| w * (y - mu_fe).powi(2))
        .sum();
    let df = (n - 1) as u64;
    let denom = w_sum - w2_sum / w_sum;
    let tau2_untruncated = (q_stat - df as f64) / denom;
    Ok(HeterogeneityEstimate {
        tau2: tau2_untruncated.max(0.0),
        tau2_untruncated,
        q_stat,
        df,
    })
}
