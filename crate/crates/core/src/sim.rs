//! Monte Carlo engine: factorial design cells, outcome generation,
//! analytic variance benchmarks, and the %Bias/%MSE/coverage metrics.
//!
//! Every stochastic draw comes from a counter-based stream keyed by
//! `(seed, replicate, study, channel)` (see [`crate::streams`]), so a run
//! is reproducible bit for bit regardless of how replicates are scheduled
//! across workers.

use rand::Rng;
use rand_distr::Distribution as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::dist::{DistError, Family};
use crate::dive::{self, DiveError};
use crate::ivw::IvwError;
use crate::model::{CiFlavor, GroupSummary, Method, PooledResult, StudyRecord};
use crate::qe::{self, QeError, QeModel};
use crate::streams;

use std::f64::consts::PI;

/// Deterministic minimum group-1 size under varying allocation.
pub const BASELINE_GROUP_SIZE: u64 = 50;

/// Nominal level used for the simulated intervals.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("heterogeneity fraction must lie in [0, 1) (got {0})")]
    InvalidI2(f64),
    #[error("the heterogeneity mapping needs at least two studies (got {0})")]
    NeedTwoStudies(usize),
    #[error(
        "varying allocation infeasible: {total} group-1 observations cannot cover \
         the 50-per-study baseline of {baseline}"
    )]
    InfeasibleBaseline { total: u64, baseline: u64 },
    #[error("true pooled difference or variance target is zero; relative metrics are undefined")]
    ZeroTruthDenominator,
    #[error("no replicates to summarize")]
    NoReplicates,
    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: Box<SimError> },
    #[error(transparent)]
    Dive(#[from] DiveError),
    #[error(transparent)]
    Qe(#[from] QeError),
    #[error(transparent)]
    Ivw(#[from] IvwError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Per-group sample-size pattern of a design cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizePattern {
    /// Every study gets exactly the design size in both groups.
    Fixed,
    /// Group-1 sizes follow a baseline of 50 plus a Dirichlet-multinomial
    /// split of the remaining observations; group 2 mirrors group 1.
    Varying,
}

/// Outcome distribution family of a design cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Normal,
    SkewNormal,
    LogNormal,
}

/// One factorial design cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub n_studies: usize,
    pub size_pattern: SizePattern,
    /// Design-average per-group sample size.
    pub avg_n: u64,
    pub outcome: Outcome,
    /// Target heterogeneity fraction, in [0, 1).
    pub i2: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_studies < 2 {
            return Err(SimError::InvalidScenario(format!(
                "n_studies must be at least 2 (got {})",
                self.n_studies
            )));
        }
        if !(0.0..1.0).contains(&self.i2) {
            return Err(SimError::InvalidI2(self.i2));
        }
        if self.replicates == 0 {
            return Err(SimError::InvalidScenario("replicates must be at least 1".into()));
        }
        if self.avg_n == 0 {
            return Err(SimError::InvalidScenario("avg_n must be at least 1".into()));
        }
        if self.size_pattern == SizePattern::Varying && self.avg_n <= BASELINE_GROUP_SIZE {
            return Err(SimError::InvalidScenario(format!(
                "varying allocation needs avg_n > {BASELINE_GROUP_SIZE} (got {})",
                self.avg_n
            )));
        }
        Ok(())
    }
}

/// Sample quantile of pre-sorted data under the median-unbiased
/// interpolation rule (Hyndman-Fan type 8).
///
/// This single rule produces every summary statistic computed from
/// generated outcomes, quartiles and medians alike; at `p = 1/2` it
/// coincides with the usual sample median for both parities of `n`.
pub fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    let h = ((n as f64 + 1.0 / 3.0) * p + 1.0 / 3.0).clamp(1.0, n as f64);
    let j = h.floor() as usize;
    let g = h - j as f64;
    if j >= n {
        sorted[n - 1]
    } else {
        (1.0 - g) * sorted[j - 1] + g * sorted[j]
    }
}

fn std_normal_quantile(p: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::standard().inverse_cdf(p)
}

/// Group-1 mean shift under the normal outcome family:
/// `(z_0.975 + z_0.60) * sqrt(pi / n)`, so a two-sample median test has
/// roughly 60% power at the design-average per-group size `n` (the
/// large-sample variance of the median difference between two unit-sd
/// normal groups of size `n` is `pi/n`).
pub fn normal_shift(avg_n: u64) -> f64 {
    (std_normal_quantile(0.975) + std_normal_quantile(0.60)) * (PI / avg_n as f64).sqrt()
}

/// The two group outcome distributions of a design cell.
pub fn outcome_families(outcome: Outcome, avg_n: u64) -> (Family, Family) {
    match outcome {
        Outcome::Normal => (
            Family::Normal { mean: 5.0 + normal_shift(avg_n), sd: 1.0 },
            Family::Normal { mean: 5.0, sd: 1.0 },
        ),
        Outcome::SkewNormal => (
            Family::SkewNormal { location: 5.0, scale: 5.0, shape: 5.0 },
            Family::SkewNormal { location: 5.0, scale: 10.0, shape: 10.0 },
        ),
        Outcome::LogNormal => (
            Family::LogNormal { meanlog: 2.0, sdlog: 1.0 },
            Family::LogNormal { meanlog: 3.0, sdlog: 2.0 },
        ),
    }
}

/// Population constants of a design cell that do not depend on realized
/// sizes: the outcome families, their true medians, and the density
/// heights at those medians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProfile {
    pub family1: Family,
    pub family2: Family,
    pub median1: f64,
    pub median2: f64,
    pub density1: f64,
    pub density2: f64,
}

impl OutcomeProfile {
    pub fn new(outcome: Outcome, avg_n: u64) -> Result<Self, SimError> {
        let (family1, family2) = outcome_families(outcome, avg_n);
        let median1 = family1.median()?;
        let median2 = family2.median()?;
        let density1 = family1.pdf(median1);
        let density2 = family2.pdf(median2);
        if !(density1 > 0.0 && density2 > 0.0) {
            return Err(DistError::ZeroDensityAtMedian.into());
        }
        Ok(Self { family1, family2, median1, median2, density1, density2 })
    }

    /// True pooled median difference of the cell.
    pub fn mu(&self) -> f64 {
        self.median1 - self.median2
    }
}

/// Maps a target heterogeneity fraction to a between-study variance via
/// the unequal-size correction:
/// `tau2 = I2/(1 - I2) * s2_typical` with
/// `s2_typical = (N-1) sum(w) / ((sum w)^2 - sum(w^2))`, `w = 1/sigma^2`.
pub fn tau2_from_i2(i2: f64, sigma2: &[f64]) -> Result<f64, SimError> {
    if !(0.0..1.0).contains(&i2) {
        return Err(SimError::InvalidI2(i2));
    }
    if sigma2.len() < 2 {
        return Err(SimError::NeedTwoStudies(sigma2.len()));
    }
    if i2 == 0.0 {
        return Ok(0.0);
    }
    let w: Vec<f64> = sigma2.iter().map(|s| 1.0 / s).collect();
    let w_sum: f64 = w.iter().sum();
    let w2_sum: f64 = w.iter().map(|x| x * x).sum();
    let n = sigma2.len() as f64;
    let s2_typical = (n - 1.0) * w_sum / (w_sum * w_sum - w2_sum);
    Ok(i2 / (1.0 - i2) * s2_typical)
}

/// Exact multinomial draw by sequential binomial decomposition.
fn multinomial<R: Rng + ?Sized>(trials: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = trials;
    let mut rest = 1.0f64;
    for i in 0..probs.len() {
        if remaining == 0 {
            break;
        }
        if i == probs.len() - 1 || rest <= 0.0 {
            counts[i] += remaining;
            break;
        }
        let p = (probs[i] / rest).clamp(0.0, 1.0);
        let draw = rand_distr::Binomial::new(remaining, p)
            .expect("probability is clamped to [0, 1]")
            .sample(rng);
        counts[i] = draw;
        remaining -= draw;
        rest -= probs[i];
    }
    counts
}

/// Realizes per-study group sizes `(n_i1, n_i2)` for one replicate.
///
/// Fixed cells use the design size everywhere. Varying cells give each
/// study a baseline of 50 group-1 participants and split the remaining
/// `N*avg_n - 50N` observations by a flat Dirichlet-multinomial (unit
/// exponentials normalized into Dirichlet(1,...,1) proportions, then a
/// multinomial over the remainder). Group 2 mirrors group 1, and the
/// group-1 total is exactly `N*avg_n`.
pub fn allocate_sizes<R: Rng + ?Sized>(
    scenario: &SimScenario,
    rng: &mut R,
) -> Result<Vec<(u64, u64)>, SimError> {
    let n_studies = scenario.n_studies;
    match scenario.size_pattern {
        SizePattern::Fixed => Ok(vec![(scenario.avg_n, scenario.avg_n); n_studies]),
        SizePattern::Varying => {
            let total = scenario.avg_n * n_studies as u64;
            let baseline = BASELINE_GROUP_SIZE * n_studies as u64;
            if total < baseline {
                return Err(SimError::InfeasibleBaseline { total, baseline });
            }
            let mut proportions: Vec<f64> =
                (0..n_studies).map(|_| rng.sample::<f64, _>(rand_distr::Exp1)).collect();
            let sum: f64 = proportions.iter().sum();
            for p in &mut proportions {
                *p /= sum;
            }
            let extra = multinomial(total - baseline, &proportions, rng);
            Ok(extra
                .into_iter()
                .map(|e| {
                    let n1 = BASELINE_GROUP_SIZE + e;
                    (n1, n1)
                })
                .collect())
        }
    }
}

/// Ground truth of one replicate: the true pooled difference, the
/// between-study variance implied by the target I2, the per-study
/// large-sample variances from the realized sizes, and the analytic
/// variance targets for each estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTruth {
    pub mu: f64,
    pub tau2: f64,
    /// Per-study `sigma_i^2 = sum_j 1/(4 n_ij f_j(m_j)^2)`.
    pub sigma2: Vec<f64>,
    /// `sum w_i^2 (sigma_i^2 + tau2)` under normalized sample-size weights.
    pub v_target_dive: f64,
    /// `(sum 1/(sigma_i^2 + tau2))^-1`.
    pub v_target_re: f64,
    /// `sum w_i^2 (sigma_i^2 + tau2)` under normalized `1/sigma_i^2` weights.
    pub v_target_fe: f64,
}

/// Analytic truth for one replicate's realized sizes.
pub fn analytic_truth(
    scenario: &SimScenario,
    sizes: &[(u64, u64)],
) -> Result<ScenarioTruth, SimError> {
    let profile = OutcomeProfile::new(scenario.outcome, scenario.avg_n)?;
    truth_from_profile(&profile, scenario.i2, sizes)
}

/// Same as [`analytic_truth`] but with the scenario-constant population
/// quantities already computed.
pub fn truth_from_profile(
    profile: &OutcomeProfile,
    i2: f64,
    sizes: &[(u64, u64)],
) -> Result<ScenarioTruth, SimError> {
    let sigma2: Vec<f64> = sizes
        .iter()
        .map(|&(n1, n2)| {
            1.0 / (4.0 * n1 as f64 * profile.density1 * profile.density1)
                + 1.0 / (4.0 * n2 as f64 * profile.density2 * profile.density2)
        })
        .collect();
    let tau2 = tau2_from_i2(i2, &sigma2)?;

    let totals: Vec<f64> = sizes.iter().map(|&(n1, n2)| (n1 + n2) as f64).collect();
    let grand: f64 = totals.iter().sum();
    let v_target_dive = sigma2
        .iter()
        .zip(&totals)
        .map(|(s2, t)| (t / grand).powi(2) * (s2 + tau2))
        .sum();

    let v_target_re = 1.0 / sigma2.iter().map(|s2| 1.0 / (s2 + tau2)).sum::<f64>();

    let fe_raw: Vec<f64> = sigma2.iter().map(|s2| 1.0 / s2).collect();
    let fe_sum: f64 = fe_raw.iter().sum();
    let v_target_fe = sigma2
        .iter()
        .zip(&fe_raw)
        .map(|(s2, w)| (w / fe_sum).powi(2) * (s2 + tau2))
        .sum();

    Ok(ScenarioTruth { mu: profile.mu(), tau2, sigma2, v_target_dive, v_target_re, v_target_fe })
}

fn summarize_group(mut values: Vec<f64>) -> GroupSummary {
    values.sort_unstable_by(f64::total_cmp);
    GroupSummary::with_quartiles(
        values.len() as u64,
        sample_quantile(&values, 0.5),
        sample_quantile(&values, 0.25),
        sample_quantile(&values, 0.75),
    )
}

/// Generates one replicate's study records.
///
/// Per study: a random effect `delta ~ N(0, tau2)` is drawn from the
/// study's random-effect stream, both groups are sampled from the
/// outcome families on their own streams, `delta` is added to every
/// group-1 value (a pure location shift), and the records carry the
/// sample median and quartiles under [`sample_quantile`].
pub fn generate_replicate(
    scenario: &SimScenario,
    truth: &ScenarioTruth,
    sizes: &[(u64, u64)],
    replicate: u64,
) -> Result<Vec<StudyRecord>, SimError> {
    let (family1, family2) = outcome_families(scenario.outcome, scenario.avg_n);
    let seed = scenario.seed;
    let mut records = Vec::with_capacity(sizes.len());
    for (i, &(n1, n2)) in sizes.iter().enumerate() {
        let study = i as u64;
        let delta = if truth.tau2 > 0.0 {
            let mut rng = streams::stream(seed, replicate, study, streams::CHANNEL_RANDOM_EFFECT);
            rand_distr::Normal::new(0.0, truth.tau2.sqrt())
                .expect("tau2 is finite and nonnegative")
                .sample(&mut rng)
        } else {
            0.0
        };
        let mut g1 = family1.sample(
            n1 as usize,
            &mut streams::stream(seed, replicate, study, streams::CHANNEL_GROUP1),
        )?;
        for x in &mut g1 {
            *x += delta;
        }
        let g2 = family2.sample(
            n2 as usize,
            &mut streams::stream(seed, replicate, study, streams::CHANNEL_GROUP2),
        )?;
        records.push(StudyRecord::new(
            format!("study-{}", i + 1),
            summarize_group(g1),
            summarize_group(g2),
        ));
    }
    Ok(records)
}

/// One replicate's truth and the three fitted results.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub truth: ScenarioTruth,
    pub dive: PooledResult,
    pub qe_re: PooledResult,
    pub qe_fe: PooledResult,
}

fn run_replicate_with_profile(
    scenario: &SimScenario,
    profile: &OutcomeProfile,
    replicate: usize,
) -> Result<ReplicateResult, SimError> {
    let mut alloc_rng = streams::stream(
        scenario.seed,
        replicate as u64,
        streams::STUDY_ALLOCATION,
        0,
    );
    let sizes = allocate_sizes(scenario, &mut alloc_rng)?;
    let truth = truth_from_profile(profile, scenario.i2, &sizes)?;
    let records = generate_replicate(scenario, &truth, &sizes, replicate as u64)?;
    let dive = dive::analyze(&records, DEFAULT_ALPHA)?;
    let qe_re = qe::pool(&records, QeModel::RandomEffect, DEFAULT_ALPHA)?;
    let qe_fe = qe::pool(&records, QeModel::FixedEffect, DEFAULT_ALPHA)?;
    Ok(ReplicateResult { truth, dive, qe_re, qe_fe })
}

/// Generates and analyzes a single replicate.
pub fn run_replicate(scenario: &SimScenario, replicate: usize) -> Result<ReplicateResult, SimError> {
    let profile = OutcomeProfile::new(scenario.outcome, scenario.avg_n)?;
    run_replicate_with_profile(scenario, &profile, replicate)
}

/// Aggregate performance of one method over the replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodMetrics {
    /// `100 * mean((estimate - mu)/mu)`.
    pub pct_bias_point: f64,
    /// `100 * mean(((estimate - mu)/mu)^2)`.
    pub pct_mse_point: f64,
    /// `100 * mean((varhat - target)/target)` against the method's
    /// analytic variance target.
    pub pct_bias_var: f64,
    /// `100 * mean(((varhat - target)/target)^2)`.
    pub pct_mse_var: f64,
    pub cp_z: f64,
    pub aw_z: f64,
    pub cp_t: f64,
    pub aw_t: f64,
    /// Replicate-level `100 * (estimate - mu)/mu`.
    pub point_errors: Vec<f64>,
    /// Replicate-level `100 * (varhat - target)/target`.
    pub var_errors: Vec<f64>,
}

/// Metrics for the three methods over one design cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub i2: f64,
    pub alpha: f64,
    pub replicates: usize,
    pub dive: MethodMetrics,
    pub qe_re: MethodMetrics,
    pub qe_fe: MethodMetrics,
}

impl MetricsReport {
    pub fn by_method(&self) -> [(Method, &MethodMetrics); 3] {
        [
            (Method::Dive, &self.dive),
            (Method::QeRe, &self.qe_re),
            (Method::QeFe, &self.qe_fe),
        ]
    }
}

fn summarize_method(
    results: &[ReplicateResult],
    pick: impl Fn(&ReplicateResult) -> &PooledResult,
    target: impl Fn(&ScenarioTruth) -> f64,
    alpha: f64,
) -> Result<MethodMetrics, SimError> {
    let r = results.len() as f64;
    let mut point_errors = Vec::with_capacity(results.len());
    let mut var_errors = Vec::with_capacity(results.len());
    let (mut cover_z, mut cover_t, mut width_z, mut width_t) = (0.0, 0.0, 0.0, 0.0);
    for result in results {
        let est = pick(result);
        let mu = result.truth.mu;
        let v_target = target(&result.truth);
        if mu == 0.0 || v_target <= 0.0 {
            return Err(SimError::ZeroTruthDenominator);
        }
        point_errors.push(100.0 * (est.estimate - mu) / mu);
        var_errors.push(100.0 * (est.variance - v_target) / v_target);

        let ci_z = dive::wald_ci(est.estimate, est.variance, est.n_studies, alpha, CiFlavor::Z)?;
        let ci_t = dive::wald_ci(est.estimate, est.variance, est.n_studies, alpha, CiFlavor::T)?;
        if ci_z.0 <= mu && mu <= ci_z.1 {
            cover_z += 1.0;
        }
        if ci_t.0 <= mu && mu <= ci_t.1 {
            cover_t += 1.0;
        }
        width_z += ci_z.1 - ci_z.0;
        width_t += ci_t.1 - ci_t.0;
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / r;
    Ok(MethodMetrics {
        pct_bias_point: mean(&point_errors),
        pct_mse_point: point_errors.iter().map(|e| e * e / 100.0).sum::<f64>() / r,
        pct_bias_var: mean(&var_errors),
        pct_mse_var: var_errors.iter().map(|e| e * e / 100.0).sum::<f64>() / r,
        cp_z: cover_z / r,
        aw_z: width_z / r,
        cp_t: cover_t / r,
        aw_t: width_t / r,
        point_errors,
        var_errors,
    })
}

/// Scores the per-replicate results against their analytic truths.
///
/// Coverage is evaluated for both interval flavors at level `alpha`.
pub fn compute_metrics(
    results: &[ReplicateResult],
    i2: f64,
    alpha: f64,
) -> Result<MetricsReport, SimError> {
    if results.is_empty() {
        return Err(SimError::NoReplicates);
    }
    Ok(MetricsReport {
        i2,
        alpha,
        replicates: results.len(),
        dive: summarize_method(results, |r| &r.dive, |t| t.v_target_dive, alpha)?,
        qe_re: summarize_method(results, |r| &r.qe_re, |t| t.v_target_re, alpha)?,
        qe_fe: summarize_method(results, |r| &r.qe_fe, |t| t.v_target_fe, alpha)?,
    })
}

/// Runs a full design cell: generates every replicate, fits the three
/// estimators, and aggregates the metrics.
///
/// Replicates run in parallel on the current rayon pool; results are
/// folded in replicate order, so the report is identical for any worker
/// count.
pub fn run_scenario(scenario: &SimScenario) -> Result<MetricsReport, SimError> {
    scenario.validate()?;
    let profile = OutcomeProfile::new(scenario.outcome, scenario.avg_n)?;
    let results: Result<Vec<ReplicateResult>, SimError> = (0..scenario.replicates)
        .into_par_iter()
        .map(|index| {
            run_replicate_with_profile(scenario, &profile, index)
                .map_err(|e| SimError::Replicate { index, source: Box::new(e) })
        })
        .collect();
    compute_metrics(&results?, scenario.i2, DEFAULT_ALPHA)
}
