//! Quantile-estimation pipeline: recover within-study variances of sample
//! median differences by fitting candidate parametric families to the
//! reported quartiles, then pool through inverse-variance weighting.
//!
//! For each group the loss
//! `S = sum_{p in {.25,.5,.75}} (F^{-1}(p | theta) - reported_p)^2`
//! is minimized over each candidate family, the family with the smallest
//! loss is selected, and the fitted density at the *reported* median
//! enters the variance `1/(4 n f(M)^2)` for that group.

use thiserror::Error;

use crate::dist::{DistError, Family, FamilyKind};
use crate::dive::{self, DiveError};
use crate::ivw::{self, IvwError, IvwInput};
use crate::model::{Method, PooledResult, StudyRecord};

use std::f64::consts::LN_2;

/// Candidate families, in tie-breaking order.
pub const CANDIDATE_FAMILIES: [FamilyKind; 4] = [
    FamilyKind::Normal,
    FamilyKind::LogNormal,
    FamilyKind::Weibull,
    FamilyKind::Gamma,
];

/// Losses within this distance of the minimum count as ties, resolved in
/// favor of the earlier family in [`CANDIDATE_FAMILIES`].
pub const LOSS_TIE_TOLERANCE: f64 = 1e-12;

const FIT_PROBS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QeError {
    #[error("quartiles must satisfy q1 <= median <= q3 with q1 < q3 (got {q1}, {median}, {q3})")]
    InvalidQuartiles { q1: f64, median: f64, q3: f64 },
    #[error("the {family} family requires positive quantiles (q1 = {q1})")]
    UnsupportedQuantiles { family: FamilyKind, q1: f64 },
    #[error("the {family} fit did not reach a finite loss")]
    OptimizerDiverged { family: FamilyKind },
    #[error("the {family} fit has no positive density at the reported median")]
    DegenerateDensity { family: FamilyKind },
    #[error("no candidate family produced a valid fit")]
    AllFamiliesFailed,
    #[error("study `{id}` lacks quartiles in one or both groups")]
    NotQeEligible { id: String },
    #[error("{model} pooling needs at least {required} studies with quartiles in both groups (found {found})")]
    InsufficientQeEligibleStudies { model: QeModel, required: usize, found: usize },
    #[error(transparent)]
    Ivw(#[from] IvwError),
    #[error(transparent)]
    Dive(#[from] DiveError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Effects model for the pooling step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QeModel {
    FixedEffect,
    RandomEffect,
}

impl std::fmt::Display for QeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QeModel::FixedEffect => "fixed-effect",
            QeModel::RandomEffect => "random-effects",
        })
    }
}

/// One fitted family for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct DistFit {
    pub family: Family,
    /// Quantile-matching loss at the optimum, in squared outcome units.
    pub loss: f64,
    /// Fitted density evaluated at the reported median.
    pub density_at_median: f64,
}

/// Estimated variance of one study's median difference, with the fits
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct QeStudyVariance {
    pub var: f64,
    pub fit1: DistFit,
    pub fit2: DistFit,
}

// ---------------------------------------------------------------------
// Nelder-Mead
// ---------------------------------------------------------------------

struct NmOutcome {
    x: Vec<f64>,
    loss: f64,
    converged: bool,
}

/// Downhill simplex minimization. Converges when the simplex diameter
/// (max infinity-norm distance from the best vertex) drops below
/// `diameter_tol`, or stops after `max_iter` iterations.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    max_iter: usize,
    diameter_tol: f64,
) -> NmOutcome {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] = if v[i].abs() > 1e-8 { v[i] * 1.05 } else { 0.00025 };
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0f64, f64::max);
        if diameter < diameter_tol {
            converged = true;
            break;
        }

        let worst = simplex[dim].clone();
        let second_worst_loss = simplex[dim - 1].1;
        let best_loss = simplex[0].1;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let point = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = point(1.0);
        let f_r = f(&reflected);
        if f_r < best_loss {
            let expanded = point(2.0);
            let f_e = f(&expanded);
            simplex[dim] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
        } else if f_r < second_worst_loss {
            simplex[dim] = (reflected, f_r);
        } else {
            let (contracted, f_c) = if f_r < worst.1 {
                let c = point(0.5);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = point(-0.5);
                let fc = f(&c);
                (c, fc)
            };
            if f_c < worst.1.min(f_r) {
                simplex[dim] = (contracted, f_c);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (x, b) in entry.0.iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, loss) = simplex.swap_remove(0);
    NmOutcome { x, loss, converged }
}

// ---------------------------------------------------------------------
// Per-family fitting
// ---------------------------------------------------------------------

/// Which parameters are positivity-constrained (optimized on log scale).
fn log_scale_mask(kind: FamilyKind) -> [bool; 2] {
    match kind {
        FamilyKind::Normal | FamilyKind::LogNormal => [false, true],
        FamilyKind::Weibull | FamilyKind::Gamma => [true, true],
        FamilyKind::SkewNormal => unreachable!("not a quantile-matching candidate"),
    }
}

fn family_from_params(kind: FamilyKind, p: &[f64]) -> Family {
    match kind {
        FamilyKind::Normal => Family::Normal { mean: p[0], sd: p[1] },
        FamilyKind::LogNormal => Family::LogNormal { meanlog: p[0], sdlog: p[1] },
        FamilyKind::Weibull => Family::Weibull { shape: p[0], scale: p[1] },
        FamilyKind::Gamma => Family::Gamma { shape: p[0], rate: p[1] },
        FamilyKind::SkewNormal => unreachable!("not a quantile-matching candidate"),
    }
}

/// Starting parameters matching the reported median and IQR.
fn starting_values(kind: FamilyKind, q1: f64, median: f64, q3: f64) -> [f64; 2] {
    let iqr_sd = (q3 - q1) / 1.349; // IQR of a normal is 1.349 sd
    match kind {
        FamilyKind::Normal => [median, iqr_sd],
        FamilyKind::LogNormal => [median.ln(), (q3 / q1).ln() / 1.349],
        FamilyKind::Weibull => {
            // quartile ratio pins the shape: q3/q1 = (ln4 / ln(4/3))^(1/shape)
            let ratio = q3 / q1;
            let shape = (4.0f64.ln() / (4.0f64 / 3.0).ln()).ln() / ratio.ln();
            if shape.is_finite() && shape > 0.0 {
                [shape, median / LN_2.powf(1.0 / shape)]
            } else {
                [1.0, median / LN_2]
            }
        }
        FamilyKind::Gamma => {
            if iqr_sd > 0.0 && median > 0.0 {
                [(median / iqr_sd).powi(2), median / (iqr_sd * iqr_sd)]
            } else {
                [1.0, LN_2 / median]
            }
        }
        FamilyKind::SkewNormal => unreachable!("not a quantile-matching candidate"),
    }
}

fn quantile_loss(family: &Family, targets: &[f64; 3]) -> f64 {
    let mut total = 0.0;
    for (p, target) in FIT_PROBS.iter().zip(targets) {
        match family.quantile(*p) {
            Ok(q) => total += (q - target) * (q - target),
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

/// Fits one candidate family to the reported quartiles by minimizing the
/// quantile-matching loss.
///
/// Positivity-constrained parameters are optimized on the log scale with
/// Nelder-Mead (simplex diameter tolerance 1e-9, at most 500 iterations,
/// one restart from a perturbed point when the first run does not
/// converge). A fit whose loss never becomes finite is reported as
/// diverged.
pub fn fit_family(kind: FamilyKind, q1: f64, median: f64, q3: f64) -> Result<DistFit, QeError> {
    if !(q1 <= median && median <= q3 && q1 < q3)
        || !(q1.is_finite() && median.is_finite() && q3.is_finite())
    {
        return Err(QeError::InvalidQuartiles { q1, median, q3 });
    }
    let candidate = family_from_params(kind, &starting_values(kind, q1, median, q3));
    if candidate.positive_support() && q1 <= 0.0 {
        return Err(QeError::UnsupportedQuantiles { family: kind, q1 });
    }

    let mask = log_scale_mask(kind);
    let to_internal = |p: &[f64]| -> Vec<f64> {
        p.iter()
            .zip(mask)
            .map(|(&v, log)| if log { v.ln() } else { v })
            .collect()
    };
    let from_internal = |p: &[f64]| -> Vec<f64> {
        p.iter()
            .zip(mask)
            .map(|(&v, log)| if log { v.exp() } else { v })
            .collect()
    };

    let targets = [q1, median, q3];
    let objective = move |internal: &[f64]| -> f64 {
        let params = from_internal(internal);
        if params.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        quantile_loss(&family_from_params(kind, &params), &targets)
    };

    let start = to_internal(&starting_values(kind, q1, median, q3));
    let mut best = nelder_mead(&objective, &start, 500, 1e-9);
    if !best.converged {
        let perturbed: Vec<f64> = best.x.iter().map(|v| v + 0.05 * (v.abs() + 0.1)).collect();
        let second = nelder_mead(&objective, &perturbed, 500, 1e-9);
        if second.loss < best.loss {
            best = second;
        }
    }
    if !best.loss.is_finite() {
        return Err(QeError::OptimizerDiverged { family: kind });
    }

    let family = family_from_params(kind, &from_internal(&best.x));
    let density_at_median = family.pdf(median);
    if !density_at_median.is_finite() || density_at_median <= 0.0 {
        return Err(QeError::DegenerateDensity { family: kind });
    }
    Ok(DistFit { family, loss: best.loss, density_at_median })
}

/// Fits every candidate family and returns the one with the smallest
/// loss. Families whose support cannot hold the quartiles are skipped;
/// exact ties go to the earlier family in [`CANDIDATE_FAMILIES`].
pub fn select_family(q1: f64, median: f64, q3: f64) -> Result<DistFit, QeError> {
    let mut best: Option<DistFit> = None;
    for kind in CANDIDATE_FAMILIES {
        let fit = match fit_family(kind, q1, median, q3) {
            Ok(fit) => fit,
            Err(QeError::InvalidQuartiles { q1, median, q3 }) => {
                return Err(QeError::InvalidQuartiles { q1, median, q3 })
            }
            Err(_) => continue,
        };
        best = match best {
            Some(current) if fit.loss < current.loss - LOSS_TIE_TOLERANCE => Some(fit),
            Some(current) => Some(current),
            None => Some(fit),
        };
    }
    best.ok_or(QeError::AllFamiliesFailed)
}

/// Within-study variance of the median difference for a QE-eligible
/// study: the two per-group terms `1/(4 n f(M)^2)` summed.
pub fn study_variance(record: &StudyRecord) -> Result<QeStudyVariance, QeError> {
    if !record.is_qe_eligible() {
        return Err(QeError::NotQeEligible { id: record.id.clone() });
    }
    let g1 = &record.group1;
    let g2 = &record.group2;
    let fit1 = select_family(g1.q1.unwrap(), g1.median, g1.q3.unwrap())?;
    let fit2 = select_family(g2.q1.unwrap(), g2.median, g2.q3.unwrap())?;
    let term = |n: u64, f: f64| 1.0 / (4.0 * n as f64 * f * f);
    let var = term(g1.n, fit1.density_at_median) + term(g2.n, fit2.density_at_median);
    Ok(QeStudyVariance { var, fit1, fit2 })
}

fn has_zero_iqr(record: &StudyRecord) -> bool {
    let degenerate = |g: &crate::model::GroupSummary| match (g.q1, g.q3) {
        (Some(q1), Some(q3)) => q1 == q3,
        _ => false,
    };
    degenerate(&record.group1) || degenerate(&record.group2)
}

/// Pools the QE-eligible subset of `records` by inverse-variance
/// weighting, under a fixed-effect or a DerSimonian-Laird random-effects
/// model.
///
/// Studies without quartiles in both groups are not usable and are
/// skipped; studies with a zero interquartile range are excluded with a
/// warning naming them (their density at the median would be unbounded).
pub fn pool(records: &[StudyRecord], model: QeModel, alpha: f64) -> Result<PooledResult, QeError> {
    let mut warnings = Vec::new();
    let mut used: Vec<&StudyRecord> = Vec::new();
    let mut variances: Vec<f64> = Vec::new();
    for record in records {
        if !record.is_qe_eligible() {
            continue;
        }
        if has_zero_iqr(record) {
            warnings.push(format!(
                "study `{}` excluded from the quantile-estimation pool: zero interquartile range",
                record.id
            ));
            continue;
        }
        variances.push(study_variance(record)?.var);
        used.push(record);
    }

    let required = match model {
        QeModel::FixedEffect => 1,
        QeModel::RandomEffect => 2,
    };
    if used.len() < required {
        return Err(QeError::InsufficientQeEligibleStudies { model, required, found: used.len() });
    }

    let effects: Vec<f64> = used.iter().map(|r| r.effect()).collect();
    let input = IvwInput::new(effects, variances.clone())?;
    let (method, pooled, tau2) = match model {
        QeModel::FixedEffect => (Method::QeFe, ivw::fe_pool(&input), 0.0),
        QeModel::RandomEffect => {
            let het = ivw::dl_tau2(&input)?;
            (Method::QeRe, ivw::re_pool(&input, het.tau2)?, het.tau2)
        }
    };

    let raw: Vec<f64> = variances.iter().map(|v| 1.0 / (v + tau2)).collect();
    let raw_sum: f64 = raw.iter().sum();
    let weights = used
        .iter()
        .zip(&raw)
        .map(|(r, w)| (r.id.clone(), w / raw_sum))
        .collect();
    let n_total = used.iter().map(|r| r.total_n()).sum();

    Ok(dive::build_result(
        method,
        pooled.estimate,
        pooled.variance,
        used.len(),
        n_total,
        Some(tau2),
        alpha,
        weights,
        warnings,
    )?)
}
