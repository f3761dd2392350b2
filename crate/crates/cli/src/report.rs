//! Result rendering: human tables at two decimals, machine CSV/JSON at
//! full precision.

use std::fmt::Write as _;

use medpool::model::PooledResult;
use medpool::sim::MetricsReport;
use serde::Serialize;

/// Output shape for `pool`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

/// Which interval flavors the text rendering shows. Machine formats
/// always carry both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiChoice {
    Z,
    T,
    Both,
}

fn format_p(p: f64) -> String {
    if p < 0.0005 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

pub fn render_pooled(result: &PooledResult, format: OutputFormat, ci: CiChoice, alpha: f64) -> String {
    match format {
        OutputFormat::Text => render_text(result, ci, alpha),
        OutputFormat::Csv => render_csv(result),
        OutputFormat::Json => render_json(result, alpha),
    }
}

fn render_text(result: &PooledResult, ci: CiChoice, alpha: f64) -> String {
    let mut out = String::new();
    let level = 100.0 * (1.0 - alpha);
    let _ = writeln!(out, "method      {}", result.method);
    let _ = writeln!(
        out,
        "studies     {} (total n = {})",
        result.n_studies, result.n_total
    );
    let _ = writeln!(out, "estimate    {:.2}  (SE {:.2})", result.estimate, result.se);
    if matches!(ci, CiChoice::Z | CiChoice::Both) {
        let _ = writeln!(
            out,
            "{level:.0}% CI (z)  [{:.2}, {:.2}]   p = {}",
            result.ci_z.0,
            result.ci_z.1,
            format_p(result.p_z)
        );
    }
    if matches!(ci, CiChoice::T | CiChoice::Both) {
        let _ = writeln!(
            out,
            "{level:.0}% CI (t)  [{:.2}, {:.2}]   p = {}   (df = {})",
            result.ci_t.0,
            result.ci_t.1,
            format_p(result.p_t),
            result.df
        );
    }
    if let Some(tau2) = result.tau2 {
        let _ = writeln!(out, "tau^2       {tau2:.2}");
    }
    let _ = writeln!(out, "weights");
    let mut max: Option<&(String, f64)> = None;
    for pair in &result.weights {
        let _ = writeln!(out, "  {:<20} {:.3}", pair.0, pair.1);
        if max.is_none_or(|m| pair.1 > m.1) {
            max = Some(pair);
        }
    }
    if let Some((id, w)) = max {
        let _ = writeln!(out, "max weight  {w:.3} ({id})");
    }
    out
}

fn render_csv(result: &PooledResult) -> String {
    let max_weight = result
        .weights
        .iter()
        .map(|(_, w)| *w)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = String::from(
        "method,n_studies,n_total,estimate,se,variance,ci_z_lo,ci_z_hi,p_z,ci_t_lo,ci_t_hi,p_t,df,tau2,max_weight\n",
    );
    let tau2 = result.tau2.map_or_else(|| "NA".into(), |t| t.to_string());
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        result.method,
        result.n_studies,
        result.n_total,
        result.estimate,
        result.se,
        result.variance,
        result.ci_z.0,
        result.ci_z.1,
        result.p_z,
        result.ci_t.0,
        result.ci_t.1,
        result.p_t,
        result.df,
        tau2,
        max_weight,
    );
    out
}

#[derive(Serialize)]
struct WeightJson<'a> {
    study_id: &'a str,
    weight: f64,
}

#[derive(Serialize)]
struct PooledJson<'a> {
    method: String,
    n_studies: usize,
    n_total: u64,
    alpha: f64,
    estimate: f64,
    se: f64,
    variance: f64,
    ci_z: [f64; 2],
    p_z: f64,
    ci_t: [f64; 2],
    p_t: f64,
    df: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau2: Option<f64>,
    weights: Vec<WeightJson<'a>>,
    warnings: &'a [String],
}

fn render_json(result: &PooledResult, alpha: f64) -> String {
    let payload = PooledJson {
        method: result.method.to_string(),
        n_studies: result.n_studies,
        n_total: result.n_total,
        alpha,
        estimate: result.estimate,
        se: result.se,
        variance: result.variance,
        ci_z: [result.ci_z.0, result.ci_z.1],
        p_z: result.p_z,
        ci_t: [result.ci_t.0, result.ci_t.1],
        p_t: result.p_t,
        df: result.df,
        tau2: result.tau2,
        weights: result
            .weights
            .iter()
            .map(|(id, w)| WeightJson { study_id: id, weight: *w })
            .collect(),
        warnings: &result.warnings,
    };
    let mut text = serde_json::to_string_pretty(&payload).expect("plain data serializes");
    text.push('\n');
    text
}

/// Aggregate metrics table, one row per method, columns matching the
/// simulation result tables.
pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::from(
        "i2,method,pct_bias_point,pct_mse_point,pct_bias_var,pct_mse_var,cp_z,aw_z,cp_t,aw_t\n",
    );
    for (method, m) in report.by_method() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            report.i2,
            method,
            m.pct_bias_point,
            m.pct_mse_point,
            m.pct_bias_var,
            m.pct_mse_var,
            m.cp_z,
            m.aw_z,
            m.cp_t,
            m.aw_t,
        );
    }
    out
}

/// Replicate-level relative errors, for box plots of the estimators.
pub fn replicate_errors_csv(report: &MetricsReport) -> String {
    let mut out = String::from("replicate,method,point_pct_error,var_pct_error\n");
    for (method, m) in report.by_method() {
        for (i, (pe, ve)) in m.point_errors.iter().zip(&m.var_errors).enumerate() {
            let _ = writeln!(out, "{},{},{},{}", i, method, pe, ve);
        }
    }
    out
}
