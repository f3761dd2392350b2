//! Scenario config files: flat `key = value` text, one design cell per
//! file, `#` comments. The seed is required so that every run is
//! reproducible by construction.
//!
//! ```text
//! n_studies    = 30
//! size_pattern = varying
//! avg_n        = 100
//! outcome      = log-normal
//! i2           = 50%          # or 0.5
//! replicates   = 200
//! seed         = 20240811
//! ```

use std::collections::BTreeMap;

use medpool::sim::{Outcome, SimScenario, SizePattern};

use crate::CliError;

const KEYS: [&str; 7] = [
    "n_studies",
    "size_pattern",
    "avg_n",
    "outcome",
    "i2",
    "replicates",
    "seed",
];

fn config_err(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), message: message.into() }
}

pub fn parse_scenario_config(content: &str) -> Result<SimScenario, CliError> {
    let mut values: BTreeMap<&str, &str> = BTreeMap::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_err(&format!("line {}", idx + 1), format!("expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let canonical = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| config_err(key, "unknown key"))?;
        if values.insert(canonical, value).is_some() {
            return Err(config_err(key, "duplicate key"));
        }
    }

    let require = |key: &str| -> Result<&str, CliError> {
        values.get(key).copied().ok_or_else(|| config_err(key, "missing required key"))
    };

    let n_studies: usize = parse(require("n_studies")?, "n_studies")?;
    let size_pattern = match require("size_pattern")? {
        "fixed" => SizePattern::Fixed,
        "varying" => SizePattern::Varying,
        other => return Err(config_err("size_pattern", format!("expected `fixed` or `varying`, got `{other}`"))),
    };
    let avg_n: u64 = parse(require("avg_n")?, "avg_n")?;
    let outcome = match require("outcome")? {
        "normal" => Outcome::Normal,
        "skew-normal" => Outcome::SkewNormal,
        "log-normal" => Outcome::LogNormal,
        other => {
            return Err(config_err(
                "outcome",
                format!("expected `normal`, `skew-normal`, or `log-normal`, got `{other}`"),
            ))
        }
    };
    let i2 = parse_i2(require("i2")?)?;
    let replicates: usize = match values.get("replicates") {
        Some(v) => parse(v, "replicates")?,
        None => 1000,
    };
    let seed: u64 = parse(require("seed")?, "seed")?;

    let scenario = SimScenario { n_studies, size_pattern, avg_n, outcome, i2, replicates, seed };
    scenario
        .validate()
        .map_err(|e| config_err("scenario", e.to_string()))?;
    Ok(scenario)
}

fn parse<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| config_err(key, format!("cannot parse `{value}`")))
}

fn parse_i2(value: &str) -> Result<f64, CliError> {
    let (text, percent) = match value.strip_suffix('%') {
        Some(stripped) => (stripped.trim(), true),
        None => (value, false),
    };
    let raw: f64 = parse(text, "i2")?;
    Ok(if percent { raw / 100.0 } else { raw })
}
