//! Study-table CSV ingestion and emission.
//!
//! Schema (exact header): `study_id,n1,median1,q1_1,q3_1,n2,median2,q1_2,q3_2`
//! with `NA` (or an empty field) marking a missing quartile.

use std::fs;
use std::path::Path;

use medpool::model::{validate_studies, GroupSummary, StudyRecord};

use crate::CliError;

/// Exact header of a study table.
pub const STUDY_CSV_HEADER: &str = "study_id,n1,median1,q1_1,q3_1,n2,median2,q1_2,q3_2";

/// The bundled dataset: length of initial hospital stay (days) from
/// randomized trials of early supported discharge after stroke, one row
/// per trial, ESD arm as group 1 so that negative pooled differences
/// favor ESD. Quartiles are reported for two trials only.
pub const ESD_HOSPITAL_STAY_CSV: &str = include_str!("../data/esd_hospital_stay.csv");

/// Parsed study table plus ingestion warnings (rows usable for pooling
/// but not eligible for quantile-estimation methods).
#[derive(Debug, Clone)]
pub struct ParsedStudies {
    pub records: Vec<StudyRecord>,
    pub warnings: Vec<String>,
}

pub fn parse_study_csv(path: &Path) -> Result<ParsedStudies, CliError> {
    let content = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        message: source.to_string(),
    })?;
    parse_study_csv_str(&content)
}

pub fn parse_study_csv_str(content: &str) -> Result<ParsedStudies, CliError> {
    if content.trim().is_empty() {
        return Err(CliError::MalformedCsv { line: 1, message: "file is empty".into() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());

    let headers = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if headers != STUDY_CSV_HEADER {
        return Err(CliError::HeaderMismatch {
            expected: STUDY_CSV_HEADER.into(),
            found: headers,
        });
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 9 {
            return Err(CliError::MalformedCsv {
                line,
                message: format!("expected 9 fields, found {}", row.len()),
            });
        }
        let field = |i: usize| row.get(i).unwrap_or_default();
        let id = field(0).to_string();
        if id.is_empty() {
            return Err(CliError::MalformedCsv { line, message: "empty study_id".into() });
        }
        let group = |n_i: usize, m_i: usize, q1_i: usize, q3_i: usize| -> Result<GroupSummary, CliError> {
            Ok(GroupSummary {
                n: parse_count(field(n_i), line)?,
                median: parse_number(field(m_i), line)?,
                q1: parse_optional(field(q1_i), line)?,
                q3: parse_optional(field(q3_i), line)?,
            })
        };
        records.push(StudyRecord {
            id,
            group1: group(1, 2, 3, 4)?,
            group2: group(5, 6, 7, 8)?,
        });
    }

    let records = validate_studies(records)?;
    let warnings = records
        .iter()
        .filter(|r| !r.is_qe_eligible())
        .map(|r| {
            format!(
                "study `{}` lacks quartiles in one or both groups; \
                 usable for dive but not for qe-re/qe-fe",
                r.id
            )
        })
        .collect();
    Ok(ParsedStudies { records, warnings })
}

fn csv_error(err: csv::Error) -> CliError {
    let line = match err.position() {
        Some(p) => p.line(),
        None => 0,
    };
    CliError::MalformedCsv { line, message: err.to_string() }
}

fn parse_count(text: &str, line: u64) -> Result<u64, CliError> {
    text.parse().map_err(|_| CliError::MalformedCsv {
        line,
        message: format!("`{text}` is not a valid group size"),
    })
}

fn parse_number(text: &str, line: u64) -> Result<f64, CliError> {
    text.parse().map_err(|_| CliError::MalformedCsv {
        line,
        message: format!("`{text}` is not a number"),
    })
}

fn parse_optional(text: &str, line: u64) -> Result<Option<f64>, CliError> {
    if text.is_empty() || text.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    parse_number(text, line).map(Some)
}

/// Renders records back into the study-table schema. Parsing the output
/// reproduces the records exactly.
pub fn format_study_csv(records: &[StudyRecord]) -> String {
    let mut out = String::from(STUDY_CSV_HEADER);
    out.push('\n');
    for r in records {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.id,
            r.group1.n,
            r.group1.median,
            opt(r.group1.q1),
            opt(r.group1.q3),
            r.group2.n,
            r.group2.median,
            opt(r.group2.q1),
            opt(r.group2.q3),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_dataset_parses() {
        let parsed = parse_study_csv_str(ESD_HOSPITAL_STAY_CSV).unwrap();
        assert_eq!(parsed.records.len(), 8);
        let eligible: Vec<&str> = parsed
            .records
            .iter()
            .filter(|r| r.is_qe_eligible())
            .map(|r| r.id.as_str())
            .collect();
        assert_eq!(eligible, ["Adelaide-2000", "Copenhagen-2009"]);
        assert_eq!(parsed.warnings.len(), 6);
        let total: u64 = parsed.records.iter().map(|r| r.total_n()).sum();
        assert_eq!(total, 875);
    }

    #[test]
    fn empty_file_is_malformed() {
        assert!(matches!(
            parse_study_csv_str(""),
            Err(CliError::MalformedCsv { .. })
        ));
        assert!(matches!(
            parse_study_csv_str("   \n"),
            Err(CliError::MalformedCsv { .. })
        ));
    }

    #[test]
    fn header_mismatch_is_reported() {
        let err = parse_study_csv_str("id,n1\nfoo,3\n").unwrap_err();
        assert!(matches!(err, CliError::HeaderMismatch { .. }));
    }

    #[test]
    fn partial_quartiles_warn_but_parse() {
        let content = format!(
            "{STUDY_CSV_HEADER}\na,10,5,4,NA,12,6,NA,NA\nb,10,5,NA,NA,12,6,NA,NA\n"
        );
        let parsed = parse_study_csv_str(&content).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert!(!parsed.records[0].is_qe_eligible());
        assert!(parsed.warnings[0].contains('a'));
    }

    #[test]
    fn bad_number_names_the_line() {
        let content = format!("{STUDY_CSV_HEADER}\na,ten,5,NA,NA,12,6,NA,NA\n");
        match parse_study_csv_str(&content).unwrap_err() {
            CliError::MalformedCsv { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("ten"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn quartile_violation_names_the_study() {
        let content = format!("{STUDY_CSV_HEADER}\nbad,10,15,22,30,12,6,NA,NA\nok,10,5,NA,NA,12,6,NA,NA\n");
        let err = parse_study_csv_str(&content).unwrap_err();
        assert!(err.to_string().contains("bad"));
    }

    #[test]
    fn round_trip_preserves_records() {
        let parsed = parse_study_csv_str(ESD_HOSPITAL_STAY_CSV).unwrap();
        let emitted = format_study_csv(&parsed.records);
        let reparsed = parse_study_csv_str(&emitted).unwrap();
        assert_eq!(parsed.records, reparsed.records);
    }
}
