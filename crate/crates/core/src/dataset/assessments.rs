use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;

pub const ASSESSMENT_HEADER: [&str; 7] =
    ["question_id", "config_id", "assessor_id", "correct", "better_than_human", "complex", "important"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanAssessment {
    pub question_ref: String,
    pub config_id: String,
    pub assessor_id: String,
    pub judged_correct: bool,
    pub better_than_human: bool,
    pub complexity_flag: bool,
    pub importance_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number, header included.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssessmentImport {
    pub rows: Vec<HumanAssessment>,
    pub errors: Vec<RowError>,
}

/// Per-config aggregate. Rates are fractions in [0, 1]; a rate over an empty
/// subset is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentSummary {
    pub config_id: String,
    pub n: usize,
    pub correct_rate: f64,
    pub n_complex: usize,
    pub complex_correct_rate: Option<f64>,
    pub n_important: usize,
    pub important_correct_rate: Option<f64>,
    pub better_than_human_rate: f64,
}

fn flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" | "" => Some(false),
        _ => None,
    }
}

/// Reads an assessment CSV with the fixed header.
///
/// Bad rows (unparseable flags, unknown question or config ids, repeated
/// question/config/assessor keys) are reported and skipped.
pub fn import_assessments(
    path: &Path,
    known_questions: Option<&HashSet<String>>,
    known_configs: Option<&HashSet<String>>,
) -> Result<AssessmentImport, DatasetError> {
    let csv_err = |e: csv::Error| DatasetError::Csv { path: path.display().to_string(), message: e.to_string() };
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file);
    let mut out = AssessmentImport::default();
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Ok(out);
    }
    let cols: Vec<&str> = header.iter().collect();
    if cols != ASSESSMENT_HEADER {
        return Err(DatasetError::Csv {
            path: path.display().to_string(),
            message: format!("header must be {}", ASSESSMENT_HEADER.join(",")),
        });
    }
    let mut keys = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        if rec.len() != ASSESSMENT_HEADER.len() {
            out.errors.push(RowError { line, message: format!("expected 7 fields, got {}", rec.len()) });
            continue;
        }
        let mut flags = [false; 4];
        let mut bad = None;
        for (j, slot) in flags.iter_mut().enumerate() {
            match flag(&rec[3 + j]) {
                Some(v) => *slot = v,
                None => bad = Some(format!("{}: not a boolean: {:?}", ASSESSMENT_HEADER[3 + j], &rec[3 + j])),
            }
        }
        if let Some(message) = bad {
            out.errors.push(RowError { line, message });
            continue;
        }
        let row = HumanAssessment {
            question_ref: rec[0].to_string(),
            config_id: rec[1].to_string(),
            assessor_id: rec[2].to_string(),
            judged_correct: flags[0],
            better_than_human: flags[1],
            complexity_flag: flags[2],
            importance_flag: flags[3],
        };
        if known_questions.is_some_and(|k| !k.contains(&row.question_ref)) {
            out.errors.push(RowError { line, message: format!("unknown question_id {}", row.question_ref) });
            continue;
        }
        if known_configs.is_some_and(|k| !k.contains(&row.config_id)) {
            out.errors.push(RowError { line, message: format!("unknown config_id {}", row.config_id) });
            continue;
        }
        if !keys.insert((row.question_ref.clone(), row.config_id.clone(), row.assessor_id.clone())) {
            out.errors.push(RowError { line, message: "repeated question/config/assessor".into() });
            continue;
        }
        out.rows.push(row);
    }
    Ok(out)
}

fn rate(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Per-config correctness table, sorted by config id.
pub fn aggregate_assessments(rows: &[HumanAssessment]) -> Vec<AssessmentSummary> {
    let mut groups: BTreeMap<&str, Vec<&HumanAssessment>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.config_id).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(config_id, g)| {
            let count = |f: &dyn Fn(&HumanAssessment) -> bool| g.iter().filter(|r| f(r)).count();
            let n_complex = count(&|r| r.complexity_flag);
            let n_important = count(&|r| r.importance_flag);
            AssessmentSummary {
                config_id: config_id.to_string(),
                n: g.len(),
                correct_rate: rate(count(&|r| r.judged_correct), g.len()).unwrap_or(0.0),
                n_complex,
                complex_correct_rate: rate(count(&|r| r.complexity_flag && r.judged_correct), n_complex),
                n_important,
                important_correct_rate: rate(count(&|r| r.importance_flag && r.judged_correct), n_important),
                better_than_human_rate: rate(count(&|r| r.better_than_human), g.len()).unwrap_or(0.0),
            }
        })
        .collect()
}

pub fn write_assessment_summary(path: &Path, summary: &[AssessmentSummary]) -> Result<(), DatasetError> {
    let err = |e: csv::Error| DatasetError::Csv { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for s in summary {
        w.serialize(s).map_err(err)?;
    }
    w.flush().map_err(|source| DatasetError::Io { path: path.display().to_string(), source })
}
