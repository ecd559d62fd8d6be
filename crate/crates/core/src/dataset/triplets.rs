use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Human,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Complex,
    Important,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QATriplet {
    /// Question identifier; defaults to `q<line>` when absent from the file.
    #[serde(default)]
    pub id: String,
    pub question: String,
    pub gold_passage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_chunk_ref: Option<String>,
    pub answer: String,
    pub provenance: Provenance,
    #[serde(default)]
    pub tags: BTreeSet<Tag>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    schema_version: u32,
    #[serde(flatten)]
    triplet: QATriplet,
}

fn schema(line: usize, field: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema { line, field: field.into(), message: message.into() }
}

fn parse_line(line_no: usize, text: &str) -> Result<QATriplet, DatasetError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| schema(line_no, "<line>", format!("invalid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| schema(line_no, "<line>", "expected a JSON object"))?;
    for field in ["schema_version", "question", "gold_passage", "answer", "provenance"] {
        if !obj.contains_key(field) {
            return Err(schema(line_no, field, "missing"));
        }
    }
    match obj["schema_version"].as_u64() {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        _ => return Err(schema(line_no, "schema_version", format!("expected {SCHEMA_VERSION}"))),
    }
    let record: Record = serde_json::from_value(value.clone()).map_err(|e| {
        // name the offending field where serde does not
        let field = ["question", "gold_passage", "answer", "provenance", "tags", "gold_chunk_ref", "id"]
            .into_iter()
            .find(|f| e.to_string().contains(&format!("`{f}`")) || obj.get(*f).is_some_and(|v| !type_ok(f, v)))
            .unwrap_or("<record>");
        schema(line_no, field, e.to_string())
    })?;
    let mut t = record.triplet;
    for (field, v) in [("question", &t.question), ("gold_passage", &t.gold_passage), ("answer", &t.answer)] {
        if v.trim().is_empty() {
            return Err(schema(line_no, field, "must be non-empty"));
        }
    }
    if t.id.is_empty() {
        t.id = format!("q{line_no:04}");
    }
    Ok(t)
}

fn type_ok(field: &str, v: &serde_json::Value) -> bool {
    match field {
        "tags" => v.is_array(),
        "gold_chunk_ref" => v.is_string() || v.is_null(),
        "provenance" => matches!(v.as_str(), Some("human" | "synthetic")),
        _ => v.is_string(),
    }
}

/// Parses and validates a triplet JSON-lines file.
///
/// Blank lines are ignored. When `known_chunks` is given every
/// `gold_chunk_ref` must be in it.
pub fn load_triplets(path: &Path, known_chunks: Option<&HashSet<String>>) -> Result<Vec<QATriplet>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    let mut out = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let t = parse_line(line_no, line)?;
        if let Some(&first_line) = seen.get(&(t.question.clone(), t.gold_passage.clone())) {
            return Err(DatasetError::Duplicate { line: line_no, first_line });
        }
        if let Some(&first) = ids.get(&t.id) {
            return Err(schema(line_no, "id", format!("duplicate id {} (first on line {first})", t.id)));
        }
        if let (Some(known), Some(r)) = (known_chunks, &t.gold_chunk_ref) {
            if !known.contains(r) {
                return Err(DatasetError::Reference { line: line_no, chunk_id: r.clone() });
            }
        }
        seen.insert((t.question.clone(), t.gold_passage.clone()), line_no);
        ids.insert(t.id.clone(), line_no);
        out.push(t);
    }
    Ok(out)
}

pub fn to_jsonl(triplets: &[QATriplet]) -> String {
    let mut s = String::new();
    for t in triplets {
        let rec = Record { schema_version: SCHEMA_VERSION, triplet: t.clone() };
        s.push_str(&serde_json::to_string(&rec).expect("triplet serializes"));
        s.push('\n');
    }
    s
}

pub fn write_triplets(path: &Path, triplets: &[QATriplet]) -> Result<(), DatasetError> {
    fs::write(path, to_jsonl(triplets)).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })
}
