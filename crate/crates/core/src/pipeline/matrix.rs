//! Configuration matrix files.
//!
//! The tabular form mirrors a technique-by-configuration grid:
//!
//! ```text
//! technique  C1  C2  C3
//! alpha       0   1   1
//! FTR         0   0   1
//! ...
//! ```
//!
//! Rows `alpha`, `FTR`, `FTG`, `UA`, `DA`, `FIR` and `AIR` are recognised, plus
//! optional `k`, `max_adaptive_iters`, `fan_out`, `fixed_rounds` and `seed`.
//! Missing flag rows mean 0. Lines starting with `#` are comments. The
//! structured form is JSON: an array of configs or `{"configs": [...]}`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use super::{PipelineConfig, PipelineError};

const DEFAULT_MATRIX: &str = include_str!("../../assets/matrix/default.tsv");
const DEMO_MATRIX: &str = include_str!("../../assets/matrix/demo.tsv");

const ROWS: [&str; 12] = [
    "alpha",
    "FTR",
    "FTG",
    "UA",
    "DA",
    "FIR",
    "AIR",
    "k",
    "max_adaptive_iters",
    "fan_out",
    "fixed_rounds",
    "seed",
];

fn parse_err(line: usize, reason: impl Into<String>) -> PipelineError {
    PipelineError::MatrixParse { line, reason: reason.into() }
}

fn parse_flag(line: usize, row: &str, cell: &str) -> Result<bool, PipelineError> {
    match cell {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(parse_err(line, format!("{row}: cell {cell:?} must be 0 or 1"))),
    }
}

fn parse_count(line: usize, row: &str, cell: &str) -> Result<u64, PipelineError> {
    cell.parse().map_err(|_| parse_err(line, format!("{row}: cell {cell:?} must be a non-negative integer")))
}

/// Parses the tabular form. Structural errors cite the line; semantic
/// validation is left to [`super::validate_all`].
pub fn parse_table(text: &str) -> Result<Vec<PipelineConfig>, PipelineError> {
    let mut configs: Vec<PipelineConfig> = Vec::new();
    let mut have_header = false;
    let mut seen_rows = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = trimmed.split_whitespace().collect();
        if !have_header {
            if cells.len() < 2 {
                return Err(parse_err(line, "header needs a label followed by config ids"));
            }
            configs = cells[1..].iter().map(|id| PipelineConfig::baseline(*id, 1.0)).collect();
            have_header = true;
            continue;
        }
        let row = cells[0];
        if !ROWS.contains(&row) {
            return Err(parse_err(line, format!("unknown row {row:?}; expected one of {}", ROWS.join(", "))));
        }
        if !seen_rows.insert(row.to_string()) {
            return Err(parse_err(line, format!("row {row} repeated")));
        }
        if cells.len() - 1 != configs.len() {
            return Err(parse_err(line, format!("row {row} has {} cells, header has {}", cells.len() - 1, configs.len())));
        }
        for (c, cell) in configs.iter_mut().zip(&cells[1..]) {
            match row {
                "alpha" => {
                    c.alpha = cell.parse().map_err(|_| parse_err(line, format!("alpha: {cell:?} is not a number")))?
                }
                "FTR" => c.ftr = parse_flag(line, row, cell)?,
                "FTG" => c.ftg = parse_flag(line, row, cell)?,
                "UA" => c.ua = parse_flag(line, row, cell)?,
                "DA" => c.da = parse_flag(line, row, cell)?,
                "FIR" => c.fir = parse_flag(line, row, cell)?,
                "AIR" => c.air = parse_flag(line, row, cell)?,
                "k" => c.k = parse_count(line, row, cell)? as usize,
                "max_adaptive_iters" => c.max_adaptive_iters = parse_count(line, row, cell)? as usize,
                "fan_out" => c.fan_out = parse_count(line, row, cell)? as usize,
                "fixed_rounds" => c.fixed_rounds = parse_count(line, row, cell)? as usize,
                "seed" => c.seed = parse_count(line, row, cell)?,
                _ => unreachable!("row list checked above"),
            }
        }
    }
    if !have_header {
        return Err(parse_err(0, "no header line"));
    }
    if !seen_rows.contains("alpha") {
        return Err(parse_err(0, "missing alpha row"));
    }
    Ok(configs)
}

/// Renders configs in the tabular form; optional rows are written only when
/// some config differs from the defaults.
pub fn to_table(configs: &[PipelineConfig]) -> String {
    let base = PipelineConfig::baseline("", 1.0);
    let width = configs.iter().map(|c| c.config_id.len()).chain([3]).max().unwrap_or(3);
    let mut rows: Vec<(&str, Vec<String>)> = vec![
        ("technique", configs.iter().map(|c| c.config_id.clone()).collect()),
        ("alpha", configs.iter().map(|c| c.alpha.to_string()).collect()),
    ];
    let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
    rows.push(("FTR", configs.iter().map(|c| flag(c.ftr)).collect()));
    rows.push(("FTG", configs.iter().map(|c| flag(c.ftg)).collect()));
    rows.push(("UA", configs.iter().map(|c| flag(c.ua)).collect()));
    rows.push(("DA", configs.iter().map(|c| flag(c.da)).collect()));
    rows.push(("FIR", configs.iter().map(|c| flag(c.fir)).collect()));
    rows.push(("AIR", configs.iter().map(|c| flag(c.air)).collect()));
    let optional: [(&str, fn(&PipelineConfig) -> u64); 5] = [
        ("k", |c| c.k as u64),
        ("max_adaptive_iters", |c| c.max_adaptive_iters as u64),
        ("fan_out", |c| c.fan_out as u64),
        ("fixed_rounds", |c| c.fixed_rounds as u64),
        ("seed", |c| c.seed),
    ];
    for (name, get) in optional {
        if configs.iter().any(|c| get(c) != get(&base)) {
            rows.push((name, configs.iter().map(|c| get(c).to_string()).collect()));
        }
    }
    let label = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (name, cells) in rows {
        out.push_str(&format!("{name:<label$}"));
        for cell in cells {
            out.push_str(&format!(" {cell:>width$}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonMatrix {
    List(Vec<PipelineConfig>),
    Wrapped { configs: Vec<PipelineConfig> },
}

pub fn parse_json(text: &str) -> Result<Vec<PipelineConfig>, PipelineError> {
    match serde_json::from_str::<JsonMatrix>(text) {
        Ok(JsonMatrix::List(c)) | Ok(JsonMatrix::Wrapped { configs: c }) => Ok(c),
        Err(e) => Err(parse_err(e.line(), e.to_string())),
    }
}

/// Loads a matrix file: `.json` is the structured form, anything else tabular.
pub fn load_matrix(path: &Path) -> Result<Vec<PipelineConfig>, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_json(&text)
    } else {
        parse_table(&text)
    }
}

/// The shipped 30-configuration matrix.
pub fn default_matrix() -> Vec<PipelineConfig> {
    parse_table(DEFAULT_MATRIX).expect("bundled matrix parses")
}

/// The six-configuration demo matrix.
pub fn demo_matrix() -> Vec<PipelineConfig> {
    parse_table(DEMO_MATRIX).expect("bundled matrix parses")
}

pub fn default_matrix_text() -> &'static str {
    DEFAULT_MATRIX
}

pub fn demo_matrix_text() -> &'static str {
    DEMO_MATRIX
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::validate_all;

    #[test]
    fn default_matrix_shape() {
        let m = default_matrix();
        assert_eq!(m.len(), 30);
        validate_all(&m).unwrap();
        assert_eq!(m[0].config_id, "C1");
        assert_eq!(m[29].config_id, "C30");
        assert!(m.iter().any(|c| c.ftr && c.air && c.alpha == 1.0 && !c.ftg));
        assert!(m.iter().any(|c| c.techniques().is_empty() && c.alpha == 1.0));
        assert!(m.iter().any(|c| c.techniques().is_empty() && c.alpha == 0.0));
        let mut uniq: Vec<String> = m.iter().map(|c| format!("{} {:?}", c.alpha, c.techniques())).collect();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 30);
    }

    #[test]
    fn table_round_trip() {
        let mut m = demo_matrix();
        m[1].seed = 9;
        m[2].k = 7;
        let again = parse_table(&to_table(&m)).unwrap();
        assert_eq!(again, m);
        assert_eq!(parse_table(&to_table(&default_matrix())).unwrap(), default_matrix());
    }

    #[test]
    fn json_forms() {
        let m = demo_matrix();
        let list = serde_json::to_string(&m).unwrap();
        assert_eq!(parse_json(&list).unwrap(), m);
        let wrapped = format!("{{\"configs\": {list}}}");
        assert_eq!(parse_json(&wrapped).unwrap(), m);
    }

    #[test]
    fn structural_errors_cite_lines() {
        let bad = "technique C1 C2\nalpha 1 0\nUA 1 2\n";
        assert!(matches!(parse_table(bad), Err(PipelineError::MatrixParse { line: 3, .. })));
        let short = "technique C1 C2\nalpha 1\n";
        assert!(matches!(parse_table(short), Err(PipelineError::MatrixParse { line: 2, .. })));
        let unknown = "technique C1\nalpha 1\nXYZ 1\n";
        assert!(matches!(parse_table(unknown), Err(PipelineError::MatrixParse { line: 3, .. })));
    }

    #[test]
    fn semantic_errors_left_to_validation() {
        let m = parse_table("technique C1\nalpha 1\nUA 1\nDA 1\n").unwrap();
        assert!(validate_all(&m).is_err());
    }
}
