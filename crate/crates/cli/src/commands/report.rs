//! Trade-space outputs for a finished run.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::Args;
use ragtrade::corpus::IngestEvent;
use ragtrade::metrics::{read_reports_jsonl, EvalReport, METRIC_NAMES};
use ragtrade::tradespace::{
    frontier_report, min_time_to_target, technique_averages, write_technique_averages, ObjectiveQuery,
    TradespaceError, DEFAULT_METRIC,
};
use serde_json::{json, Value};

use super::run::REPORTS_JSONL;
use super::write_json;
use crate::error::{CliError, ErrorKind};

pub const FRONTIER_CSV: &str = "frontier.csv";
pub const FRONTIER_PLOT: &str = "frontier.vl.json";
pub const AVERAGES_CSV: &str = "technique_averages.csv";

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
    /// Quality metric for the frontier and the objective.
    #[arg(long, default_value = DEFAULT_METRIC)]
    pub metric: String,
    /// Smallest acceptable metric value; prints the fastest config reaching it.
    #[arg(long)]
    pub target: Option<f64>,
    /// Measure time from this event (RFC 3339) instead of whole-dataset time.
    #[arg(long, requires = "events")]
    pub t_event: Option<DateTime<Utc>>,
    /// Ingest event log written by `ingest --events`.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Output directory; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_events(path: &Path) -> Result<Vec<IngestEvent>, CliError> {
    let raw = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::new(ErrorKind::Integrity, format!("{}: line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn execute(args: &ReportArgs) -> Result<Value, CliError> {
    if !EvalReport::is_known_metric(&args.metric) {
        return Err(TradespaceError::UnknownMetric { name: args.metric.clone() }.into());
    }
    let jsonl = args.run_dir.join(REPORTS_JSONL);
    if !jsonl.exists() {
        return Err(CliError::validation(format!("{} not found; run the matrix first", jsonl.display())));
    }
    let reports =
        read_reports_jsonl(&jsonl).map_err(|e| CliError::new(ErrorKind::Integrity, format!("{}: {e}", jsonl.display())))?;
    let out = args.out.clone().unwrap_or_else(|| args.run_dir.clone());
    super::create_dir(&out)?;

    let frontier = frontier_report(&reports, &args.metric)?;
    frontier.write_csv(&out.join(FRONTIER_CSV))?;
    write_json(&out.join(FRONTIER_PLOT), &frontier.plot_spec())?;
    let averages = technique_averages(&reports, &METRIC_NAMES)?;
    write_technique_averages(&out.join(AVERAGES_CSV), &averages)?;

    let objective = match args.target {
        None => Value::Null,
        Some(m_target) => {
            let events = match &args.events {
                Some(p) => read_events(p)?,
                None => Vec::new(),
            };
            let q = ObjectiveQuery { metric_name: args.metric.clone(), m_target, t_event: args.t_event };
            match min_time_to_target(&reports, &q, &events)? {
                Some(o) => {
                    println!("objective: {} tau={:.3}s ({:?})", o.config_id, o.tau_seconds, o.mode);
                    serde_json::to_value(&o).expect("objective serializes")
                }
                None => {
                    println!("objective: infeasible");
                    json!("infeasible")
                }
            }
        }
    };
    let on_frontier: Vec<&str> = frontier.frontier().iter().map(|r| r.config_id.as_str()).collect();
    Ok(json!({
        "metric": args.metric,
        "reports": reports.len(),
        "frontier": on_frontier,
        "outputs": [out.join(FRONTIER_CSV), out.join(FRONTIER_PLOT), out.join(AVERAGES_CSV)],
        "objective": objective,
    }))
}
