//! Time-versus-quality analysis over evaluation reports: Pareto frontier,
//! minimum time to reach a quality target, and technique averages.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{IngestEvent, IngestOutcome};
use crate::metrics::{EvalReport, METRIC_NAMES};

pub const DEFAULT_METRIC: &str = "rouge1_f";
pub const TECHNIQUES: [&str; 6] = ["FTR", "FTG", "UA", "DA", "FIR", "AIR"];

#[derive(Debug, Error)]
pub enum TradespaceError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown metric {name}; valid metrics: {}", METRIC_NAMES.join(", "))]
    UnknownMetric { name: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub config_id: String,
    pub time_hours: f64,
    pub quality: f64,
    pub on_frontier: bool,
}

impl ParetoPoint {
    pub fn new(config_id: impl Into<String>, time_hours: f64, quality: f64) -> Self {
        Self { config_id: config_id.into(), time_hours, quality, on_frontier: false }
    }
}

fn check_points(points: &[ParetoPoint]) -> Result<(), TradespaceError> {
    if points.is_empty() {
        return Err(TradespaceError::InvalidArgument("no points".into()));
    }
    for p in points {
        if !(p.time_hours > 0.0 && p.time_hours.is_finite()) {
            return Err(TradespaceError::InvalidArgument(format!("{}: time must be positive", p.config_id)));
        }
        if !p.quality.is_finite() {
            return Err(TradespaceError::InvalidArgument(format!("{}: quality must be finite", p.config_id)));
        }
    }
    Ok(())
}

/// Non-dominated points sorted by time, quality strictly increasing.
///
/// `q` dominates `p` when it is no slower and no worse and strictly better
/// in one of the two. Of several identical points only the one with the
/// smallest config id is kept.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Result<Vec<ParetoPoint>, TradespaceError> {
    check_points(points)?;
    let mut sorted: Vec<&ParetoPoint> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.time_hours
            .total_cmp(&b.time_hours)
            .then(b.quality.total_cmp(&a.quality))
            .then_with(|| a.config_id.cmp(&b.config_id))
    });
    let mut out: Vec<ParetoPoint> = Vec::new();
    for p in sorted {
        if out.last().map_or(true, |best| p.quality > best.quality) {
            out.push(ParetoPoint { on_frontier: true, ..p.clone() });
        }
    }
    Ok(out)
}

/// All points, in input order, with `on_frontier` set.
pub fn mark_frontier(points: &[ParetoPoint]) -> Result<Vec<ParetoPoint>, TradespaceError> {
    let frontier = pareto_frontier(points)?;
    let mut used = vec![false; frontier.len()];
    Ok(points
        .iter()
        .map(|p| {
            let hit = frontier.iter().enumerate().position(|(i, f)| {
                !used[i] && f.config_id == p.config_id && f.time_hours == p.time_hours && f.quality == p.quality
            });
            if let Some(i) = hit {
                used[i] = true;
            }
            ParetoPoint { on_frontier: hit.is_some(), ..p.clone() }
        })
        .collect())
}

fn metric_of(report: &EvalReport, name: &str) -> Result<Option<f64>, TradespaceError> {
    if !EvalReport::is_known_metric(name) {
        return Err(TradespaceError::UnknownMetric { name: name.into() });
    }
    Ok(report.metric(name))
}

/// Trade-space points from reports: time in hours, quality from `metric`.
/// Reports without a value for the metric are left out.
pub fn points_from_reports(reports: &[EvalReport], metric: &str) -> Result<Vec<ParetoPoint>, TradespaceError> {
    let mut out = Vec::new();
    for r in reports {
        if let Some(q) = metric_of(r, metric)? {
            out.push(ParetoPoint::new(&r.config_id, r.time_hours(), q));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveQuery {
    pub metric_name: String,
    pub m_target: f64,
    /// When set, τ is measured from this event time (latency mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_event: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// Whole-dataset time including preparation overhead.
    Total,
    /// Time from the event until one answer is available.
    Latency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub config_id: String,
    pub tau_seconds: f64,
    pub mode: TimeMode,
}

impl Objective {
    pub fn tau_hours(&self) -> f64 {
        self.tau_seconds / 3600.0
    }
}

/// Seconds from `t_event` until the first successfully ingested filing with
/// an event time at or after `t_event` was stored.
pub fn ingest_delay_seconds(events: &[IngestEvent], t_event: DateTime<Utc>) -> Option<f64> {
    events
        .iter()
        .filter(|e| matches!(e.outcome, IngestOutcome::Ingested) && e.event_time >= t_event)
        .min_by(|a, b| a.event_time.cmp(&b.event_time).then(a.ingested_time.cmp(&b.ingested_time)))
        .map(|e| (e.ingested_time - t_event).num_milliseconds() as f64 / 1000.0)
}

/// Config with the least time among those whose metric reaches `m_target`.
///
/// Total mode uses `total_seconds`. Latency mode (when `t_event` is set)
/// uses ingest delay + preparation overhead + mean per-question time; it
/// needs ingest `events` and yields `None` if no qualifying event exists.
/// Ties go to the smaller config id.
pub fn min_time_to_target(
    reports: &[EvalReport],
    q: &ObjectiveQuery,
    events: &[IngestEvent],
) -> Result<Option<Objective>, TradespaceError> {
    if reports.is_empty() {
        return Err(TradespaceError::InvalidArgument("no reports".into()));
    }
    let delay = match q.t_event {
        Some(t) => match ingest_delay_seconds(events, t) {
            Some(d) => Some(d),
            None => return Ok(None),
        },
        None => None,
    };
    let mut best: Option<Objective> = None;
    for r in reports {
        let Some(m) = metric_of(r, &q.metric_name)? else { continue };
        if m < q.m_target {
            continue;
        }
        let (tau, mode) = match delay {
            None => (r.total_seconds, TimeMode::Total),
            Some(d) => {
                let per_q = if r.n_questions == 0 { 0.0 } else { r.measured_seconds / r.n_questions as f64 };
                (d + r.prep_overhead_seconds + per_q, TimeMode::Latency)
            }
        };
        let better = best.as_ref().map_or(true, |b| {
            tau < b.tau_seconds || (tau == b.tau_seconds && r.config_id < b.config_id)
        });
        if better {
            best = Some(Objective { config_id: r.config_id.clone(), tau_seconds: tau, mode });
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub config_id: String,
    pub time_hours: f64,
    pub quality: f64,
    pub on_frontier: bool,
    /// `best_quality`, `fastest`, both joined by `;`, or empty.
    pub exemplar_tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierReport {
    pub metric: String,
    pub rows: Vec<FrontierRow>,
}

/// Every point with frontier flags and exemplar tags: the best-quality
/// point (ties to the faster) and the fastest point (ties to the better).
pub fn frontier_report(reports: &[EvalReport], metric: &str) -> Result<FrontierReport, TradespaceError> {
    let points = mark_frontier(&points_from_reports(reports, metric)?)?;
    let best = points
        .iter()
        .min_by(|a, b| {
            b.quality.total_cmp(&a.quality).then(a.time_hours.total_cmp(&b.time_hours)).then(a.config_id.cmp(&b.config_id))
        })
        .map(|p| p.config_id.clone());
    let fastest = points
        .iter()
        .min_by(|a, b| {
            a.time_hours.total_cmp(&b.time_hours).then(b.quality.total_cmp(&a.quality)).then(a.config_id.cmp(&b.config_id))
        })
        .map(|p| p.config_id.clone());
    let rows = points
        .into_iter()
        .map(|p| {
            let mut tags = Vec::new();
            if best.as_deref() == Some(p.config_id.as_str()) {
                tags.push("best_quality");
            }
            if fastest.as_deref() == Some(p.config_id.as_str()) {
                tags.push("fastest");
            }
            FrontierRow {
                config_id: p.config_id,
                time_hours: p.time_hours,
                quality: p.quality,
                on_frontier: p.on_frontier,
                exemplar_tag: tags.join(";"),
            }
        })
        .collect();
    Ok(FrontierReport { metric: metric.into(), rows })
}

impl FrontierReport {
    pub fn frontier(&self) -> Vec<&FrontierRow> {
        let mut f: Vec<&FrontierRow> = self.rows.iter().filter(|r| r.on_frontier).collect();
        f.sort_by(|a, b| a.time_hours.total_cmp(&b.time_hours));
        f
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), TradespaceError> {
        write_csv(path, &self.rows)
    }

    /// Vega-Lite scatter of all points with the frontier drawn as a line.
    pub fn plot_spec(&self) -> serde_json::Value {
        let values: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "config_id": r.config_id,
                    "time_hours": r.time_hours,
                    "quality": r.quality,
                    "on_frontier": r.on_frontier,
                    "exemplar_tag": r.exemplar_tag,
                })
            })
            .collect();
        let x = serde_json::json!({"field": "time_hours", "type": "quantitative", "title": "Time (hours)"});
        let y = serde_json::json!({"field": "quality", "type": "quantitative", "title": self.metric});
        serde_json::json!({
            "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
            "title": format!("Trade space: {} vs time", self.metric),
            "data": {"values": values},
            "layer": [
                {
                    "mark": {"type": "point", "filled": true},
                    "encoding": {
                        "x": x, "y": y,
                        "color": {"field": "on_frontier", "type": "nominal"},
                        "tooltip": [{"field": "config_id"}, {"field": "time_hours"}, {"field": "quality"}]
                    }
                },
                {
                    "transform": [{"filter": "datum.on_frontier"}],
                    "mark": {"type": "line"},
                    "encoding": {"x": x, "y": y, "order": {"field": "time_hours"}}
                },
                {
                    "transform": [{"filter": "datum.exemplar_tag != ''"}],
                    "mark": {"type": "text", "dy": -10},
                    "encoding": {"x": x, "y": y, "text": {"field": "config_id"}}
                }
            ]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueAverage {
    pub technique: String,
    pub metric: String,
    pub mean: f64,
}

/// Mean of each metric over the reports containing each technique. The
/// `None` group averages every report without techniques, dense and sparse
/// alike. Groups with no reports or no defined values are omitted.
pub fn technique_averages(reports: &[EvalReport], metrics: &[&str]) -> Result<Vec<TechniqueAverage>, TradespaceError> {
    let mut groups: BTreeMap<usize, (&str, Vec<&EvalReport>)> = BTreeMap::new();
    for (i, t) in ["None"].iter().chain(TECHNIQUES.iter()).enumerate() {
        groups.insert(i, (t, Vec::new()));
    }
    for r in reports {
        if r.techniques.is_empty() {
            groups.get_mut(&0).expect("none group").1.push(r);
        }
        for (i, t) in TECHNIQUES.iter().enumerate() {
            if r.techniques.iter().any(|x| x == t) {
                groups.get_mut(&(i + 1)).expect("technique group").1.push(r);
            }
        }
    }
    let mut out = Vec::new();
    for (technique, members) in groups.values() {
        for m in metrics {
            let mut vals = Vec::new();
            for r in members {
                if let Some(v) = metric_of(r, m)? {
                    vals.push(v);
                }
            }
            if !vals.is_empty() {
                out.push(TechniqueAverage {
                    technique: technique.to_string(),
                    metric: m.to_string(),
                    mean: vals.iter().sum::<f64>() / vals.len() as f64,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_technique_averages(path: &Path, rows: &[TechniqueAverage]) -> Result<(), TradespaceError> {
    write_csv(path, rows)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), TradespaceError> {
    let err = |e: &dyn std::fmt::Display| TradespaceError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
    for r in rows {
        w.serialize(r).map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))
}
