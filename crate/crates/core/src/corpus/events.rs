//! Timed arrival of filings for event-to-answer latency measurement.

use std::collections::HashMap;
use std::time::Instant;

use chrono::{DateTime, Duration as ChronoDuration, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, Filing};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum IngestOutcome {
    Ingested,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestEvent {
    pub filing_ref: String,
    pub event_time: DateTime<Utc>,
    pub ingested_time: DateTime<Utc>,
    pub latency_seconds: f64,
    #[serde(flatten)]
    pub outcome: IngestOutcome,
}

impl IngestEvent {
    pub fn succeeded(&self) -> bool {
        self.outcome == IngestOutcome::Ingested
    }
}

/// Replays filings into `sink` in schedule order and timestamps each arrival.
///
/// World time starts at the first scheduled event. Before each event the
/// world clock jumps forward to its event time; the sink's measured runtime
/// then advances it, so a slow ingestion delays the events queued behind it.
/// A failing sink marks its event failed and the stream continues.
pub fn simulate_event_stream<F>(
    filings: &[Filing],
    schedule: &HashMap<String, DateTime<Utc>>,
    mut sink: F,
) -> Result<Vec<IngestEvent>, CorpusError>
where
    F: FnMut(&Filing) -> Result<(), String>,
{
    let mut ordered: Vec<(&Filing, DateTime<Utc>)> = filings
        .iter()
        .map(|f| {
            schedule
                .get(&f.accession_id)
                .map(|t| (f, *t))
                .ok_or_else(|| CorpusError::InvalidArgument(format!("no scheduled time for {}", f.accession_id)))
        })
        .collect::<Result<_, _>>()?;
    ordered.sort_by(|(a, ta), (b, tb)| ta.cmp(tb).then_with(|| a.accession_id.cmp(&b.accession_id)));

    let mut world: Option<DateTime<Utc>> = None;
    let mut events = Vec::with_capacity(ordered.len());
    for (filing, event_time) in ordered {
        let start = world.map_or(event_time, |w| w.max(event_time));
        let began = Instant::now();
        let result = sink(filing);
        let spent = ChronoDuration::from_std(began.elapsed()).unwrap_or(ChronoDuration::zero());
        let ingested_time = start + spent;
        world = Some(ingested_time);
        events.push(IngestEvent {
            filing_ref: filing.accession_id.clone(),
            event_time,
            ingested_time,
            latency_seconds: (ingested_time - event_time).num_nanoseconds().unwrap_or(i64::MAX) as f64 / 1e9,
            outcome: match result {
                Ok(()) => IngestOutcome::Ingested,
                Err(error) => IngestOutcome::Failed { error },
            },
        });
    }
    Ok(events)
}

/// Evenly spaced schedule starting at `start`, in the given filing order.
pub fn uniform_schedule(filings: &[Filing], start: DateTime<Utc>, interval: ChronoDuration) -> HashMap<String, DateTime<Utc>> {
    filings
        .iter()
        .enumerate()
        .map(|(i, f)| (f.accession_id.clone(), start + interval * i as i32))
        .collect()
}
