//! Fetch filings into a store, optionally as a timed event stream.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use ragtrade::corpus::{simulate_event_stream, Cik, EdgarClient, EdgarConfig, Filing, FilingStore, FormType};
use ragtrade::http::{CassetteTransport, LiveTransport, RecordingTransport, Transport};
use serde_json::{json, Value};

use super::write_jsonl;
use crate::error::{CliError, ErrorKind, Problems};

/// Contact string used when replaying a cassette without one.
const REPLAY_USER_AGENT: &str = "ragtrade offline-replay replay@localhost";

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Company registry numbers; repeat the flag or separate with commas.
    #[arg(long = "cik", value_delimiter = ',')]
    pub ciks: Vec<String>,
    /// Form types to keep.
    #[arg(long = "form", value_delimiter = ',', default_values_t = FormType::ALL.map(|f| f.to_string()))]
    pub forms: Vec<String>,
    /// Latest filings per company.
    #[arg(long, default_value_t = 10)]
    pub limit: usize,
    #[arg(long)]
    pub store: PathBuf,
    /// Replay recorded responses instead of using the network.
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    /// Save live responses to this cassette file.
    #[arg(long, conflicts_with = "cassette")]
    pub record: Option<PathBuf>,
    /// Client settings file (TOML): endpoints, rate limit, retries.
    #[arg(long)]
    pub edgar_config: Option<PathBuf>,
    /// Contact identity sent as the User-Agent.
    #[arg(long)]
    pub user_agent: Option<String>,
    /// Replay fetched filings at their filing times and write the event log here.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

fn client_config(args: &IngestArgs) -> Result<EdgarConfig, CliError> {
    let mut cfg = match &args.edgar_config {
        Some(p) => {
            let raw = std::fs::read_to_string(p).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?;
            toml::from_str::<EdgarConfig>(&raw).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?
        }
        None => EdgarConfig::new(""),
    };
    if let Some(ua) = &args.user_agent {
        cfg.user_agent = ua.clone();
    }
    if cfg.user_agent.trim().is_empty() {
        if args.cassette.is_some() {
            cfg.user_agent = REPLAY_USER_AGENT.into();
        } else {
            return Err(CliError::validation("a contact --user-agent is required for live requests"));
        }
    }
    Ok(cfg)
}

pub fn execute(args: &IngestArgs) -> Result<Value, CliError> {
    let mut problems = Problems::default();
    let ciks: Vec<Cik> = args.ciks.iter().filter_map(|c| problems.take(c.parse::<Cik>())).collect();
    let forms: BTreeSet<FormType> = args.forms.iter().filter_map(|f| problems.take(f.parse::<FormType>())).collect();
    problems.finish()?;
    if ciks.is_empty() {
        tracing::info!("no companies requested; nothing to do");
        return Ok(json!({"fetched": 0, "stored": 0, "failed": []}));
    }
    let config = client_config(args)?;

    let recorder = match (&args.cassette, &args.record) {
        (None, Some(_)) => Some(Arc::new(RecordingTransport::new(LiveTransport::new(
            &config.user_agent,
            Duration::from_secs(30),
        )?))),
        _ => None,
    };
    let transport: Arc<dyn Transport> = match (&args.cassette, &recorder) {
        (Some(path), _) => Arc::new(CassetteTransport::load(path).map_err(|e| CliError::validation(e.to_string()))?),
        (None, Some(r)) => r.clone(),
        (None, None) => Arc::new(LiveTransport::new(&config.user_agent, Duration::from_secs(30))?),
    };
    let client = EdgarClient::new(config, transport)?;

    let mut filings: Vec<Filing> = Vec::new();
    let mut failures: Vec<(Cik, CliError)> = Vec::new();
    for (cik, result) in client.fetch_many(&ciks, &forms, args.limit) {
        match result {
            Ok(fs) => {
                tracing::info!(%cik, filings = fs.len(), "fetched");
                filings.extend(fs);
            }
            Err(e) => {
                tracing::error!(%cik, error = %e, "fetch failed");
                failures.push((cik, e.into()));
            }
        }
    }
    if let (Some(r), Some(path)) = (&recorder, &args.record) {
        r.cassette().save(path).map_err(|e| CliError::new(ErrorKind::Io, e.to_string()))?;
    }

    let store = FilingStore::open(&args.store)?;
    let mut stored = 0usize;
    let mut event_failures = 0usize;
    if let Some(events_path) = &args.events {
        let schedule: HashMap<String, _> = filings.iter().map(|f| (f.accession_id.clone(), f.filed_at)).collect();
        let events = simulate_event_stream(&filings, &schedule, |f| {
            store.put(f).map(|new| stored += new as usize).map_err(|e| e.to_string())
        })?;
        event_failures = events.iter().filter(|e| !e.succeeded()).count();
        write_jsonl(events_path, &events)?;
    } else {
        for f in &filings {
            stored += store.put(f)? as usize;
        }
    }

    if !failures.is_empty() {
        let kind = failures[0].1.kind;
        return Err(CliError {
            kind,
            errors: failures.into_iter().flat_map(|(cik, e)| e.errors.into_iter().map(move |m| format!("CIK {cik}: {m}"))).collect(),
        });
    }
    if event_failures > 0 {
        return Err(CliError::new(ErrorKind::Integrity, format!("{event_failures} filing(s) failed to store")));
    }
    Ok(json!({
        "fetched": filings.len(),
        "stored": stored,
        "store": args.store,
        "events": args.events,
        "failed": [],
    }))
}
