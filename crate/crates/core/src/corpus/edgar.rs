//! Client for the regulator's submissions index and document archive.
//!
//! Requests go through one shared [`RateLimiter`]; rate-limit and server
//! errors back off exponentially with jitter up to a capped attempt count.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, NaiveDate, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{normalize_html, Cik, CorpusError, Filing, FormType};
use crate::http::Transport;

pub const DEFAULT_SUBMISSIONS_URL: &str = "https://data.sec.gov/submissions/CIK{cik10}.json";
pub const DEFAULT_ARCHIVE_URL: &str = "https://www.sec.gov/Archives/edgar/data/{cik}/{accession_nodash}/{document}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgarConfig {
    /// Contact identity sent as the User-Agent, e.g. `"Jane Doe jane@example.com"`.
    pub user_agent: String,
    #[serde(default = "default_submissions")]
    pub submissions_url: String,
    #[serde(default = "default_archive")]
    pub archive_url: String,
    #[serde(default = "default_rps")]
    pub max_requests_per_second: u32,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
    #[serde(default)]
    pub jitter_seed: u64,
}

fn default_submissions() -> String {
    DEFAULT_SUBMISSIONS_URL.into()
}
fn default_archive() -> String {
    DEFAULT_ARCHIVE_URL.into()
}
fn default_rps() -> u32 {
    10
}
fn default_attempts() -> u32 {
    5
}
fn default_backoff_ms() -> u64 {
    500
}

impl EdgarConfig {
    pub fn new(user_agent: impl Into<String>) -> Self {
        Self {
            user_agent: user_agent.into(),
            submissions_url: default_submissions(),
            archive_url: default_archive(),
            max_requests_per_second: default_rps(),
            max_attempts: default_attempts(),
            backoff_base_ms: default_backoff_ms(),
            jitter_seed: 0,
        }
    }

    pub fn submissions_url_for(&self, cik: Cik) -> String {
        self.submissions_url.replace("{cik10}", &cik.padded()).replace("{cik}", &cik.to_string())
    }

    pub fn archive_url_for(&self, cik: Cik, accession: &str, document: &str) -> String {
        self.archive_url
            .replace("{cik10}", &cik.padded())
            .replace("{cik}", &cik.to_string())
            .replace("{accession_nodash}", &accession.replace('-', ""))
            .replace("{accession}", accession)
            .replace("{document}", document)
    }
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, d: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Records requested sleeps without blocking.
#[derive(Default)]
pub struct RecordingSleeper {
    pub slept: Mutex<Vec<Duration>>,
}

impl Sleeper for RecordingSleeper {
    fn sleep(&self, d: Duration) {
        self.slept.lock().expect("poisoned").push(d);
    }
}

/// Spaces requests at least `1/rps` apart across all threads sharing it.
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_second(rps: u32) -> Self {
        Self {
            interval: Duration::from_secs(1) / rps.max(1),
            next: Mutex::new(None),
        }
    }

    /// Returns how long the caller must wait before sending.
    pub fn reserve(&self) -> Duration {
        let now = Instant::now();
        let mut next = self.next.lock().expect("limiter poisoned");
        let slot = next.map_or(now, |n| n.max(now));
        *next = Some(slot + self.interval);
        slot.saturating_duration_since(now)
    }
}

#[derive(Deserialize)]
struct Submissions {
    #[serde(default)]
    name: String,
    filings: SubmissionFilings,
}

#[derive(Deserialize)]
struct SubmissionFilings {
    recent: Recent,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Recent {
    accession_number: Vec<String>,
    filing_date: Vec<String>,
    #[serde(default)]
    acceptance_date_time: Vec<String>,
    form: Vec<String>,
    primary_document: Vec<String>,
}

struct Listed {
    accession: String,
    form: FormType,
    filed_at: DateTime<Utc>,
    document: String,
}

fn parse_filed_at(acceptance: Option<&String>, filing_date: &str) -> Option<DateTime<Utc>> {
    if let Some(a) = acceptance.filter(|a| !a.is_empty()) {
        if let Ok(t) = DateTime::parse_from_rfc3339(a) {
            return Some(t.with_timezone(&Utc));
        }
    }
    NaiveDate::parse_from_str(filing_date, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc())
}

pub struct EdgarClient {
    config: EdgarConfig,
    transport: Arc<dyn Transport>,
    limiter: Arc<RateLimiter>,
    sleeper: Arc<dyn Sleeper>,
    jitter: Mutex<ChaCha8Rng>,
}

impl EdgarClient {
    pub fn new(config: EdgarConfig, transport: Arc<dyn Transport>) -> Result<Self, CorpusError> {
        if config.user_agent.trim().is_empty() {
            return Err(CorpusError::InvalidArgument("a contact user agent must be configured".into()));
        }
        if config.max_attempts == 0 {
            return Err(CorpusError::InvalidArgument("max_attempts must be >= 1".into()));
        }
        Ok(Self {
            limiter: Arc::new(RateLimiter::per_second(config.max_requests_per_second)),
            jitter: Mutex::new(ChaCha8Rng::seed_from_u64(config.jitter_seed)),
            config,
            transport,
            sleeper: Arc::new(ThreadSleeper),
        })
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn config(&self) -> &EdgarConfig {
        &self.config
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.config.backoff_base_ms as f64 * 2f64.powi(attempt as i32 - 1);
        let factor: f64 = self.jitter.lock().expect("rng poisoned").gen_range(0.5..=1.0);
        Duration::from_secs_f64(base * factor / 1000.0)
    }

    fn get(&self, url: &str, what: &str) -> Result<String, CorpusError> {
        let attempts = self.config.max_attempts;
        let mut last = CorpusError::Transport { url: url.into(), attempts: 0, message: "not attempted".into() };
        for attempt in 1..=attempts {
            let wait = self.limiter.reserve();
            if !wait.is_zero() {
                self.sleeper.sleep(wait);
            }
            match self.transport.get(url) {
                Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp.body),
                Ok(resp) if resp.status == 404 => return Err(CorpusError::NotFound(what.to_string())),
                Ok(resp) if resp.status == 429 || resp.status == 503 => {
                    last = CorpusError::RateLimited { url: url.into(), attempts: attempt };
                }
                Ok(resp) if resp.status >= 500 => {
                    last = CorpusError::Transport {
                        url: url.into(),
                        attempts: attempt,
                        message: format!("HTTP {}", resp.status),
                    };
                }
                Ok(resp) => {
                    return Err(CorpusError::Transport {
                        url: url.into(),
                        attempts: attempt,
                        message: format!("HTTP {}", resp.status),
                    })
                }
                Err(e) => {
                    last = CorpusError::Transport { url: url.into(), attempts: attempt, message: e.0 };
                }
            }
            if attempt < attempts {
                let delay = self.backoff(attempt);
                tracing::warn!(%url, attempt, max_attempts = attempts, delay_ms = delay.as_millis() as u64, error = %last, "request failed, backing off");
                self.sleeper.sleep(delay);
            }
        }
        Err(last)
    }

    /// Latest filings of the requested forms for one company, newest first.
    pub fn fetch_filings(&self, cik: Cik, forms: &BTreeSet<FormType>, limit: usize) -> Result<Vec<Filing>, CorpusError> {
        if forms.is_empty() || limit == 0 {
            return Ok(Vec::new());
        }
        let url = self.config.submissions_url_for(cik);
        let body = self.get(&url, &format!("CIK {}", cik.padded()))?;
        let subs: Submissions =
            serde_json::from_str(&body).map_err(|e| CorpusError::Parse { url: url.clone(), message: e.to_string() })?;
        let r = &subs.filings.recent;
        let n = r.accession_number.len();
        if [r.filing_date.len(), r.form.len(), r.primary_document.len()].iter().any(|l| *l != n) {
            return Err(CorpusError::Parse { url, message: "recent filing arrays differ in length".into() });
        }
        let mut listed: Vec<Listed> = (0..n)
            .filter_map(|i| {
                let form = r.form[i].parse::<FormType>().ok().filter(|f| forms.contains(f))?;
                let filed_at = parse_filed_at(r.acceptance_date_time.get(i), &r.filing_date[i])?;
                Some(Listed {
                    accession: r.accession_number[i].clone(),
                    form,
                    filed_at,
                    document: r.primary_document[i].clone(),
                })
            })
            .collect();
        listed.sort_by(|a, b| b.filed_at.cmp(&a.filed_at).then_with(|| b.accession.cmp(&a.accession)));
        listed.truncate(limit);

        listed
            .into_iter()
            .map(|l| {
                let doc_url = self.config.archive_url_for(cik, &l.accession, &l.document);
                let html = self.get(&doc_url, &format!("document {}", l.accession))?;
                Ok(Filing {
                    accession_id: l.accession,
                    cik,
                    company: subs.name.clone(),
                    form_type: l.form,
                    filed_at: l.filed_at,
                    raw_text: normalize_html(&html),
                    source_url: doc_url,
                })
            })
            .collect()
    }

    /// Fetches several companies in parallel through the shared limiter.
    /// Results keep the order of `ciks`.
    pub fn fetch_many(
        &self,
        ciks: &[Cik],
        forms: &BTreeSet<FormType>,
        limit: usize,
    ) -> Vec<(Cik, Result<Vec<Filing>, CorpusError>)> {
        std::thread::scope(|s| {
            let handles: Vec<_> = ciks
                .iter()
                .map(|cik| s.spawn(move || (*cik, self.fetch_filings(*cik, forms, limit))))
                .collect();
            handles.into_iter().map(|h| h.join().expect("fetch thread panicked")).collect()
        })
    }
}
