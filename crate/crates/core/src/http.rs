//! Minimal GET transport with live, replay and recording implementations.
//!
//! Cassette files hold recorded interactions:
//! ```json
//! {"version":1,"interactions":[{"url":"...","status":200,"body":"..."}]}
//! ```
//! Repeated URLs replay their interactions in order; the last one repeats.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct TransportError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

/// Live HTTP transport. A contact User-Agent is mandatory.
pub struct LiveTransport {
    client: reqwest::blocking::Client,
}

impl LiveTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Result<Self, TransportError> {
        if user_agent.trim().is_empty() {
            return Err(TransportError("a contact User-Agent string is required".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .user_agent(user_agent)
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for LiveTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let resp = self.client.get(url).send().map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub url: String,
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cassette {
    pub version: u32,
    pub interactions: Vec<Interaction>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, TransportError> {
        let raw = std::fs::read_to_string(path).map_err(|e| TransportError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&raw).map_err(|e| TransportError(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), TransportError> {
        let json = serde_json::to_string_pretty(self).expect("cassette serializes");
        std::fs::write(path, json).map_err(|e| TransportError(format!("{}: {e}", path.display())))
    }
}

/// Replays a cassette; unknown URLs fail like an unreachable host.
pub struct CassetteTransport {
    by_url: HashMap<String, Vec<HttpResponse>>,
    cursor: Mutex<HashMap<String, usize>>,
}

impl CassetteTransport {
    pub fn new(cassette: Cassette) -> Self {
        let mut by_url: HashMap<String, Vec<HttpResponse>> = HashMap::new();
        for i in cassette.interactions {
            by_url.entry(i.url).or_default().push(HttpResponse { status: i.status, body: i.body });
        }
        Self { by_url, cursor: Mutex::new(HashMap::new()) }
    }

    pub fn load(path: &Path) -> Result<Self, TransportError> {
        Ok(Self::new(Cassette::load(path)?))
    }
}

impl Transport for CassetteTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let replies = self
            .by_url
            .get(url)
            .ok_or_else(|| TransportError(format!("no recorded interaction for {url}")))?;
        let mut cursor = self.cursor.lock().expect("cursor poisoned");
        let n = cursor.entry(url.to_string()).or_insert(0);
        let reply = replies[(*n).min(replies.len() - 1)].clone();
        *n += 1;
        Ok(reply)
    }
}

/// Wraps a transport and keeps every interaction for saving as a cassette.
pub struct RecordingTransport<T: Transport> {
    inner: T,
    log: Mutex<Vec<Interaction>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn cassette(&self) -> Cassette {
        Cassette { version: 1, interactions: self.log.lock().expect("log poisoned").clone() }
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let resp = self.inner.get(url)?;
        self.log.lock().expect("log poisoned").push(Interaction {
            url: url.to_string(),
            status: resp.status,
            body: resp.body.clone(),
        });
        Ok(resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_in_order_then_repeat_last() {
        let c = Cassette {
            version: 1,
            interactions: vec![
                Interaction { url: "u".into(), status: 429, body: String::new() },
                Interaction { url: "u".into(), status: 200, body: "ok".into() },
            ],
        };
        let t = CassetteTransport::new(c);
        assert_eq!(t.get("u").unwrap().status, 429);
        assert_eq!(t.get("u").unwrap().body, "ok");
        assert_eq!(t.get("u").unwrap().body, "ok");
        assert!(t.get("other").is_err());
    }

    #[test]
    fn recording_produces_replayable_cassette() {
        let inner = CassetteTransport::new(Cassette {
            version: 1,
            interactions: vec![Interaction { url: "a".into(), status: 200, body: "x".into() }],
        });
        let rec = RecordingTransport::new(inner);
        rec.get("a").unwrap();
        let replay = CassetteTransport::new(rec.cassette());
        assert_eq!(replay.get("a").unwrap().body, "x");
    }

    #[test]
    fn live_transport_requires_user_agent() {
        assert!(LiveTransport::new("  ", Duration::from_secs(1)).is_err());
    }
}
