//! File-backed filing store: one JSON record per accession plus a manifest.
//!
//! Layout:
//! ```text
//! <root>/manifest.json          {"version":1,"records":{<accession>:{...}}}
//! <root>/records/<accession>.json
//! ```
//! Writers hold `<root>/.write.lock`; files are replaced by rename, so
//! readers always see a complete manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Cik, CorpusError, Filing, FormType};

const MANIFEST_VERSION: u32 = 1;
const LOCK_WAIT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub cik: Cik,
    pub form_type: FormType,
    pub filed_at: DateTime<Utc>,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    records: BTreeMap<String, ManifestEntry>,
}

#[derive(Debug, Clone, Default)]
pub struct StoreFilter {
    pub form_type: Option<FormType>,
    pub cik: Option<Cik>,
    pub filed_from: Option<DateTime<Utc>>,
    pub filed_to: Option<DateTime<Utc>>,
}

impl StoreFilter {
    fn matches(&self, e: &ManifestEntry) -> bool {
        self.form_type.map_or(true, |f| f == e.form_type)
            && self.cik.map_or(true, |c| c == e.cik)
            && self.filed_from.map_or(true, |t| e.filed_at >= t)
            && self.filed_to.map_or(true, |t| e.filed_at <= t)
    }
}

pub struct FilingStore {
    root: PathBuf,
    writer: Mutex<()>,
}

struct LockFile(PathBuf);

impl Drop for LockFile {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| CorpusError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CorpusError::io(path, e))
}

impl FilingStore {
    /// Opens a store directory, creating it if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let root = root.into();
        fs::create_dir_all(root.join("records")).map_err(|e| CorpusError::io(&root, e))?;
        let store = Self { root, writer: Mutex::new(()) };
        if !store.manifest_path().exists() {
            let m = Manifest { version: MANIFEST_VERSION, records: BTreeMap::new() };
            write_atomic(&store.manifest_path(), &serde_json::to_vec_pretty(&m).expect("manifest serializes"))?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    fn record_path(&self, accession_id: &str) -> PathBuf {
        self.root.join("records").join(format!("{accession_id}.json"))
    }

    fn read_manifest(&self) -> Result<Manifest, CorpusError> {
        let path = self.manifest_path();
        let bytes = fs::read(&path).map_err(|e| CorpusError::io(&path, e))?;
        let m: Manifest = serde_json::from_slice(&bytes).map_err(|e| CorpusError::Integrity {
            file: path.display().to_string(),
            reason: e.to_string(),
        })?;
        if m.version != MANIFEST_VERSION {
            return Err(CorpusError::Integrity {
                file: path.display().to_string(),
                reason: format!("unsupported manifest version {}", m.version),
            });
        }
        Ok(m)
    }

    fn lock(&self) -> Result<LockFile, CorpusError> {
        let path = self.root.join(".write.lock");
        let started = Instant::now();
        loop {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(LockFile(path)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && started.elapsed() < LOCK_WAIT => {
                    std::thread::sleep(Duration::from_millis(20));
                }
                Err(e) => return Err(CorpusError::io(&path, e)),
            }
        }
    }

    /// Stores a filing. Returns `false` without writing if the accession id is
    /// already present.
    pub fn put(&self, filing: &Filing) -> Result<bool, CorpusError> {
        filing.validate()?;
        let _guard = self.writer.lock().expect("store writer poisoned");
        let _lock = self.lock()?;
        let mut manifest = self.read_manifest()?;
        if manifest.records.contains_key(&filing.accession_id) {
            return Ok(false);
        }
        let bytes = serde_json::to_vec_pretty(filing).expect("filing serializes");
        write_atomic(&self.record_path(&filing.accession_id), &bytes)?;
        manifest.records.insert(
            filing.accession_id.clone(),
            ManifestEntry {
                cik: filing.cik,
                form_type: filing.form_type,
                filed_at: filing.filed_at,
                sha256: hex::encode(Sha256::digest(&bytes)),
            },
        );
        write_atomic(&self.manifest_path(), &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
        Ok(true)
    }

    pub fn get(&self, accession_id: &str) -> Result<Filing, CorpusError> {
        let manifest = self.read_manifest()?;
        let entry = manifest
            .records
            .get(accession_id)
            .ok_or_else(|| CorpusError::NotFound(format!("filing {accession_id}")))?;
        let path = self.record_path(accession_id);
        let integrity = |reason: String| CorpusError::Integrity { file: path.display().to_string(), reason };
        let bytes = fs::read(&path).map_err(|e| integrity(e.to_string()))?;
        if hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
            return Err(integrity("checksum does not match manifest".into()));
        }
        let filing: Filing = serde_json::from_slice(&bytes).map_err(|e| integrity(e.to_string()))?;
        if filing.accession_id != accession_id {
            return Err(integrity(format!("record holds accession {}", filing.accession_id)));
        }
        Ok(filing)
    }

    /// Accession ids matching the filter, in ascending order.
    pub fn list(&self, filter: &StoreFilter) -> Result<Vec<String>, CorpusError> {
        Ok(self
            .read_manifest()?
            .records
            .iter()
            .filter(|(_, e)| filter.matches(e))
            .map(|(id, _)| id.clone())
            .collect())
    }

    pub fn contains(&self, accession_id: &str) -> Result<bool, CorpusError> {
        Ok(self.read_manifest()?.records.contains_key(accession_id))
    }

    /// All filings, ordered by filing time then accession id.
    pub fn all(&self) -> Result<Vec<Filing>, CorpusError> {
        let mut out = self
            .list(&StoreFilter::default())?
            .iter()
            .map(|id| self.get(id))
            .collect::<Result<Vec<_>, _>>()?;
        out.sort_by(|a, b| a.filed_at.cmp(&b.filed_at).then_with(|| a.accession_id.cmp(&b.accession_id)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filing(id: &str, form: FormType) -> Filing {
        Filing {
            accession_id: id.into(),
            cik: Cik(6201),
            company: "American Airlines Group Inc.".into(),
            form_type: form,
            filed_at: "2024-02-21T16:05:12Z".parse().unwrap(),
            raw_text: "Item 1A. Risk Factors\nWe depend on fuel suppliers.".into(),
            source_url: "https://www.sec.gov/Archives/edgar/data/6201/x/aal.htm".into(),
        }
    }

    fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        for entry in walk(root) {
            out.push((entry.strip_prefix(root).unwrap().display().to_string(), fs::read(&entry).unwrap()));
        }
        out.sort();
        out
    }

    fn walk(dir: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn put_is_idempotent_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store = FilingStore::open(dir.path()).unwrap();
        let f = filing("0000006201-24-000010", FormType::TenK);
        assert!(store.put(&f).unwrap());
        let once = snapshot(dir.path());
        assert!(!store.put(&f).unwrap());
        assert_eq!(snapshot(dir.path()), once);
        assert_eq!(store.get(&f.accession_id).unwrap(), f);
    }

    #[test]
    fn list_filters_by_form() {
        let dir = tempfile::tempdir().unwrap();
        let store = FilingStore::open(dir.path()).unwrap();
        store.put(&filing("a-8k", FormType::EightK)).unwrap();
        store.put(&filing("b-10k", FormType::TenK)).unwrap();
        let ids = store
            .list(&StoreFilter { form_type: Some(FormType::EightK), ..Default::default() })
            .unwrap();
        assert_eq!(ids, vec!["a-8k".to_string()]);
        assert_eq!(store.list(&StoreFilter::default()).unwrap().len(), 2);
    }

    #[test]
    fn missing_and_corrupt_records() {
        let dir = tempfile::tempdir().unwrap();
        let store = FilingStore::open(dir.path()).unwrap();
        assert!(matches!(store.get("nope"), Err(CorpusError::NotFound(_))));
        let f = filing("c-10q", FormType::TenQ);
        store.put(&f).unwrap();
        let path = dir.path().join("records/c-10q.json");
        fs::write(&path, b"{ truncated").unwrap();
        match store.get("c-10q") {
            Err(CorpusError::Integrity { file, .. }) => assert!(file.ends_with("c-10q.json")),
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unnormalized_or_unsafe_records() {
        let dir = tempfile::tempdir().unwrap();
        let store = FilingStore::open(dir.path()).unwrap();
        let mut f = filing("d", FormType::TenK);
        f.raw_text = "<p>markup</p>".into();
        assert!(store.put(&f).is_err());
        let mut g = filing("../escape", FormType::TenK);
        g.raw_text = "ok".into();
        assert!(store.put(&g).is_err());
    }

    #[test]
    fn concurrent_puts_keep_manifest_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let store = FilingStore::open(dir.path()).unwrap();
        std::thread::scope(|s| {
            for t in 0..4 {
                let store = &store;
                s.spawn(move || {
                    for i in 0..5 {
                        store.put(&filing(&format!("acc-{t}-{i}"), FormType::EightK)).unwrap();
                        store.list(&StoreFilter::default()).unwrap();
                    }
                });
            }
        });
        assert_eq!(store.list(&StoreFilter::default()).unwrap().len(), 20);
    }
}
