//! Durable per-question run records.
//!
//! ```text
//! <run>/configs.json                  configs the run was started with
//! <run>/traces/<config_id>/<qidx>.json one QueryTrace per question
//! <run>/run.lock                      pid of the process holding the run
//! ```
//!
//! Each trace is written to a temporary file and renamed into place, so a
//! crash loses at most the pair in flight.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{PipelineConfig, PipelineError, QueryTrace};

fn io(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io { path: path.display().to_string(), source }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

#[derive(Debug, Clone)]
pub struct RunRecords {
    root: PathBuf,
}

impl RunRecords {
    pub fn open(root: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(root.join("traces")).map_err(|e| io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn trace_path(&self, config_id: &str, question_index: usize) -> PathBuf {
        self.root.join("traces").join(config_id).join(format!("{question_index:05}.json"))
    }

    /// Records the matrix on first use; later runs must use the same one.
    pub fn check_configs(&self, configs: &[PipelineConfig]) -> Result<(), PipelineError> {
        let path = self.root.join("configs.json");
        let json = serde_json::to_vec_pretty(configs).expect("configs serialize");
        if path.exists() {
            let existing: Vec<PipelineConfig> = serde_json::from_slice(&fs::read(&path).map_err(|e| io(&path, e))?)
                .map_err(|e| PipelineError::Record { path: path.display().to_string(), reason: e.to_string() })?;
            for c in configs {
                if let Some(old) = existing.iter().find(|o| o.config_id == c.config_id) {
                    if old != c {
                        return Err(PipelineError::InvalidMatrix {
                            problems: vec![format!("{}: differs from the config recorded in {}", c.config_id, path.display())],
                        });
                    }
                }
            }
            let mut merged = existing;
            for c in configs {
                if !merged.iter().any(|o| o.config_id == c.config_id) {
                    merged.push(c.clone());
                }
            }
            return write_atomic(&path, &serde_json::to_vec_pretty(&merged).expect("configs serialize"));
        }
        write_atomic(&path, &json)
    }

    /// A stored trace, or `None` when absent or unreadable.
    pub fn load(&self, config_id: &str, question_index: usize) -> Option<QueryTrace> {
        let path = self.trace_path(config_id, question_index);
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(t) => Some(t),
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "ignoring unreadable trace");
                None
            }
        }
    }

    pub fn save(&self, trace: &QueryTrace) -> Result<(), PipelineError> {
        let path = self.trace_path(&trace.config_id, trace.question_index);
        let dir = path.parent().expect("trace path has a parent");
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut bytes = serde_json::to_vec_pretty(trace).expect("trace serializes");
        bytes.push(b'\n');
        write_atomic(&path, &bytes)
    }
}

/// Exclusive lock on a run directory, released on drop. A lock left by a
/// process that no longer exists is taken over.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

fn pid_alive(pid: u32) -> bool {
    if cfg!(target_os = "linux") {
        Path::new(&format!("/proc/{pid}")).exists()
    } else {
        true
    }
}

impl RunLock {
    pub fn acquire(run_dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(run_dir).map_err(|e| io(run_dir, e))?;
        let path = run_dir.join("run.lock");
        for _ in 0..2 {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    write!(f, "{}", std::process::id()).map_err(|e| io(&path, e))?;
                    return Ok(Self { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    let holder = fs::read_to_string(&path).ok().and_then(|s| s.trim().parse::<u32>().ok());
                    match holder {
                        Some(pid) if pid != std::process::id() && !pid_alive(pid) => {
                            tracing::warn!(pid, "removing stale run lock");
                            let _ = fs::remove_file(&path);
                        }
                        _ => return Err(PipelineError::Locked { path: path.display().to_string() }),
                    }
                }
                Err(e) => return Err(io(&path, e)),
            }
        }
        Err(PipelineError::Locked { path: path.display().to_string() })
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
