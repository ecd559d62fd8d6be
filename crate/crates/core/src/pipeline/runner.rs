use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{validate_all, Pipeline, PipelineConfig, PipelineEnv, PipelineError, QueryTrace, RunRecords};
use crate::dataset::QATriplet;
use crate::index::Retriever;
use crate::providers::{ProviderSet, ResolvedModels};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    pub env: PipelineEnv,
    /// Stop after executing this many new pairs (resumed pairs are free).
    /// Used to exercise interruption and resume.
    pub max_new_pairs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1, env: PipelineEnv::default(), max_new_pairs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRun {
    pub config: PipelineConfig,
    pub models: ResolvedModels,
    /// One trace per question, in question order.
    pub traces: Vec<QueryTrace>,
    /// Sum of per-question totals.
    pub measured_seconds: f64,
    pub prep_overhead_seconds: f64,
    /// Measured time plus preparation overhead of the resolved models.
    pub elapsed_seconds: f64,
    pub executed: usize,
    pub resumed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedConfig {
    pub config_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixOutcome {
    /// Completed configs in matrix order.
    pub runs: Vec<ConfigRun>,
    pub skipped: Vec<SkippedConfig>,
    /// True when `max_new_pairs` stopped the run early.
    pub interrupted: bool,
}

/// Runs every question through every config.
///
/// Configs run one after another; questions within a config run on
/// `workers` threads and are reduced in question order. A provider failure
/// inside a query is kept in its trace; a config whose providers cannot be
/// resolved or whose dense index cannot be built is skipped and reported.
/// With `records`, completed pairs are persisted as they finish and reused
/// on the next run.
pub fn run_matrix(
    configs: &[PipelineConfig],
    questions: &[QATriplet],
    retriever: &Retriever,
    providers: &ProviderSet,
    opts: &RunOptions,
    records: Option<&RunRecords>,
) -> Result<MatrixOutcome, PipelineError> {
    validate_all(configs)?;
    if configs.is_empty() {
        return Ok(MatrixOutcome::default());
    }
    if questions.is_empty() {
        return Err(PipelineError::InvalidArgument("dataset is empty".into()));
    }
    if let Some(r) = records {
        r.check_configs(configs)?;
    }
    let budget = AtomicUsize::new(opts.max_new_pairs.unwrap_or(usize::MAX));
    let mut out = MatrixOutcome::default();
    for cfg in configs {
        let resolved = match providers.resolve(cfg.ftr, cfg.ftg) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(config = %cfg.config_id, error = %e, "skipping config");
                out.skipped.push(SkippedConfig { config_id: cfg.config_id.clone(), reason: e.to_string() });
                continue;
            }
        };
        if cfg.alpha > 0.0 {
            if let Err(e) = retriever.dense_for(resolved.embedder.as_ref()) {
                tracing::warn!(config = %cfg.config_id, error = %e, "skipping config");
                out.skipped.push(SkippedConfig { config_id: cfg.config_id.clone(), reason: e.to_string() });
                continue;
            }
        }
        let pipeline = Pipeline::new(cfg, retriever, &resolved, &opts.env)?;
        let slots: Mutex<Vec<Option<(QueryTrace, bool)>>> = Mutex::new(vec![None; questions.len()]);
        let next = AtomicUsize::new(0);
        let first_error: Mutex<Option<PipelineError>> = Mutex::new(None);

        let work = || loop {
            let i = next.fetch_add(1, Ordering::SeqCst);
            if i >= questions.len() || first_error.lock().expect("poisoned").is_some() {
                return;
            }
            let question = &questions[i].question;
            if let Some(prev) = records.and_then(|r| r.load(&cfg.config_id, i)) {
                if prev.is_complete() && prev.original_question == *question {
                    slots.lock().expect("poisoned")[i] = Some((prev, false));
                    continue;
                }
            }
            if budget.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |b| b.checked_sub(1)).is_err() {
                continue;
            }
            let result = pipeline.run_query(question).and_then(|mut t| {
                t.question_index = i;
                if let Some(r) = records {
                    r.save(&t)?;
                }
                Ok(t)
            });
            match result {
                Ok(t) => slots.lock().expect("poisoned")[i] = Some((t, true)),
                Err(e) => {
                    first_error.lock().expect("poisoned").get_or_insert(e);
                    return;
                }
            }
        };
        let workers = opts.workers.max(1).min(questions.len());
        if workers == 1 {
            work();
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(work);
                }
            });
        }
        if let Some(e) = first_error.into_inner().expect("poisoned") {
            return Err(e);
        }
        let slots = slots.into_inner().expect("poisoned");
        if slots.iter().any(Option::is_none) {
            out.interrupted = true;
            break;
        }
        let mut run = ConfigRun {
            config: cfg.clone(),
            prep_overhead_seconds: resolved.models.prep_overhead_seconds(),
            models: resolved.models.clone(),
            traces: Vec::with_capacity(questions.len()),
            measured_seconds: 0.0,
            elapsed_seconds: 0.0,
            executed: 0,
            resumed: 0,
            failed: 0,
        };
        for (t, fresh) in slots.into_iter().flatten() {
            if fresh {
                run.executed += 1;
            } else {
                run.resumed += 1;
            }
            if !t.is_complete() {
                run.failed += 1;
            }
            run.measured_seconds += t.timings.total;
            run.traces.push(t);
        }
        run.elapsed_seconds = run.measured_seconds + run.prep_overhead_seconds;
        out.runs.push(run);
    }
    Ok(out)
}
