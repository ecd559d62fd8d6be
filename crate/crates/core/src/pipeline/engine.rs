//! Retrieve-then-generate for a single question.
//!
//! Stage order: expansion (UA or DA) → initial retrieval → post-retrieval
//! iteration (FIR or AIR) → final generation. FIR's last round is the final
//! generation; every other path ends with one answering call.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::context::assemble_context;
use super::trace::*;
use super::{PipelineConfig, PipelineError};
use crate::index::{RetrievalResult, Retriever};
use crate::metrics::NonAnswerDetector;
use crate::prompts::{render, Prompts};
use crate::providers::{GenerationRequest, GenerationResponse, GenerationTask, ResolvedProviders};
use crate::text::{collapse_casefold, whitespace_len};

/// Upper bound on adaptive sub-questions taken from one decomposition.
pub const MAX_SUB_QUESTIONS: usize = 5;

/// Deterministic per-call costs for reproducible timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedCosts {
    pub generation_seconds: f64,
    pub seconds_per_token: f64,
    pub retrieval_seconds: f64,
}

impl Default for SimulatedCosts {
    fn default() -> Self {
        Self { generation_seconds: 0.8, seconds_per_token: 0.002, retrieval_seconds: 0.05 }
    }
}

/// How stage durations are obtained: measured wall clock, or a fixed cost
/// per provider call (byte-for-byte reproducible).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TimingMode {
    Wall,
    Simulated(SimulatedCosts),
}

impl Default for TimingMode {
    fn default() -> Self {
        TimingMode::Wall
    }
}

struct Clock {
    mode: TimingMode,
    started: Instant,
    lap_start: Instant,
    charged: f64,
    simulated_total: f64,
}

impl Clock {
    fn new(mode: TimingMode) -> Self {
        let now = Instant::now();
        Self { mode, started: now, lap_start: now, charged: 0.0, simulated_total: 0.0 }
    }

    fn generation(&mut self, resp: &GenerationResponse) {
        if let TimingMode::Simulated(c) = self.mode {
            self.charged += c.generation_seconds + c.seconds_per_token * (resp.prompt_tokens + resp.completion_tokens) as f64;
        }
    }

    fn retrieval(&mut self) {
        if let TimingMode::Simulated(c) = self.mode {
            self.charged += c.retrieval_seconds;
        }
    }

    fn lap(&mut self) -> f64 {
        match self.mode {
            TimingMode::Wall => {
                let now = Instant::now();
                let d = now.duration_since(self.lap_start).as_secs_f64();
                self.lap_start = now;
                d
            }
            TimingMode::Simulated(_) => {
                let d = std::mem::take(&mut self.charged);
                self.simulated_total += d;
                d
            }
        }
    }

    fn total(&self) -> f64 {
        match self.mode {
            TimingMode::Wall => self.started.elapsed().as_secs_f64(),
            TimingMode::Simulated(_) => self.simulated_total,
        }
    }
}

/// Settings shared by every query of a run.
#[derive(Debug, Clone, Default)]
pub struct PipelineEnv {
    pub prompts: Prompts,
    pub detector: NonAnswerDetector,
    pub timing: TimingMode,
}

/// One validated configuration bound to an index and resolved providers.
pub struct Pipeline<'a> {
    config: &'a PipelineConfig,
    retriever: &'a Retriever,
    providers: &'a ResolvedProviders,
    env: &'a PipelineEnv,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        config: &'a PipelineConfig,
        retriever: &'a Retriever,
        providers: &'a ResolvedProviders,
        env: &'a PipelineEnv,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self { config, retriever, providers, env })
    }

    pub fn config(&self) -> &PipelineConfig {
        self.config
    }

    pub fn start(&self, question: &str) -> Result<Execution<'_>, PipelineError> {
        if question.trim().is_empty() {
            return Err(PipelineError::InvalidArgument("question is empty".into()));
        }
        Ok(Execution {
            p: self,
            question: question.to_string(),
            trace: QueryTrace::new(&self.config.config_id, question),
            clock: Clock::new(self.env.timing),
            notes: String::new(),
        })
    }

    /// Runs every stage the config enables. Only an empty question is an
    /// error; provider failures end the trace early with `error` set.
    pub fn run_query(&self, question: &str) -> Result<QueryTrace, PipelineError> {
        let mut ex = self.start(question)?;
        let outcome = ex.run_stages();
        Ok(ex.finish(outcome.err()))
    }
}

/// A query in progress; stage methods append to the trace.
pub struct Execution<'p> {
    p: &'p Pipeline<'p>,
    question: String,
    trace: QueryTrace,
    clock: Clock,
    /// Extra lines for answering prompts (clarification answers).
    notes: String,
}

enum Stage {
    Expansion,
    Retrieval,
    PostRetrieval,
    Generation,
}

fn parse_list(text: &str, detector: &NonAnswerDetector) -> Vec<String> {
    text.lines()
        .map(|l| {
            let l = l.trim();
            let digits = l.trim_start_matches(|c: char| c.is_ascii_digit());
            let stripped = if digits.len() < l.len() {
                digits.strip_prefix(['.', ')', ':']).unwrap_or(digits)
            } else {
                l.strip_prefix(['-', '*']).unwrap_or(l)
            };
            stripped.trim().to_string()
        })
        .filter(|l| !l.is_empty() && !detector.is_non_answer(l))
        .collect()
}

/// Leading-token verdict: `Some(true)` for yes, `Some(false)` for no.
pub fn parse_verdict(text: &str) -> Option<bool> {
    let first: String = text
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    match first.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

impl<'p> Execution<'p> {
    pub fn trace(&self) -> &QueryTrace {
        &self.trace
    }

    fn lap(&mut self, stage: Stage) {
        let d = self.clock.lap();
        let t = &mut self.trace.timings;
        match stage {
            Stage::Expansion => t.expansion += d,
            Stage::Retrieval => t.retrieval += d,
            Stage::PostRetrieval => t.post_retrieval += d,
            Stage::Generation => t.generation += d,
        }
    }

    fn retrieve(&mut self, query: &str, stage: RoundStage, branch: Option<usize>, iteration: usize) -> Result<usize, PipelineError> {
        let c = self.p.config;
        let result = self.p.retriever.search(query, c.k, c.alpha, self.p.providers.embedder.as_ref())?;
        self.clock.retrieval();
        self.trace.retrieval_rounds.push(RetrievalRound { stage, branch, iteration, result });
        Ok(self.trace.retrieval_rounds.len() - 1)
    }

    fn rounds(&self, pick: impl Fn(&RetrievalRound) -> bool) -> Vec<&RetrievalResult> {
        self.trace.retrieval_rounds.iter().filter(|r| pick(r)).map(|r| &r.result).collect()
    }

    /// Generation call with context assembled from the chosen rounds.
    /// Returns the text and the chunk ids used.
    fn generate(
        &mut self,
        task: GenerationTask,
        prompt: String,
        pick: impl Fn(&RetrievalRound) -> bool,
    ) -> Result<(String, Vec<String>), PipelineError> {
        let g = &self.p.providers.generator;
        let budget = g.max_context_tokens().saturating_sub(whitespace_len(&prompt));
        let ctx = assemble_context(&self.rounds(pick), self.p.retriever, budget);
        let (ids, passages): (Vec<String>, Vec<String>) = ctx.into_iter().unzip();
        let mut req = GenerationRequest::new(task, prompt, passages);
        req.seed = Some(self.p.config.seed);
        let resp = g.generate(&req)?;
        self.clock.generation(&resp);
        self.trace.generation_calls.push(GenerationCall {
            task,
            prompt_tokens: resp.prompt_tokens,
            completion_tokens: resp.completion_tokens,
        });
        Ok((resp.text.trim().to_string(), ids))
    }

    fn answer_prompt(&self, question: &str, extra: &str) -> String {
        let notes = [self.notes.as_str(), extra].iter().filter(|s| !s.is_empty()).cloned().collect::<Vec<_>>().join("\n");
        render(&self.p.env.prompts.answer, &[("question", question), ("notes", &notes)])
    }

    /// Step-back expansion. Returns `{original, step_back}`, or just the
    /// original with a warning when the call fails or yields a non-answer.
    pub fn expand_upward(&mut self) -> Vec<ExpandedQuery> {
        let original = ExpandedQuery { query: self.question.clone(), origin: QueryOrigin::Original };
        let prompt = render(&self.p.env.prompts.step_back, &[("question", &self.question)]);
        let step_back = match self.generate(GenerationTask::StepBack, prompt, |_| false) {
            Ok((text, _)) => {
                let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
                let line = line.strip_prefix("Step-back:").or_else(|| line.strip_prefix("Question:")).unwrap_or(line).trim();
                if self.p.env.detector.is_non_answer(line) {
                    Err(format!("step-back produced a non-answer: {line:?}"))
                } else if collapse_casefold(line) == collapse_casefold(&self.question) {
                    Err("step-back repeated the original question".to_string())
                } else {
                    Ok(line.to_string())
                }
            }
            Err(e) => Err(format!("step-back generation failed: {e}")),
        };
        let mut out = vec![original];
        match step_back {
            Ok(q) => out.push(ExpandedQuery { query: q, origin: QueryOrigin::StepBack }),
            Err(w) => {
                tracing::warn!(config = %self.p.config.config_id, "{w}");
                self.trace.warnings.push(w);
            }
        }
        self.trace.expanded_queries = out.clone();
        out
    }

    /// Clarification tree with up to `fan_out` children, each answered by
    /// its own retrieve and generate. A failed or empty clarification call
    /// yields a root-only tree and a warning.
    pub fn expand_downward(&mut self, fan_out: usize) -> Result<ClarificationTree, PipelineError> {
        if fan_out == 0 {
            return Err(PipelineError::InvalidArgument("fan_out must be >= 1".into()));
        }
        let prompts = &self.p.env.prompts;
        let exemplar = prompts
            .clarify
            .split("Example passage:")
            .nth(1)
            .and_then(|s| s.split("Example question:").next())
            .map(|s| s.trim().to_string())
            .unwrap_or_default();
        let prompt = render(&prompts.clarify, &[("question", &self.question), ("fan_out", &fan_out.to_string())]);
        let mut tree = ClarificationTree { root: self.question.clone(), children: Vec::new(), one_shot_exemplar: exemplar };
        self.trace.expanded_queries = vec![ExpandedQuery { query: self.question.clone(), origin: QueryOrigin::Original }];
        let questions = match self.generate(GenerationTask::Clarify, prompt, |_| false) {
            Ok((text, _)) => {
                let mut qs: Vec<String> = Vec::new();
                for q in parse_list(&text, &self.p.env.detector) {
                    if q != tree.root && !qs.contains(&q) && qs.len() < fan_out {
                        qs.push(q);
                    }
                }
                if qs.is_empty() {
                    self.trace.warnings.push("clarification produced no child questions".into());
                }
                qs
            }
            Err(e) => {
                self.trace.warnings.push(format!("clarification generation failed: {e}"));
                Vec::new()
            }
        };
        for (i, q) in questions.into_iter().enumerate() {
            self.trace.expanded_queries.push(ExpandedQuery { query: q.clone(), origin: QueryOrigin::Clarification });
            let round = self.retrieve(&q, RoundStage::Clarification, Some(i), 1)?;
            let prompt = render(&self.p.env.prompts.answer, &[("question", &q), ("notes", "")]);
            let (answer, _) = self.generate(GenerationTask::Answer, prompt, |r| {
                r.stage == RoundStage::Clarification && r.branch == Some(i)
            })?;
            debug_assert!(round < self.trace.retrieval_rounds.len());
            self.trace.intermediate_answers.push(answer.clone());
            tree.children.push(ClarificationChild { question: q, answer });
        }
        if !tree.children.is_empty() {
            let lines: Vec<String> = tree.children.iter().map(|c| format!("- {} {}", c.question, c.answer)).collect();
            self.notes = format!("Clarifications:\n{}", lines.join("\n"));
        }
        self.trace.clarification = Some(tree.clone());
        Ok(tree)
    }

    /// One initial round per query in `queries`.
    pub fn retrieve_initial(&mut self, queries: &[String]) -> Result<(), PipelineError> {
        for (i, q) in queries.iter().enumerate() {
            self.retrieve(q, RoundStage::Initial, None, i + 1)?;
        }
        Ok(())
    }

    /// Fixed iteration. Round 1 answers from the rounds already retrieved
    /// (retrieving on the question if there are none); round `i > 1`
    /// retrieves on question plus previous answer. Each answer sees every
    /// round retrieved so far. Returns the last answer.
    pub fn iterate_fixed(&mut self, rounds: usize) -> Result<String, PipelineError> {
        if rounds == 0 {
            return Err(PipelineError::InvalidArgument("rounds must be >= 1".into()));
        }
        if self.trace.retrieval_rounds.is_empty() {
            let q = self.question.clone();
            self.retrieve(&q, RoundStage::Initial, None, 1)?;
        }
        let mut answer = String::new();
        for i in 1..=rounds {
            if i > 1 {
                let query = format!("{} {}", self.question, answer);
                self.retrieve(&query, RoundStage::FixedIteration, None, i)?;
            }
            let prompt = self.answer_prompt(&self.question, "");
            let (text, ids) = self.generate(GenerationTask::Answer, prompt, |_| true)?;
            answer = text;
            self.trace.intermediate_answers.push(answer.clone());
            self.trace.final_context_ids = ids;
        }
        Ok(answer)
    }

    /// Adaptive iteration. One decomposition call, then per sub-question up
    /// to `cap` iterations of retrieve, answer and judge, stopping at the
    /// first "yes". Unparseable verdicts count as "no". Returns the
    /// sub-question/answer lines for the final prompt.
    pub fn iterate_adaptive(&mut self, cap: usize) -> Result<String, PipelineError> {
        if cap == 0 {
            return Err(PipelineError::InvalidArgument("cap must be >= 1".into()));
        }
        let prompts = &self.p.env.prompts;
        let prompt = render(&prompts.decompose, &[("question", &self.question), ("demonstrations", prompts.demonstrations.trim())]);
        let (text, _) = self.generate(GenerationTask::Decompose, prompt, |_| false)?;
        let mut subs: Vec<String> = Vec::new();
        for q in parse_list(&text, &self.p.env.detector) {
            if !subs.contains(&q) && subs.len() < MAX_SUB_QUESTIONS {
                subs.push(q);
            }
        }
        if subs.is_empty() {
            self.trace.warnings.push("decomposition produced no sub-questions; using the original".into());
            subs.push(self.question.clone());
        }
        let mut lines = Vec::new();
        for (s, sub) in subs.into_iter().enumerate() {
            let mut st = SubQuestionTrace { question: sub.clone(), iterations: 0, verdicts: Vec::new(), sufficient: false, answer: String::new() };
            for i in 1..=cap {
                let query = if i == 1 { sub.clone() } else { format!("{sub} {}", st.answer) };
                self.retrieve(&query, RoundStage::Adaptive, Some(s), i)?;
                let in_branch = move |r: &RetrievalRound| r.stage == RoundStage::Adaptive && r.branch == Some(s);
                let prompt = render(&self.p.env.prompts.answer, &[("question", &sub), ("notes", "")]);
                let (answer, _) = self.generate(GenerationTask::Answer, prompt, in_branch)?;
                self.trace.intermediate_answers.push(answer.clone());
                st.answer = answer;
                st.iterations = i;
                let prompt = render(&self.p.env.prompts.judge, &[("question", &sub)]);
                let (verdict, _) = self.generate(GenerationTask::Judge, prompt, in_branch)?;
                let parsed = parse_verdict(&verdict);
                if parsed.is_none() {
                    self.trace.warnings.push(format!("unparseable judge verdict {verdict:?}"));
                }
                st.verdicts.push(verdict);
                if parsed == Some(true) {
                    st.sufficient = true;
                    break;
                }
            }
            lines.push(format!("- {} {}", st.question, st.answer));
            self.trace.sub_questions.push(st);
        }
        Ok(lines.join("\n"))
    }

    fn final_answer(&mut self, prompt: String) -> Result<(), PipelineError> {
        let (text, ids) = self.generate(GenerationTask::Answer, prompt, |_| true)?;
        self.trace.final_answer = text;
        self.trace.final_context_ids = ids;
        Ok(())
    }

    fn run_stages(&mut self) -> Result<(), (Stage, PipelineError)> {
        let c = self.p.config;
        let queries: Vec<String> = if c.ua {
            self.expand_upward().into_iter().map(|e| e.query).collect()
        } else if c.da {
            self.expand_downward(c.fan_out).map_err(|e| (Stage::Expansion, e))?;
            vec![self.question.clone()]
        } else {
            self.trace.expanded_queries = vec![ExpandedQuery { query: self.question.clone(), origin: QueryOrigin::Original }];
            vec![self.question.clone()]
        };
        self.lap(Stage::Expansion);

        self.retrieve_initial(&queries).map_err(|e| (Stage::Retrieval, e))?;
        self.lap(Stage::Retrieval);

        if c.fir {
            let answer = self.iterate_fixed(c.fixed_rounds).map_err(|e| (Stage::PostRetrieval, e))?;
            self.trace.final_answer = answer;
            self.lap(Stage::PostRetrieval);
        } else if c.air {
            let sub_answers = self.iterate_adaptive(c.max_adaptive_iters).map_err(|e| (Stage::PostRetrieval, e))?;
            self.lap(Stage::PostRetrieval);
            let prompt = render(&self.p.env.prompts.final_adaptive, &[("question", &self.question), ("sub_answers", &sub_answers)]);
            let prompt = if self.notes.is_empty() { prompt } else { format!("{}\n{prompt}", self.notes) };
            self.final_answer(prompt).map_err(|e| (Stage::Generation, e))?;
            self.lap(Stage::Generation);
        } else {
            let prompt = self.answer_prompt(&self.question, "");
            self.final_answer(prompt).map_err(|e| (Stage::Generation, e))?;
            self.lap(Stage::Generation);
        }
        Ok(())
    }

    fn finish(mut self, failure: Option<(Stage, PipelineError)>) -> QueryTrace {
        if let Some((stage, e)) = failure {
            self.lap(stage);
            tracing::warn!(config = %self.p.config.config_id, error = %e, "query aborted");
            self.trace.error = Some(e.to_string());
            self.trace.final_answer.clear();
        }
        self.trace.non_answer = self.p.env.detector.is_non_answer(&self.trace.final_answer);
        self.trace.timings.total = self.clock.total().max(self.trace.timings.stage_sum());
        self.trace
    }

    /// Completes the trace after driving stages by hand.
    pub fn into_trace(self) -> QueryTrace {
        self.finish(None)
    }
}
