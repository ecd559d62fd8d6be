use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::index::RetrievalResult;
use crate::providers::GenerationTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryOrigin {
    Original,
    StepBack,
    Clarification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedQuery {
    pub query: String,
    pub origin: QueryOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarificationChild {
    pub question: String,
    pub answer: String,
}

/// Root question with disambiguated question/answer children. Never pruned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarificationTree {
    pub root: String,
    pub children: Vec<ClarificationChild>,
    pub one_shot_exemplar: String,
}

impl ClarificationTree {
    /// At most `fan_out` children, each distinct from the root and siblings.
    pub fn is_valid(&self, fan_out: usize) -> bool {
        let mut seen = BTreeSet::new();
        self.children.len() <= fan_out
            && self.children.iter().all(|c| c.question != self.root && seen.insert(c.question.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundStage {
    Initial,
    Clarification,
    FixedIteration,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRound {
    pub stage: RoundStage,
    /// Index of the clarification child or adaptive sub-question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<usize>,
    /// 1-based iteration within the stage or branch.
    pub iteration: usize,
    pub result: RetrievalResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuestionTrace {
    pub question: String,
    pub iterations: usize,
    /// Raw judge outputs, one per iteration.
    pub verdicts: Vec<String>,
    pub sufficient: bool,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCall {
    pub task: GenerationTask,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

/// Seconds spent per stage. `total` covers the whole query and is at least
/// the sum of the stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub expansion: f64,
    pub retrieval: f64,
    pub post_retrieval: f64,
    pub generation: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.expansion + self.retrieval + self.post_retrieval + self.generation
    }
}

/// Full record of one question through one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub config_id: String,
    pub question_index: usize,
    pub original_question: String,
    pub expanded_queries: Vec<ExpandedQuery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clarification: Option<ClarificationTree>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_questions: Vec<SubQuestionTrace>,
    pub retrieval_rounds: Vec<RetrievalRound>,
    pub intermediate_answers: Vec<String>,
    pub generation_calls: Vec<GenerationCall>,
    /// Chunk ids passed to the final generation, in prompt order.
    pub final_context_ids: Vec<String>,
    pub final_answer: String,
    pub non_answer: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Set when a provider failure aborted the query; the rest is partial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timings: StageTimings,
}

impl QueryTrace {
    pub fn new(config_id: impl Into<String>, question: impl Into<String>) -> Self {
        Self {
            config_id: config_id.into(),
            question_index: 0,
            original_question: question.into(),
            expanded_queries: Vec::new(),
            clarification: None,
            sub_questions: Vec::new(),
            retrieval_rounds: Vec::new(),
            intermediate_answers: Vec::new(),
            generation_calls: Vec::new(),
            final_context_ids: Vec::new(),
            final_answer: String::new(),
            non_answer: true,
            warnings: Vec::new(),
            error: None,
            timings: StageTimings::default(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    pub fn generation_count(&self, task: GenerationTask) -> usize {
        self.generation_calls.iter().filter(|c| c.task == task).count()
    }

    /// Every chunk id returned by any retrieval round.
    pub fn retrieved_ids(&self) -> BTreeSet<&str> {
        self.retrieval_rounds
            .iter()
            .flat_map(|r| r.result.ranked.iter().map(|i| i.chunk_id.as_str()))
            .collect()
    }

    /// Ranked ids used for retrieval scoring: the initial rounds merged in
    /// rank order, deduplicated.
    pub fn primary_ranking(&self) -> Vec<String> {
        let initial: Vec<&RetrievalResult> = self
            .retrieval_rounds
            .iter()
            .filter(|r| r.stage == RoundStage::Initial)
            .map(|r| &r.result)
            .collect();
        super::context::merge_ranked(&initial)
    }
}
