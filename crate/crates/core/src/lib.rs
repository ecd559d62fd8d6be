//! Retrieval-augmented question answering over timestamped filings, with
//! configurable pre-, at- and post-retrieval techniques, evaluation metrics
//! and time-versus-quality trade-space analysis.

pub mod corpus;
pub mod dataset;
pub mod fixtures;
pub mod http;
pub mod metrics;
pub mod index;
pub mod pipeline;
pub mod prompts;
pub mod providers;
pub mod text;
pub mod tradespace;
