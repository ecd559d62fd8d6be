//! Bundled offline fixture: a replayable regulator cassette for two
//! fictional companies, a matching QA set, and the chunking used with it.

use crate::corpus::Cik;

/// Replayable cassette with submissions listings and filing documents.
pub const DEMO_CASSETTE_JSON: &str = include_str!("../assets/demo/edgar_cassette.json");
/// Human-written triplets whose gold passages occur verbatim in the filings.
pub const DEMO_TRIPLETS_JSONL: &str = include_str!("../assets/demo/triplets.jsonl");
pub const DEMO_CIKS: [Cik; 2] = [Cik(9000001), Cik(9000002)];
/// The fixture filings are short, so windows are smaller than the default.
/// The overlap exceeds every gold sentence, so each lies wholly in a chunk.
pub const DEMO_CHUNK_SIZE: usize = 64;
pub const DEMO_OVERLAP: usize = 24;
pub const DEMO_USER_AGENT: &str = "ragtrade-demo demo@example.com";
