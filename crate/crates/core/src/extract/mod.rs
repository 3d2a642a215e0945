//! Corpus-scale extraction of interaction records, time normalisation,
//! geocoding and interaction typing.

mod geo;
mod llm;
mod pipeline;
mod record;
mod time;

pub use geo::{Gazetteer, GeoPoint, Place};
#[cfg(feature = "http")]
pub use llm::HttpClient;
pub use llm::{
    classify_records, classify_type, client_from_spec, parse_type, type_prompt, FixtureClient, HttpSettings,
    LlmClient, RetryPolicy, TypeCounts,
};
pub use pipeline::{assign_triples, extract_corpus, extract_files, DocProgress, ExtractOptions, RunSummary};
pub use record::{
    dump_records, load_records, record_id, InteractionRecord, InteractionType, LocationRef, PersonRef, TypeFlag,
};
pub use time::{normalize_time, record_year, YEAR_RANGE};
