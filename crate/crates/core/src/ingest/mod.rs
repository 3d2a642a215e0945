//! Documents, segments and entity mentions, plus the two co-occurrence
//! record formats (trajectory triples and candidate quadruples).

mod candidates;
pub(crate) mod jsonl;
mod segment;
mod types;

pub use candidates::{audit_coverage, audit_keys, pair_candidates, pair_corpus, QuadKey};
pub use jsonl::{
    dump_candidates, dump_triples, load_candidates, load_gold_keys, load_triples, parse_candidate_line,
    parse_triple_line, read_documents, LoadReport, RecordError,
};
pub use segment::{reconstruct, segment_document, SegmentPolicy};
pub use types::{
    char_len, char_slice, normalize_surface, CandidateQuadruple, Document, EntityMention, Role,
    Source, Span, TextSegment, TrajectoryTriple,
};
