//! Entity-marker encoder: marker insertion, backbone encoding, occurrence
//! pooling, attention across repeated mentions and per-slot projection.

mod arbert;
mod backbone;
mod markers;

pub use arbert::{
    aggregate_backward, aggregate_occurrences, pool_occurrence, prepare, ArBert, AttentionNorm,
    EncodeCache, Encoded, EntityFeature, Linear, PreparedInput,
};
pub use backbone::{
    load_backbone, simple_tokenize, BackboneConfig, EncoderBackbone, StubBackbone, Token, CLS,
};
pub use markers::{insert_markers, MarkedInput};
