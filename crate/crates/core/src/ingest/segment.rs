use regex::Regex;
use std::sync::OnceLock;

use super::types::{Document, TextSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentPolicy {
    /// Adjacent paragraphs are merged while the merged span stays within
    /// this many characters.
    pub max_chars: usize,
    pub merge_paragraphs: bool,
}

impl Default for SegmentPolicy {
    fn default() -> Self {
        Self {
            max_chars: 2000,
            merge_paragraphs: true,
        }
    }
}

fn paragraph_break() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\n[ \t\r]*\n\s*").expect("static regex"))
}

/// Paragraph spans as char offsets, excluding surrounding whitespace.
fn paragraphs(text: &str) -> Vec<(usize, usize)> {
    // byte offset -> char offset
    let to_char = |b: usize| text[..b].chars().count();
    let mut out = Vec::new();
    let mut push = |b0: usize, b1: usize| {
        let piece = &text[b0..b1];
        let lead = piece.len() - piece.trim_start().len();
        let trail = piece.len() - piece.trim_end().len();
        if lead + trail < piece.len() {
            out.push((to_char(b0 + lead), to_char(b1 - trail)));
        }
    };
    let mut last = 0;
    for m in paragraph_break().find_iter(text) {
        push(last, m.start());
        last = m.end();
    }
    push(last, text.len());
    out
}

/// Splits a document into paragraph segments, greedily merging neighbours
/// while the merged span is at most `policy.max_chars` long. A paragraph
/// longer than the cap becomes a segment of its own.
pub fn segment_document(doc: &Document, policy: &SegmentPolicy) -> Vec<TextSegment> {
    let paras = paragraphs(&doc.text);
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for (s, e) in paras {
        match spans.last_mut() {
            Some(cur) if policy.merge_paragraphs && e - cur.0 <= policy.max_chars => cur.1 = e,
            _ => spans.push((s, e)),
        }
    }
    let chars: Vec<char> = doc.text.chars().collect();
    spans
        .into_iter()
        .enumerate()
        .map(|(i, (s, e))| TextSegment {
            doc_id: doc.doc_id.clone(),
            segment_id: format!("{}:s{i}", doc.doc_id),
            text: chars[s..e].iter().collect(),
            char_start: s,
            char_end: e,
        })
        .collect()
}

/// Rebuilds the document text from its segments and the gaps between them.
pub fn reconstruct(text: &str, segments: &[TextSegment]) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for seg in segments {
        out.extend(&chars[cursor..seg.char_start]);
        out.push_str(&seg.text);
        cursor = seg.char_end;
    }
    out.extend(&chars[cursor..]);
    out
}
