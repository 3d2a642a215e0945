use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::candidates::QuadKey;
use super::types::{
    normalize_surface, CandidateQuadruple, Document, EntityMention, Role, Source, Span, TextSegment,
    TrajectoryTriple,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct MentionWire {
    pub surface: String,
    pub occurrences: Vec<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl MentionWire {
    pub(crate) fn into_mention(self, role: Role) -> EntityMention {
        EntityMention {
            role,
            surface: self.surface,
            occurrences: self.occurrences,
            entity_id: self.id,
        }
    }
}

impl From<&EntityMention> for MentionWire {
    fn from(m: &EntityMention) -> Self {
        Self {
            surface: m.surface.clone(),
            occurrences: m.occurrences.clone(),
            id: m.entity_id.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct TripleWire {
    #[serde(flatten)]
    pub segment: TextSegment,
    pub person: MentionWire,
    pub time: MentionWire,
    pub location: MentionWire,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct CandidateWire {
    #[serde(flatten)]
    pub segment: TextSegment,
    pub person1: MentionWire,
    pub person2: MentionWire,
    pub time: MentionWire,
    pub location: MentionWire,
}

impl CandidateWire {
    pub(crate) fn into_candidate(self) -> CandidateQuadruple {
        CandidateQuadruple {
            segment: Arc::new(self.segment),
            person1: self.person1.into_mention(Role::Person1),
            person2: self.person2.into_mention(Role::Person2),
            time: self.time.into_mention(Role::Time),
            location: self.location.into_mention(Role::Location),
        }
    }
}

impl From<&CandidateQuadruple> for CandidateWire {
    fn from(c: &CandidateQuadruple) -> Self {
        Self {
            segment: (*c.segment).clone(),
            person1: (&c.person1).into(),
            person2: (&c.person2).into(),
            time: (&c.time).into(),
            location: (&c.location).into(),
        }
    }
}

/// A record rejected during loading, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct LoadReport<T> {
    pub items: Vec<T>,
    pub errors: Vec<RecordError>,
}

/// Segments are shared between records that carry the same
/// `(doc_id, segment_id, text)`.
#[derive(Default)]
pub(crate) struct SegmentInterner(HashMap<TextSegment, Arc<TextSegment>>);

impl SegmentInterner {
    pub(crate) fn intern(&mut self, seg: TextSegment) -> Arc<TextSegment> {
        self.0
            .entry(seg.clone())
            .or_insert_with(|| Arc::new(seg))
            .clone()
    }
}

pub fn parse_triple_line(line: &str) -> Result<TrajectoryTriple> {
    let wire: TripleWire = serde_json::from_str(line)?;
    let triple = TrajectoryTriple {
        segment: Arc::new(wire.segment),
        person: wire.person.into_mention(Role::Person),
        time: wire.time.into_mention(Role::Time),
        location: wire.location.into_mention(Role::Location),
    };
    triple.validate()?;
    Ok(triple)
}

pub fn parse_candidate_line(line: &str) -> Result<CandidateQuadruple> {
    let wire: CandidateWire = serde_json::from_str(line)?;
    let cand = wire.into_candidate();
    cand.validate()?;
    Ok(cand)
}

pub(crate) fn for_each_line(
    path: &Path,
    mut f: impl FnMut(usize, &str) -> std::result::Result<(), String>,
) -> Result<Vec<RecordError>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if let Err(message) = f(i + 1, &line) {
            log::warn!("{}:{}: {message}", path.display(), i + 1);
            errors.push(RecordError {
                line: i + 1,
                message,
            });
        }
    }
    Ok(errors)
}

/// Loads trajectory triples. Invalid lines are collected, not fatal.
pub fn load_triples(path: impl AsRef<Path>) -> Result<LoadReport<TrajectoryTriple>> {
    let mut items = Vec::new();
    let mut interner = SegmentInterner::default();
    let errors = for_each_line(path.as_ref(), |_, line| {
        let mut t = parse_triple_line(line).map_err(|e| e.to_string())?;
        t.segment = interner.intern((*t.segment).clone());
        items.push(t);
        Ok(())
    })?;
    Ok(LoadReport { items, errors })
}

pub fn load_candidates(path: impl AsRef<Path>) -> Result<LoadReport<CandidateQuadruple>> {
    let mut items = Vec::new();
    let mut interner = SegmentInterner::default();
    let errors = for_each_line(path.as_ref(), |_, line| {
        let mut c = parse_candidate_line(line).map_err(|e| e.to_string())?;
        c.segment = interner.intern((*c.segment).clone());
        items.push(c);
        Ok(())
    })?;
    Ok(LoadReport { items, errors })
}

pub(crate) fn triple_to_line(t: &TrajectoryTriple) -> String {
    let wire = TripleWire {
        segment: (*t.segment).clone(),
        person: (&t.person).into(),
        time: (&t.time).into(),
        location: (&t.location).into(),
    };
    serde_json::to_string(&wire).expect("triple serializes")
}

pub(crate) fn candidate_to_line(c: &CandidateQuadruple) -> String {
    serde_json::to_string(&CandidateWire::from(c)).expect("candidate serializes")
}

pub fn dump_triples<W: Write>(out: &mut W, triples: &[TrajectoryTriple]) -> std::io::Result<()> {
    for t in triples {
        writeln!(out, "{}", triple_to_line(t))?;
    }
    Ok(())
}

pub fn dump_candidates<W: Write>(
    out: &mut W,
    candidates: &[CandidateQuadruple],
) -> std::io::Result<()> {
    for c in candidates {
        writeln!(out, "{}", candidate_to_line(c))?;
    }
    Ok(())
}

/// Reads every `.txt` (plain text, doc id = file stem) and `.jsonl`
/// (one [`Document`] per line) file in `dir`, sorted by doc id.
pub fn read_documents(dir: impl AsRef<Path>) -> Result<LoadReport<Document>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    paths.sort();
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for path in paths {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                items.push(Document {
                    title: stem.clone(),
                    doc_id: stem,
                    text,
                    source: Source::Fixture,
                });
            }
            Some("jsonl") => {
                errors.extend(for_each_line(&path, |_, line| {
                    let doc: Document = serde_json::from_str(line).map_err(|e| e.to_string())?;
                    if doc.text.is_empty() {
                        return Err(format!("document {} has empty text", doc.doc_id));
                    }
                    items.push(doc);
                    Ok(())
                })?);
            }
            _ => {}
        }
    }
    items.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    for w in items.windows(2) {
        if w[0].doc_id == w[1].doc_id {
            return Err(Error::InvalidInput(format!(
                "duplicate doc_id `{}`",
                w[0].doc_id
            )));
        }
    }
    Ok(LoadReport { items, errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{"doc_id":"niemans","segment_id":"niemans:s0","segment_text":"Niemans met Berg in The Hague in 1950.","char_start":0,"char_end":38,"person":{"surface":"Niemans","occurrences":[[0,7]]},"time":{"surface":"1950","occurrences":[[33,37]]},"location":{"surface":"The Hague","occurrences":[[20,29]]}}"#;

    #[test]
    fn worked_example_record_round_trips_byte_identically() {
        let t = parse_triple_line(WORKED).unwrap();
        assert_eq!(t.person.surface, "Niemans");
        assert_eq!(triple_to_line(&t), WORKED);
    }

    #[test]
    fn loader_collects_invalid_lines_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let overlapping = WORKED.replace("[[0,7]]", "[[0,7],[3,10]]");
        let body = format!("{WORKED}\n{overlapping}\n{WORKED}\n");
        fs::write(&path, body).unwrap();
        let report = load_triples(&path).unwrap();
        assert_eq!(report.items.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, 2);
        assert!(Arc::ptr_eq(&report.items[0].segment, &report.items[1].segment));
    }

    #[test]
    fn three_line_file_loads_three_triples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        fs::write(&path, format!("{WORKED}\n{WORKED}\n{WORKED}\n")).unwrap();
        let report = load_triples(&path).unwrap();
        assert_eq!(report.items.len(), 3);
        assert!(report.errors.is_empty());
    }

    #[test]
    fn garbage_line_is_an_error_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        fs::write(&path, format!("{{not json\n{WORKED}\n")).unwrap();
        let report = load_triples(&path).unwrap();
        assert_eq!(report.items.len(), 1);
        assert_eq!(report.errors[0].line, 1);
    }

    #[test]
    fn unreadable_file_is_fatal() {
        assert!(matches!(
            load_triples("/nonexistent/triples.jsonl"),
            Err(Error::Io { .. })
        ));
    }
}

#[derive(Deserialize)]
struct GoldLine {
    doc_id: String,
    person1: String,
    person2: String,
    time: String,
    location: String,
}

/// Loads hand-labeled interactions (`doc_id`, `person1`, `person2`, `time`,
/// `location`) as audit keys. Persons are ordered as in candidate pairing.
pub fn load_gold_keys(path: impl AsRef<Path>) -> Result<LoadReport<QuadKey>> {
    let mut items = Vec::new();
    let errors = for_each_line(path.as_ref(), |_, line| {
        let g: GoldLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let (a, b) = (normalize_surface(&g.person1), normalize_surface(&g.person2));
        let (p1, p2) = if a <= b { (a, b) } else { (b, a) };
        items.push((g.doc_id, p1, p2, normalize_surface(&g.time), normalize_surface(&g.location)));
        Ok(())
    })?;
    Ok(LoadReport { items, errors })
}
