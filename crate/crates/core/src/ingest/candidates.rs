use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::types::{CandidateQuadruple, EntityMention, Role, Span, TrajectoryTriple};
use crate::error::{Error, Result};

/// Identity of a quadruple for deduplication and coverage audits:
/// `(doc_id, person1, person2, time, location)` with normalized surfaces.
pub type QuadKey = (String, String, String, String, String);

impl CandidateQuadruple {
    pub fn key(&self) -> QuadKey {
        (
            self.segment.doc_id.clone(),
            self.person1.normalized(),
            self.person2.normalized(),
            self.time.normalized(),
            self.location.normalized(),
        )
    }
}

/// Union of two span lists, sorted, dropping spans that overlap an earlier one.
fn merge_spans(a: &[Span], b: &[Span]) -> Vec<Span> {
    let mut all: Vec<Span> = a.iter().chain(b).copied().collect();
    all.sort_unstable();
    all.dedup();
    let mut out: Vec<Span> = Vec::with_capacity(all.len());
    for s in all {
        if out.last().map_or(true, |l| s.0 >= l.1) {
            out.push(s);
        }
    }
    out
}

fn merge_mentions(role: Role, a: &EntityMention, b: &EntityMention) -> EntityMention {
    EntityMention {
        role,
        surface: a.surface.clone(),
        occurrences: merge_spans(&a.occurrences, &b.occurrences),
        entity_id: a.entity_id.clone().or_else(|| b.entity_id.clone()),
    }
}

/// Pairs co-occurring trajectory triples of one segment into candidate
/// interaction quadruples.
///
/// Two triples pair when their persons differ and their time and location
/// surfaces are equal after normalization. The person whose surface sorts
/// first becomes `Person1`. Output is sorted by key and independent of
/// input order.
pub fn pair_candidates(triples: &[TrajectoryTriple]) -> Vec<CandidateQuadruple> {
    // sort a copy so the first-seen surface/occurrence choice does not
    // depend on input order
    let mut sorted: Vec<&TrajectoryTriple> = triples.iter().collect();
    sorted.sort_by(|a, b| {
        let ka = (a.person.normalized(), a.time.normalized(), a.location.normalized());
        let kb = (b.person.normalized(), b.time.normalized(), b.location.normalized());
        ka.cmp(&kb)
            .then_with(|| a.person.surface.cmp(&b.person.surface))
            .then_with(|| a.person.occurrences.cmp(&b.person.occurrences))
            .then_with(|| a.time.occurrences.cmp(&b.time.occurrences))
            .then_with(|| a.location.occurrences.cmp(&b.location.occurrences))
    });
    let mut out: BTreeMap<QuadKey, CandidateQuadruple> = BTreeMap::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            let (pa, pb) = (a.person.normalized(), b.person.normalized());
            if pa == pb
                || a.time.normalized() != b.time.normalized()
                || a.location.normalized() != b.location.normalized()
            {
                continue;
            }
            let (first, second) = if (pa.as_str(), &a.person.surface) <= (pb.as_str(), &b.person.surface) {
                (a, b)
            } else {
                (b, a)
            };
            let cand = CandidateQuadruple {
                segment: Arc::clone(&first.segment),
                person1: first.person.with_role(Role::Person1),
                person2: second.person.with_role(Role::Person2),
                time: merge_mentions(Role::Time, &first.time, &second.time),
                location: merge_mentions(Role::Location, &first.location, &second.location),
            };
            out.entry(cand.key())
                .and_modify(|existing| {
                    existing.person1 = merge_mentions(Role::Person1, &existing.person1, &cand.person1);
                    existing.person2 = merge_mentions(Role::Person2, &existing.person2, &cand.person2);
                    existing.time = merge_mentions(Role::Time, &existing.time, &cand.time);
                    existing.location =
                        merge_mentions(Role::Location, &existing.location, &cand.location);
                })
                .or_insert(cand);
        }
    }
    out.into_values().collect()
}

/// Groups triples by `(doc_id, segment_id)` and pairs each group.
pub fn pair_corpus(triples: &[TrajectoryTriple]) -> Vec<CandidateQuadruple> {
    let mut groups: BTreeMap<(&str, &str), Vec<TrajectoryTriple>> = BTreeMap::new();
    for t in triples {
        groups
            .entry((t.segment.doc_id.as_str(), t.segment.segment_id.as_str()))
            .or_default()
            .push(t.clone());
    }
    groups.values().flat_map(|g| pair_candidates(g)).collect()
}

/// Share of gold quadruples that also appear in `produced`.
pub fn audit_coverage(gold: &[CandidateQuadruple], produced: &[CandidateQuadruple]) -> Result<f64> {
    let gold: Vec<QuadKey> = gold.iter().map(CandidateQuadruple::key).collect();
    audit_keys(&gold, produced)
}

/// Coverage against gold keys given directly, as loaded by [`load_gold_keys`].
///
/// [`load_gold_keys`]: crate::ingest::load_gold_keys
pub fn audit_keys(gold: &[QuadKey], produced: &[CandidateQuadruple]) -> Result<f64> {
    let gold_keys: HashSet<&QuadKey> = gold.iter().collect();
    if gold_keys.is_empty() {
        return Err(Error::UndefinedCoverage);
    }
    let produced_keys: HashSet<QuadKey> = produced.iter().map(CandidateQuadruple::key).collect();
    let hit = gold_keys.iter().filter(|k| produced_keys.contains(**k)).count();
    Ok(hit as f64 / gold_keys.len() as f64)
}
