use crate::error::{Error, Result};
use crate::ingest::EntityMention;

use super::backbone::{EncoderBackbone, Token};

/// Marked text plus the token spans of every entity occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedInput {
    pub marked_text: String,
    /// Tokens after windowing; index 0 is `[CLS]`.
    pub tokens: Vec<Token>,
    /// Per entity, inclusive `(c, d)` token spans excluding the markers.
    pub entity_spans: Vec<Vec<(usize, usize)>>,
    pub cls_position: usize,
}

impl MarkedInput {
    /// Text covered by tokens `c..=d`, read back from the marked text.
    pub fn span_text(&self, (c, d): (usize, usize)) -> String {
        self.marked_text
            .chars()
            .skip(self.tokens[c].start)
            .take(self.tokens[d].end - self.tokens[c].start)
            .collect()
    }
}

/// Wraps every occurrence of every entity in its role marker, tokenizes,
/// and maps occurrences to token spans.
///
/// When the sequence is longer than the backbone allows, a window centred
/// on the marked region is kept (`[CLS]` stays in front).
pub fn insert_markers(
    segment_text: &str,
    entities: &[&EntityMention],
    backbone: &dyn EncoderBackbone,
) -> Result<MarkedInput> {
    let mut all: Vec<(usize, usize, usize, usize)> = Vec::new(); // (start, end, entity, occ)
    for (e, m) in entities.iter().enumerate() {
        for (k, &(s, t)) in m.occurrences.iter().enumerate() {
            all.push((s, t, e, k));
        }
    }
    all.sort_unstable();
    for w in all.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::OverlappingSpans);
        }
    }

    let chars: Vec<char> = segment_text.chars().collect();
    let mut marked = String::with_capacity(segment_text.len() + 2 * all.len());
    let mut content: Vec<Vec<(usize, usize)>> = entities
        .iter()
        .map(|m| vec![(0, 0); m.occurrences.len()])
        .collect();
    let mut cursor = 0;
    let mut out_len = 0;
    for &(s, t, e, k) in &all {
        if t > chars.len() {
            return Err(Error::SpanOutOfRange {
                start: s,
                end: t,
                len: chars.len(),
            });
        }
        marked.extend(&chars[cursor..s]);
        out_len += s - cursor;
        let marker = entities[e].role.marker();
        marked.push(marker);
        out_len += 1;
        marked.extend(&chars[s..t]);
        content[e][k] = (out_len, out_len + t - s);
        out_len += t - s;
        marked.push(marker);
        out_len += 1;
        cursor = t;
    }
    marked.extend(&chars[cursor..]);

    let mut tokens = backbone.tokenize(&marked);
    let mut spans: Vec<Vec<(usize, usize)>> = Vec::with_capacity(content.len());
    for occs in &content {
        let mut es = Vec::with_capacity(occs.len());
        for &(cs, ce) in occs {
            let inside: Vec<usize> = (1..tokens.len())
                .filter(|&i| tokens[i].start >= cs && tokens[i].end <= ce)
                .collect();
            let (Some(&c), Some(&d)) = (inside.first(), inside.last()) else {
                return Err(Error::InvalidInput(format!(
                    "occurrence at chars ({cs}, {ce}) of the marked text has no tokens"
                )));
            };
            es.push((c, d));
        }
        spans.push(es);
    }

    let limit = backbone.max_tokens();
    if tokens.len() > limit && !all.is_empty() {
        let first = spans.iter().flatten().map(|s| s.0).min().unwrap_or(1);
        let last = spans.iter().flatten().map(|s| s.1).max().unwrap_or(1);
        // include the surrounding marker tokens
        let lo = first.saturating_sub(1).max(1);
        let hi = (last + 1).min(tokens.len() - 1);
        let needed = hi - lo + 1;
        let avail = limit - 1;
        if needed > avail {
            return Err(Error::ContextOverflow {
                needed,
                available: avail,
            });
        }
        let slack = avail - needed;
        let start = lo
            .saturating_sub(slack / 2)
            .max(1)
            .min(tokens.len() - avail);
        let mut kept = Vec::with_capacity(limit);
        kept.push(tokens[0].clone());
        kept.extend_from_slice(&tokens[start..start + avail]);
        tokens = kept;
        for es in &mut spans {
            for s in es.iter_mut() {
                *s = (s.0 - start + 1, s.1 - start + 1);
            }
        }
    } else if tokens.len() > limit {
        tokens.truncate(limit);
    }

    Ok(MarkedInput {
        marked_text: marked,
        tokens,
        entity_spans: spans,
        cls_position: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::backbone::StubBackbone;
    use crate::ingest::Role;

    fn at(text: &str, needle: &str, nth: usize) -> (usize, usize) {
        let b = text.match_indices(needle).nth(nth).unwrap().0;
        let s = text[..b].chars().count();
        (s, s + needle.chars().count())
    }

    fn sample_entities(text: &str) -> Vec<EntityMention> {
        vec![
            EntityMention::new(Role::Person1, "Niemans", vec![at(text, "Niemans", 0)]),
            EntityMention::new(Role::Person2, "Berg", vec![at(text, "Berg", 0)]),
            EntityMention::new(Role::Time, "1950", vec![at(text, "1950", 0)]),
            EntityMention::new(Role::Location, "The Hague", vec![at(text, "The Hague", 0)]),
        ]
    }

    #[test]
    fn marker_scheme() {
        let text = "Niemans met Berg in The Hague in 1950";
        let ents = sample_entities(text);
        let refs: Vec<&EntityMention> = ents.iter().collect();
        let b = StubBackbone::new(4, 512, 1);
        let m = insert_markers(text, &refs, &b).unwrap();
        assert_eq!(m.marked_text, "#Niemans# met $Berg$ in &The Hague& in *1950*");
        for (ent, spans) in ents.iter().zip(&m.entity_spans) {
            for &(c, d) in spans {
                assert_eq!(m.span_text((c, d)), ent.surface);
                assert!(m.tokens[c - 1].text.starts_with(ent.role.marker()));
                assert!(m.tokens[d + 1].text.starts_with(ent.role.marker()));
            }
        }
    }

    #[test]
    fn two_occurrences_are_both_wrapped() {
        let text = "Berg arrived. Later Berg met Ann.";
        let e = EntityMention::new(Role::Person, "Berg", vec![at(text, "Berg", 0), at(text, "Berg", 1)]);
        let b = StubBackbone::new(4, 512, 1);
        let m = insert_markers(text, &[&e], &b).unwrap();
        assert_eq!(m.marked_text, "#Berg# arrived. Later #Berg# met Ann.");
        assert_eq!(m.entity_spans[0].len(), 2);
    }

    #[test]
    fn overlapping_entities_are_rejected() {
        let text = "New York 1950";
        let a = EntityMention::new(Role::Location, "New York", vec![(0, 8)]);
        let t = EntityMention::new(Role::Time, "York", vec![(4, 8)]);
        let b = StubBackbone::new(4, 512, 1);
        assert!(matches!(insert_markers(text, &[&a, &t], &b), Err(Error::OverlappingSpans)));
    }

    #[test]
    fn long_input_is_windowed_around_markers() {
        let filler = "word ".repeat(300);
        let text = format!("{filler}Niemans met Berg in The Hague in 1950 {filler}");
        let ents = sample_entities(&text);
        let refs: Vec<&EntityMention> = ents.iter().collect();
        let b = StubBackbone::new(4, 64, 1);
        let m = insert_markers(&text, &refs, &b).unwrap();
        assert_eq!(m.tokens.len(), 64);
        assert_eq!(m.tokens[0].text, "[CLS]");
        for (ent, spans) in ents.iter().zip(&m.entity_spans) {
            for &s in spans {
                assert_eq!(m.span_text(s), ent.surface);
            }
        }
    }

    #[test]
    fn unfittable_occurrences_overflow() {
        let filler = "word ".repeat(100);
        let text = format!("Niemans {filler} Berg");
        let a = EntityMention::new(Role::Person1, "Niemans", vec![at(&text, "Niemans", 0)]);
        let c = EntityMention::new(Role::Person2, "Berg", vec![at(&text, "Berg", 0)]);
        let b = StubBackbone::new(4, 32, 1);
        assert!(matches!(insert_markers(&text, &[&a, &c], &b), Err(Error::ContextOverflow { .. })));
    }
}
