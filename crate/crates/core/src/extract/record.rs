use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geo::{Gazetteer, GeoPoint};
use super::time::record_year;
use crate::error::Result;
use crate::ingest::jsonl::for_each_line;
use crate::ingest::{CandidateQuadruple, LoadReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InteractionType {
    Adversarial,
    Cooperative,
    Neutral,
}

impl InteractionType {
    pub const ALL: [InteractionType; 3] = [Self::Adversarial, Self::Cooperative, Self::Neutral];

    /// Signed edge weight in the interaction network.
    pub fn weight(self) -> f64 {
        match self {
            Self::Adversarial => -2.0,
            Self::Cooperative => 2.0,
            Self::Neutral => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Adversarial => "Adversarial",
            Self::Cooperative => "Cooperative",
            Self::Neutral => "Neutral",
        }
    }
}

/// Why a record's type is not a clean classifier answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeFlag {
    /// The response named no single type; defaulted to Neutral.
    Unparseable,
    /// Every attempt to reach the classifier failed.
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonRef {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRef {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

/// One extracted interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub id: String,
    pub doc_id: String,
    pub segment_id: String,
    pub char_start: usize,
    pub char_end: usize,
    pub segment_text: String,
    pub person1: PersonRef,
    pub person2: PersonRef,
    pub time_surface: String,
    /// Normalised year, absent when ambiguous or outside the accepted span.
    pub year: Option<i32>,
    pub location: LocationRef,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction_type: Option<InteractionType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_flag: Option<TypeFlag>,
}

/// `{segment_id}#{p1}|{p2}|{time}|{location}` over normalised surfaces.
pub fn record_id(c: &CandidateQuadruple) -> String {
    let (_, p1, p2, t, l) = c.key();
    format!("{}#{p1}|{p2}|{t}|{l}", c.segment.segment_id)
}

impl InteractionRecord {
    pub fn from_candidate(c: &CandidateQuadruple, score: f64, gazetteer: Option<&Gazetteer>) -> Self {
        let place = gazetteer.and_then(|g| g.lookup(&c.location.surface));
        Self {
            id: record_id(c),
            doc_id: c.segment.doc_id.clone(),
            segment_id: c.segment.segment_id.clone(),
            char_start: c.segment.char_start,
            char_end: c.segment.char_end,
            segment_text: c.segment.text.clone(),
            person1: PersonRef {
                surface: c.person1.surface.clone(),
                id: c.person1.entity_id.clone(),
            },
            person2: PersonRef {
                surface: c.person2.surface.clone(),
                id: c.person2.entity_id.clone(),
            },
            time_surface: c.time.surface.clone(),
            year: record_year(&c.time.surface),
            location: LocationRef {
                surface: c.location.surface.clone(),
                geo: place.map(|p| p.point),
                state: place.and_then(|p| p.state.clone()),
            },
            score,
            interaction_type: None,
            type_flag: None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

pub fn load_records(path: impl AsRef<Path>) -> Result<LoadReport<InteractionRecord>> {
    let mut items = Vec::new();
    let errors = for_each_line(path.as_ref(), |_, line| {
        items.push(serde_json::from_str(line).map_err(|e| e.to_string())?);
        Ok(())
    })?;
    Ok(LoadReport { items, errors })
}

pub fn dump_records<W: Write>(out: &mut W, records: &[InteractionRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    Ok(())
}
