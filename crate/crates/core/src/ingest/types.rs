use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Wikipedia,
    Britannica,
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub text: String,
    pub source: Source,
}

/// A contiguous slice of a document. Offsets count Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextSegment {
    pub doc_id: String,
    pub segment_id: String,
    #[serde(rename = "segment_text")]
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl TextSegment {
    pub fn validate_against(&self, doc: &Document) -> Result<()> {
        let len = char_len(&doc.text);
        if self.char_start >= self.char_end || self.char_end > len {
            return Err(Error::InvalidInput(format!(
                "segment {} offsets ({}, {}) outside document of length {len}",
                self.segment_id, self.char_start, self.char_end
            )));
        }
        if char_slice(&doc.text, self.char_start, self.char_end) != self.text {
            return Err(Error::InvalidInput(format!(
                "segment {} text differs from document slice",
                self.segment_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Person1,
    Person2,
    Person,
    Time,
    Location,
}

impl Role {
    /// Marker character wrapped around every occurrence of an entity with this role.
    pub fn marker(self) -> char {
        match self {
            Role::Person1 | Role::Person => '#',
            Role::Person2 => '$',
            Role::Time => '*',
            Role::Location => '&',
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Half-open character span `[start, end)` relative to the segment text.
pub type Span = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntityMention {
    pub role: Role,
    pub surface: String,
    pub occurrences: Vec<Span>,
    /// Upstream knowledge-base id, passed through untouched.
    pub entity_id: Option<String>,
}

impl EntityMention {
    pub fn new(role: Role, surface: impl Into<String>, occurrences: Vec<Span>) -> Self {
        Self {
            role,
            surface: surface.into(),
            occurrences,
            entity_id: None,
        }
    }

    pub fn with_role(&self, role: Role) -> Self {
        Self {
            role,
            ..self.clone()
        }
    }

    pub fn normalized(&self) -> String {
        normalize_surface(&self.surface)
    }

    /// Checks occurrence spans against the segment text.
    pub fn validate(&self, segment_text: &str) -> Result<()> {
        if self.occurrences.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} mention `{}` has no occurrences",
                self.role, self.surface
            )));
        }
        let len = char_len(segment_text);
        let mut spans = self.occurrences.clone();
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidInput(format!(
                    "{} mention `{}` has overlapping spans {:?} and {:?}",
                    self.role, self.surface, w[0], w[1]
                )));
            }
        }
        let want = self.normalized();
        for &(s, e) in &self.occurrences {
            if s >= e || e > len {
                return Err(Error::InvalidInput(format!(
                    "{} span ({s}, {e}) outside segment of length {len}",
                    self.role
                )));
            }
            let got = normalize_surface(char_slice(segment_text, s, e));
            if got != want {
                return Err(Error::InvalidInput(format!(
                    "{} span ({s}, {e}) reads `{got}`, expected `{want}`",
                    self.role
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryTriple {
    pub segment: Arc<TextSegment>,
    pub person: EntityMention,
    pub time: EntityMention,
    pub location: EntityMention,
}

impl TrajectoryTriple {
    pub fn validate(&self) -> Result<()> {
        if self.person.role != Role::Person
            || self.time.role != Role::Time
            || self.location.role != Role::Location
        {
            return Err(Error::InvalidInput("triple roles out of place".into()));
        }
        for m in self.entities() {
            m.validate(&self.segment.text)?;
        }
        Ok(())
    }

    /// Entities in canonical encoder order.
    pub fn entities(&self) -> [&EntityMention; 3] {
        [&self.person, &self.time, &self.location]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateQuadruple {
    pub segment: Arc<TextSegment>,
    pub person1: EntityMention,
    pub person2: EntityMention,
    pub time: EntityMention,
    pub location: EntityMention,
}

impl CandidateQuadruple {
    pub fn validate(&self) -> Result<()> {
        if self.person1.role != Role::Person1
            || self.person2.role != Role::Person2
            || self.time.role != Role::Time
            || self.location.role != Role::Location
        {
            return Err(Error::InvalidInput("quadruple roles out of place".into()));
        }
        if self.person1.surface == self.person2.surface {
            return Err(Error::InvalidInput(format!(
                "person1 and person2 are both `{}`",
                self.person1.surface
            )));
        }
        for m in self.entities() {
            m.validate(&self.segment.text)?;
        }
        Ok(())
    }

    pub fn entities(&self) -> [&EntityMention; 4] {
        [&self.person1, &self.person2, &self.time, &self.location]
    }

    /// The two trajectory triples implied by this quadruple, sharing its
    /// time and location mentions.
    pub fn split(&self) -> (TrajectoryTriple, TrajectoryTriple) {
        let make = |p: &EntityMention| TrajectoryTriple {
            segment: Arc::clone(&self.segment),
            person: p.with_role(Role::Person),
            time: self.time.clone(),
            location: self.location.clone(),
        };
        (make(&self.person1), make(&self.person2))
    }
}

/// Case-fold and collapse runs of whitespace.
pub fn normalize_surface(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Slice by character offsets. Out-of-range offsets are clamped.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let byte = |n: usize| s.char_indices().nth(n).map_or(s.len(), |(b, _)| b);
    let (b0, b1) = (byte(start), byte(end));
    if b0 >= b1 {
        ""
    } else {
        &s[b0..b1]
    }
}
