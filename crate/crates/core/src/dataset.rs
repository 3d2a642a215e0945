//! Labelled interaction examples, their trajectory decomposition, and
//! deterministic train/validation/test splits.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::jsonl::{for_each_line, CandidateWire, SegmentInterner};
use crate::ingest::{CandidateQuadruple, LoadReport, TrajectoryTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub candidate: CandidateQuadruple,
    pub y_inter: u8,
    pub y_tra1: u8,
    pub y_tra2: u8,
    pub split: Option<Split>,
}

impl LabeledExample {
    /// Labels must be binary and an interaction entails both presences.
    pub fn validate(&self) -> Result<()> {
        for (name, y) in [("y_inter", self.y_inter), ("y_tra1", self.y_tra1), ("y_tra2", self.y_tra2)] {
            if y > 1 {
                return Err(Error::InvalidInput(format!("{name}={y} is not binary")));
            }
        }
        if self.y_inter == 1 && (self.y_tra1 != 1 || self.y_tra2 != 1) {
            return Err(Error::InvalidInput(
                "y_inter=1 requires y_tra1=1 and y_tra2=1".into(),
            ));
        }
        self.candidate.validate()
    }
}

#[derive(Serialize, Deserialize)]
struct LabeledWire {
    #[serde(flatten)]
    candidate: CandidateWire,
    y_inter: u8,
    y_tra1: u8,
    y_tra2: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
}

pub fn parse_labeled_line(line: &str) -> Result<LabeledExample> {
    let wire: LabeledWire = serde_json::from_str(line)?;
    let ex = LabeledExample {
        candidate: wire.candidate.into_candidate(),
        y_inter: wire.y_inter,
        y_tra1: wire.y_tra1,
        y_tra2: wire.y_tra2,
        split: wire.split,
    };
    ex.validate()?;
    Ok(ex)
}

pub fn labeled_to_line(ex: &LabeledExample) -> String {
    let wire = LabeledWire {
        candidate: (&ex.candidate).into(),
        y_inter: ex.y_inter,
        y_tra1: ex.y_tra1,
        y_tra2: ex.y_tra2,
        split: ex.split,
    };
    serde_json::to_string(&wire).expect("labeled example serializes")
}

/// Loads labelled examples; entailment violations are reported per line.
pub fn load_labeled(path: impl AsRef<Path>) -> Result<LoadReport<LabeledExample>> {
    let mut items = Vec::new();
    let mut interner = SegmentInterner::default();
    let errors = for_each_line(path.as_ref(), |_, line| {
        let mut ex = parse_labeled_line(line).map_err(|e| e.to_string())?;
        ex.candidate.segment = interner.intern((*ex.candidate.segment).clone());
        items.push(ex);
        Ok(())
    })?;
    Ok(LoadReport { items, errors })
}

pub fn dump_labeled<W: Write>(out: &mut W, examples: &[LabeledExample]) -> std::io::Result<()> {
    for ex in examples {
        writeln!(out, "{}", labeled_to_line(ex))?;
    }
    Ok(())
}

/// A trajectory triple with its presence label, used to pretrain the
/// trajectory extractor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTriple {
    pub triple: TrajectoryTriple,
    pub y_tra: u8,
}

pub fn parse_labeled_triple_line(line: &str) -> Result<LabeledTriple> {
    #[derive(Deserialize)]
    struct Labels {
        y_tra: u8,
    }
    let Labels { y_tra } = serde_json::from_str(line)?;
    if y_tra > 1 {
        return Err(Error::InvalidInput(format!("y_tra={y_tra} is not binary")));
    }
    Ok(LabeledTriple {
        triple: crate::ingest::parse_triple_line(line)?,
        y_tra,
    })
}

pub fn load_labeled_triples(path: impl AsRef<Path>) -> Result<LoadReport<LabeledTriple>> {
    let mut items = Vec::new();
    let errors = for_each_line(path.as_ref(), |_, line| {
        items.push(parse_labeled_triple_line(line).map_err(|e| e.to_string())?);
        Ok(())
    })?;
    Ok(LoadReport { items, errors })
}

/// Trajectory triples for Person1 and Person2.
pub fn decompose(example: &LabeledExample) -> (TrajectoryTriple, TrajectoryTriple) {
    example.candidate.split()
}

/// Split sizes by largest remainder: floors first, leftover units go to the
/// largest fractional parts (ties to the earlier split).
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|r| *r < 0.0) {
        return Err(Error::InvalidInput(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let exact = ratios.map(|r| r * n as f64);
    let mut sizes = exact.map(|x| x.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    Ok(sizes)
}

const SPLITS: [Split; 3] = [Split::Train, Split::Val, Split::Test];

/// Assigns every example to exactly one split, deterministically under `seed`.
///
/// With `group_by_doc`, whole documents are assigned together so no page
/// contributes to two splits; sizes then only approximate the ratios.
pub fn split_dataset(
    examples: &[LabeledExample],
    ratios: [f64; 3],
    seed: u64,
    group_by_doc: bool,
) -> Result<Vec<Split>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Split::Train; examples.len()];
    if !group_by_doc {
        let sizes = split_sizes(examples.len(), ratios)?;
        let mut idx: Vec<usize> = (0..examples.len()).collect();
        idx.shuffle(&mut rng);
        let mut cursor = 0;
        for (split, size) in SPLITS.iter().zip(sizes) {
            for &i in &idx[cursor..cursor + size] {
                out[i] = *split;
            }
            cursor += size;
        }
        return Ok(out);
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        groups.entry(ex.candidate.segment.doc_id.as_str()).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.shuffle(&mut rng);
    let targets = split_sizes(examples.len(), ratios)?;
    let mut filled = [0usize; 3];
    let mut s = 0;
    for g in groups {
        while s < 2 && filled[s] >= targets[s] {
            s += 1;
        }
        for &i in &g {
            out[i] = SPLITS[s];
        }
        filled[s] += g.len();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarityCounts {
    pub positive: usize,
    pub negative: usize,
    pub total: usize,
}

impl PolarityCounts {
    fn add(&mut self, y: u8) {
        if y == 1 {
            self.positive += 1;
        } else {
            self.negative += 1;
        }
        self.total += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub interaction: PolarityCounts,
    pub trajectory: PolarityCounts,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub unassigned: usize,
}

pub fn summarize(examples: &[LabeledExample]) -> DatasetSummary {
    let mut s = DatasetSummary::default();
    for ex in examples {
        s.interaction.add(ex.y_inter);
        s.trajectory.add(ex.y_tra1);
        s.trajectory.add(ex.y_tra2);
        match ex.split {
            Some(Split::Train) => s.train += 1,
            Some(Split::Val) => s.val += 1,
            Some(Split::Test) => s.test += 1,
            None => s.unassigned += 1,
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{EntityMention, Role, TextSegment};
    use std::collections::HashSet;
    use std::sync::Arc;

    pub(crate) fn worked_example() -> LabeledExample {
        let text = "Niemans met Berg in The Hague in 1950.";
        let seg = Arc::new(TextSegment {
            doc_id: "niemans".into(),
            segment_id: "niemans:s0".into(),
            text: text.into(),
            char_start: 0,
            char_end: 38,
        });
        LabeledExample {
            candidate: CandidateQuadruple {
                segment: seg,
                person1: EntityMention::new(Role::Person1, "Berg", vec![(12, 16)]),
                person2: EntityMention::new(Role::Person2, "Niemans", vec![(0, 7)]),
                time: EntityMention::new(Role::Time, "1950", vec![(33, 37)]),
                location: EntityMention::new(Role::Location, "The Hague", vec![(20, 29)]),
            },
            y_inter: 1,
            y_tra1: 1,
            y_tra2: 1,
            split: None,
        }
    }

    #[test]
    fn decompose_worked_example() {
        let ex = worked_example();
        let (t1, t2) = decompose(&ex);
        let tuple = |t: &TrajectoryTriple| {
            (t.person.surface.clone(), t.time.surface.clone(), t.location.surface.clone())
        };
        assert_eq!(tuple(&t1), ("Berg".into(), "1950".into(), "The Hague".into()));
        assert_eq!(tuple(&t2), ("Niemans".into(), "1950".into(), "The Hague".into()));
        assert_eq!(t1.person.role, Role::Person);
        t1.validate().unwrap();
        t2.validate().unwrap();
        assert_eq!(decompose(&ex), decompose(&parse_labeled_line(&labeled_to_line(&ex)).unwrap()));
    }

    #[test]
    fn entailment_violation_is_rejected() {
        let mut ex = worked_example();
        ex.y_tra2 = 0;
        assert!(ex.validate().is_err());
        ex.y_inter = 0;
        assert!(ex.validate().is_ok());
        ex.y_tra1 = 2;
        assert!(ex.validate().is_err());
    }

    /// Floor/remainder allocation, written independently of `split_sizes`.
    fn allocation_oracle(n: usize, ratios: [f64; 3]) -> [usize; 3] {
        let mut parts: Vec<(usize, f64, usize)> = ratios
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let x = r * n as f64;
                (i, x - x.floor(), x.floor() as usize)
            })
            .collect();
        let rem = n - parts.iter().map(|p| p.2).sum::<usize>();
        let mut by_frac = parts.clone();
        by_frac.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for p in by_frac.iter().take(rem) {
            parts[p.0].2 += 1;
        }
        [parts[0].2, parts[1].2, parts[2].2]
    }

    #[test]
    fn full_dataset_split_sizes() {
        let sizes = split_sizes(4507, [0.7, 0.1, 0.2]).unwrap();
        assert_eq!(sizes, allocation_oracle(4507, [0.7, 0.1, 0.2]));
        assert_eq!(sizes, [3155, 451, 901]);
        assert_eq!(sizes.iter().sum::<usize>(), 4507);
        for (got, reference) in sizes.iter().zip([3155usize, 450, 902]) {
            assert!(got.abs_diff(reference) <= 1);
        }
        for (got, r) in sizes.iter().zip([0.7, 0.1, 0.2]) {
            assert!((*got as f64 - r * 4507.0).abs() <= 1.0);
        }
    }

    #[test]
    fn bad_ratios_are_rejected() {
        assert!(split_sizes(10, [0.7, 0.1, 0.1]).is_err());
        assert!(split_sizes(10, [1.2, -0.1, -0.1]).is_err());
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let base = worked_example();
        let examples: Vec<_> = (0..97).map(|_| base.clone()).collect();
        let a = split_dataset(&examples, [0.7, 0.1, 0.2], 7, false).unwrap();
        let b = split_dataset(&examples, [0.7, 0.1, 0.2], 7, false).unwrap();
        assert_eq!(a, b);
        let count = |s| a.iter().filter(|x| **x == s).count();
        assert_eq!([count(Split::Train), count(Split::Val), count(Split::Test)], split_sizes(97, [0.7, 0.1, 0.2]).unwrap());
        let c = split_dataset(&examples, [0.7, 0.1, 0.2], 8, false).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn all_train_ratio() {
        let examples: Vec<_> = (0..13).map(|_| worked_example()).collect();
        let a = split_dataset(&examples, [1.0, 0.0, 0.0], 1, false).unwrap();
        assert!(a.iter().all(|s| *s == Split::Train));
    }

    #[test]
    fn grouped_split_keeps_documents_together() {
        let mut examples = Vec::new();
        for d in 0..30 {
            for _ in 0..(d % 4 + 1) {
                let mut ex = worked_example();
                let mut seg = (*ex.candidate.segment).clone();
                seg.doc_id = format!("doc{d}");
                ex.candidate.segment = Arc::new(seg);
                examples.push(ex);
            }
        }
        let a = split_dataset(&examples, [0.7, 0.1, 0.2], 3, true).unwrap();
        let mut seen: BTreeMap<String, HashSet<Split>> = BTreeMap::new();
        for (ex, s) in examples.iter().zip(&a) {
            seen.entry(ex.candidate.segment.doc_id.clone()).or_default().insert(*s);
        }
        assert!(seen.values().all(|s| s.len() == 1));
    }

    #[test]
    fn summary_of_empty_set_is_zero() {
        assert_eq!(summarize(&[]), DatasetSummary::default());
    }

    #[test]
    fn summary_counts_trajectories_twice() {
        let mut neg = worked_example();
        neg.y_inter = 0;
        neg.y_tra2 = 0;
        neg.split = Some(Split::Val);
        let s = summarize(&[worked_example(), neg]);
        assert_eq!(s.interaction, PolarityCounts { positive: 1, negative: 1, total: 2 });
        assert_eq!(s.trajectory, PolarityCounts { positive: 3, negative: 1, total: 4 });
        assert_eq!(s.trajectory.total, 2 * s.interaction.total);
        assert_eq!((s.val, s.unassigned), (1, 1));
    }
}
