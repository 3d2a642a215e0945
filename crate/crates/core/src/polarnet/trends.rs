use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::{build_graph, AttrTable, GraphOptions, Party};
use super::modularity::SignedMode;
use super::null::{standardized_modularity, ModularityReport};
use crate::error::{Error, Result};
use crate::extract::{InteractionRecord, InteractionType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bin {
    Year,
    Decade,
}

impl Bin {
    pub fn start(self, year: i32) -> i32 {
        match self {
            Bin::Year => year,
            Bin::Decade => year.div_euclid(10) * 10,
        }
    }

    pub fn width(self) -> i32 {
        match self {
            Bin::Year => 1,
            Bin::Decade => 10,
        }
    }
}

impl std::str::FromStr for Bin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "year" => Ok(Bin::Year),
            "decade" => Ok(Bin::Decade),
            other => Err(Error::Config(format!("unknown bin `{other}`"))),
        }
    }
}

/// Counts and shares for one time bin. Shares are `None` when their
/// denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub bin_start: i32,
    pub total: usize,
    pub inter_party: usize,
    pub inter_share: Option<f64>,
    pub adversarial: usize,
    pub cooperative: usize,
    pub neutral: usize,
    pub adversarial_share: Option<f64>,
    pub cooperative_share: Option<f64>,
    pub neutral_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub bin: Bin,
    pub rows: Vec<TrendRow>,
    /// Records lacking a year, a type or a party for either person.
    pub excluded: usize,
}

/// Party pair, year and type of a record when all are known.
fn classify<'a>(r: &'a InteractionRecord, attrs: &AttrTable) -> Option<(Party, Party, Option<i32>, InteractionType)> {
    let p1 = attrs.get(&r.person1.surface)?.party;
    let p2 = attrs.get(&r.person2.surface)?.party;
    Some((p1, p2, r.year, r.interaction_type?))
}

fn share(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

/// Per-bin inter-party share of all interactions, and type shares among
/// inter-party interactions. Bins cover the observed year range without
/// gaps; empty bins carry `None` shares.
pub fn trend_ratios(records: &[InteractionRecord], attrs: &AttrTable, bin: Bin) -> TrendSeries {
    let mut counts: BTreeMap<i32, [usize; 5]> = BTreeMap::new();
    let mut excluded = 0;
    for r in records {
        let Some((p1, p2, Some(year), ty)) = classify(r, attrs) else {
            excluded += 1;
            continue;
        };
        let c = counts.entry(bin.start(year)).or_default();
        c[0] += 1;
        if p1 != p2 {
            c[1] += 1;
            c[2 + ty as usize] += 1;
        }
    }
    let mut rows = Vec::new();
    if let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) {
        let mut b = first;
        while b <= last {
            let [total, inter, adv, coop, neu] = counts.get(&b).copied().unwrap_or_default();
            rows.push(TrendRow {
                bin_start: b,
                total,
                inter_party: inter,
                inter_share: share(inter, total),
                adversarial: adv,
                cooperative: coop,
                neutral: neu,
                adversarial_share: share(adv, inter),
                cooperative_share: share(coop, inter),
                neutral_share: share(neu, inter),
            });
            b += bin.width();
        }
    }
    TrendSeries { bin, rows, excluded }
}

/// Interaction type totals split by intra- and inter-party pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTotals {
    pub intra: BTreeMap<InteractionType, usize>,
    pub inter: BTreeMap<InteractionType, usize>,
}

pub fn type_totals(records: &[InteractionRecord], attrs: &AttrTable) -> TypeTotals {
    let mut t = TypeTotals::default();
    for ty in InteractionType::ALL {
        t.intra.insert(ty, 0);
        t.inter.insert(ty, 0);
    }
    for (p1, p2, _, ty) in records.iter().filter_map(|r| classify(r, attrs)) {
        let side = if p1 == p2 { &mut t.intra } else { &mut t.inter };
        *side.get_mut(&ty).expect("all types present") += 1;
    }
    t
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub first_year: i32,
    pub last_year: i32,
    /// Each point includes every earlier year instead of one year only.
    pub cumulative: bool,
    pub samples: usize,
    pub master_seed: u64,
    pub mode: SignedMode,
    pub drop_zero_edges: bool,
    /// Restrict to interactions located in this state.
    pub state: Option<String>,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            first_year: 1960,
            last_year: 2024,
            cumulative: false,
            samples: 1000,
            master_seed: 0,
            mode: SignedMode::Verbatim,
            drop_zero_edges: false,
            state: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub year: i32,
    pub nodes: usize,
    pub edges: usize,
    pub report: Option<ModularityReport>,
    /// Why `report` is missing.
    pub note: Option<String>,
}

/// Standardised modularity of the party partition for each year's network.
/// Years whose network is too small or degenerate get a note instead of a
/// report. Every year uses the same master seed.
pub fn modularity_series(records: &[InteractionRecord], attrs: &AttrTable, opts: &SeriesOptions) -> Vec<SeriesPoint> {
    (opts.first_year..=opts.last_year)
        .map(|year| {
            let from = if opts.cumulative { i32::MIN } else { year };
            let (g, _) = build_graph(
                records,
                attrs,
                &GraphOptions {
                    window: Some((from, year)),
                    state: opts.state.clone(),
                    drop_zero_edges: opts.drop_zero_edges,
                },
            );
            let result = if g.edge_count() < 2 {
                Err(Error::InvalidInput("fewer than 2 edges".into()))
            } else {
                standardized_modularity(&g, &g.party_partition(), opts.samples, opts.master_seed, opts.mode)
            };
            let (report, note) = match result {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SeriesPoint {
                year,
                nodes: g.node_count(),
                edges: g.edge_count(),
                report,
                note,
            }
        })
        .collect()
}
