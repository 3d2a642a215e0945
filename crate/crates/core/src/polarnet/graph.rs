use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{GeoPoint, InteractionRecord};
use crate::ingest::normalize_surface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Republican,
    Democrat,
}

impl Party {
    pub fn parse(s: &str) -> Option<Party> {
        match s.trim().to_ascii_lowercase().as_str() {
            "republican" | "r" | "rep" | "gop" => Some(Party::Republican),
            "democrat" | "democratic" | "d" | "dem" => Some(Party::Democrat),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Republican => "Republican",
            Party::Democrat => "Democrat",
        }
    }

    /// Community index in the party partition.
    pub fn index(self) -> usize {
        match self {
            Party::Republican => 0,
            Party::Democrat => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAttrs {
    pub person: String,
    pub party: Party,
    pub state: Option<String>,
    pub birthplace: Option<GeoPoint>,
    pub profession: Option<String>,
}

/// Person attributes keyed by normalised name.
#[derive(Debug, Clone, Default)]
pub struct AttrTable {
    people: BTreeMap<String, NodeAttrs>,
}

#[derive(Deserialize)]
struct AttrRow {
    person: String,
    party: String,
    #[serde(default)]
    state: Option<String>,
    #[serde(default)]
    birth_lat: Option<f64>,
    #[serde(default)]
    birth_lon: Option<f64>,
    #[serde(default)]
    profession: Option<String>,
}

impl AttrTable {
    /// Reads a CSV with header
    /// `person,party[,state,birth_lat,birth_lon,profession]`. Rows whose
    /// party is neither Republican nor Democrat are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader(r: impl std::io::Read) -> Result<Self> {
        let mut table = AttrTable::default();
        for (i, row) in csv::Reader::from_reader(r).deserialize::<AttrRow>().enumerate() {
            let row = row.map_err(|e| Error::InvalidRecord {
                line: i + 2,
                message: e.to_string(),
            })?;
            let Some(party) = Party::parse(&row.party) else {
                log::warn!("attrs line {}: party `{}` not modelled, skipped", i + 2, row.party);
                continue;
            };
            let birthplace = match (row.birth_lat, row.birth_lon) {
                (Some(lat), Some(lon)) => Some(GeoPoint { lat, lon }),
                _ => None,
            };
            table.insert(NodeAttrs {
                person: row.person,
                party,
                state: row.state.filter(|s| !s.is_empty()),
                birthplace,
                profession: row.profession.filter(|s| !s.is_empty()),
            });
        }
        Ok(table)
    }

    pub fn insert(&mut self, attrs: NodeAttrs) {
        self.people.insert(normalize_surface(&attrs.person), attrs);
    }

    pub fn get(&self, person: &str) -> Option<&NodeAttrs> {
        self.people.get(&normalize_surface(person))
    }

    pub fn len(&self) -> usize {
        self.people.len()
    }

    pub fn is_empty(&self) -> bool {
        self.people.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Node indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    /// Ids of the records whose weights were summed into this edge.
    pub provenance: Vec<String>,
}

/// Undirected weighted signed graph without self-loops or parallel edges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignedGraph {
    pub nodes: Vec<NodeAttrs>,
    pub edges: Vec<Edge>,
}

impl SignedGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Unweighted degree per node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for e in &self.edges {
            d[e.a] += 1;
            d[e.b] += 1;
        }
        d
    }

    /// Signed strength (sum of incident weights) per node.
    pub fn strengths(&self) -> Vec<f64> {
        let mut k = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            k[e.a] += e.weight;
            k[e.b] += e.weight;
        }
        k
    }

    /// Community per node: 0 for Republican, 1 for Democrat.
    pub fn party_partition(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.party.index()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Builds a graph from explicit weighted pairs; nodes get placeholder
    /// attributes with party from `parties`. Intended for synthetic graphs.
    pub fn from_edges(parties: &[Party], edges: &[(usize, usize, f64)]) -> Result<Self> {
        let nodes = parties
            .iter()
            .enumerate()
            .map(|(i, &party)| NodeAttrs {
                person: format!("n{i}"),
                party,
                state: None,
                birthplace: None,
                profession: None,
            })
            .collect();
        let mut agg: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(a, b, w) in edges {
            if a == b || a >= parties.len() || b >= parties.len() {
                return Err(Error::InvalidInput(format!("bad edge ({a}, {b})")));
            }
            *agg.entry((a.min(b), a.max(b))).or_default() += w;
        }
        let edges = agg
            .into_iter()
            .map(|((a, b), weight)| Edge {
                a,
                b,
                weight,
                provenance: Vec::new(),
            })
            .collect();
        Ok(SignedGraph { nodes, edges })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    /// Inclusive year range; records without a year are excluded when set.
    pub window: Option<(i32, i32)>,
    /// Keep only records whose location lies in this state.
    pub state: Option<String>,
    /// Remove edges whose summed weight is exactly zero.
    pub drop_zero_edges: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub records_used: usize,
    pub excluded_unknown_party: usize,
    pub excluded_untyped: usize,
    pub excluded_self_pair: usize,
    pub excluded_window: usize,
    pub excluded_state: usize,
    pub dropped_zero_edges: usize,
}

/// Builds the signed interaction network. Each record adds its type weight
/// (Adversarial −2, Cooperative 2, Neutral 1) to the edge between its two
/// people; nodes are the people of the used records, sorted by name.
pub fn build_graph(
    records: &[InteractionRecord],
    attrs: &AttrTable,
    opts: &GraphOptions,
) -> (SignedGraph, BuildReport) {
    let mut report = BuildReport::default();
    let state = opts.state.as_deref().map(normalize_surface);
    let mut pairs: BTreeMap<(String, String), (f64, Vec<String>)> = BTreeMap::new();
    for r in records {
        if let Some((lo, hi)) = opts.window {
            if !r.year.is_some_and(|y| lo <= y && y <= hi) {
                report.excluded_window += 1;
                continue;
            }
        }
        if let Some(s) = &state {
            if r.location.state.as_deref().map(normalize_surface).as_ref() != Some(s) {
                report.excluded_state += 1;
                continue;
            }
        }
        let Some(ty) = r.interaction_type else {
            report.excluded_untyped += 1;
            continue;
        };
        let (p1, p2) = (normalize_surface(&r.person1.surface), normalize_surface(&r.person2.surface));
        if p1 == p2 {
            report.excluded_self_pair += 1;
            continue;
        }
        if attrs.get(&p1).is_none() || attrs.get(&p2).is_none() {
            report.excluded_unknown_party += 1;
            continue;
        }
        report.records_used += 1;
        let key = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        let entry = pairs.entry(key).or_insert((0.0, Vec::new()));
        entry.0 += ty.weight();
        entry.1.push(r.id.clone());
    }
    let people: BTreeSet<&String> = pairs.keys().flat_map(|(a, b)| [a, b]).collect();
    let index: BTreeMap<&String, usize> = people.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let nodes = people
        .iter()
        .map(|p| attrs.get(p).expect("checked above").clone())
        .collect();
    let mut edges = Vec::with_capacity(pairs.len());
    for ((a, b), (weight, provenance)) in &pairs {
        if opts.drop_zero_edges && *weight == 0.0 {
            report.dropped_zero_edges += 1;
            continue;
        }
        edges.push(Edge {
            a: index[a],
            b: index[b],
            weight: *weight,
            provenance: provenance.clone(),
        });
    }
    (SignedGraph { nodes, edges }, report)
}
