use serde::{Deserialize, Serialize};

use super::graph::SignedGraph;
use crate::error::{Error, Result};

/// How negative weights enter modularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignedMode {
    /// Newman's weighted formula applied to the signed weights as they are.
    #[default]
    Verbatim,
    /// Positive and negative parts get separate null terms (Gómez et al.).
    Gomez,
}

impl std::str::FromStr for SignedMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(SignedMode::Verbatim),
            "gomez" => Ok(SignedMode::Gomez),
            other => Err(Error::Config(format!("unknown signed mode `{other}`"))),
        }
    }
}

fn check_partition(g: &SignedGraph, partition: &[usize]) -> Result<usize> {
    if partition.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            actual: partition.len(),
        });
    }
    Ok(partition.iter().max().map_or(0, |&c| c + 1))
}

/// Σ_ij A_ij δ(c_i, c_j) and per-community strength totals for the weights
/// selected by `pick`.
fn tallies(g: &SignedGraph, partition: &[usize], communities: usize, pick: impl Fn(f64) -> f64) -> (f64, f64, Vec<f64>) {
    let mut k = vec![0.0; g.node_count()];
    let mut k_in = vec![0.0; g.node_count()];
    for e in &g.edges {
        let w = pick(e.weight);
        k[e.a] += w;
        k[e.b] += w;
        if partition[e.a] == partition[e.b] {
            k_in[e.a] += w;
            k_in[e.b] += w;
        }
    }
    let mut totals = vec![0.0; communities];
    for (i, &c) in partition.iter().enumerate() {
        totals[c] += k[i];
    }
    let two_m: f64 = k.iter().sum();
    let inside: f64 = k_in.iter().sum();
    (two_m, inside, totals)
}

/// Weighted modularity of `partition` (community index per node).
///
/// Verbatim mode: `Q = (1/2m) Σ_ij (A_ij − k_i k_j / 2m) δ(c_i, c_j)` with
/// `m` the total signed weight and `k` the signed strength.
pub fn modularity(g: &SignedGraph, partition: &[usize], mode: SignedMode) -> Result<f64> {
    let communities = check_partition(g, partition)?;
    match mode {
        SignedMode::Verbatim => {
            let (two_m, inside, totals) = tallies(g, partition, communities, |w| w);
            if two_m == 0.0 {
                return Err(Error::DegenerateGraph);
            }
            let expected: f64 = totals.iter().map(|t| (t / two_m) * (t / two_m)).sum();
            Ok(inside / two_m - expected)
        }
        SignedMode::Gomez => {
            let (two_pos, in_pos, tot_pos) = tallies(g, partition, communities, |w| w.max(0.0));
            let (two_neg, in_neg, tot_neg) = tallies(g, partition, communities, |w| (-w).max(0.0));
            let total = two_pos + two_neg;
            if total == 0.0 {
                return Err(Error::DegenerateGraph);
            }
            let null = |two: f64, tot: &[f64]| {
                if two == 0.0 {
                    0.0
                } else {
                    tot.iter().map(|t| t * t).sum::<f64>() / two
                }
            };
            Ok(((in_pos - in_neg) - (null(two_pos, &tot_pos) - null(two_neg, &tot_neg))) / total)
        }
    }
}
