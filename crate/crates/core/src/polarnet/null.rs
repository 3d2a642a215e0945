use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Edge, SignedGraph};
use super::modularity::{modularity, SignedMode};
use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;

/// Accepted double-edge swaps per edge.
pub const SWAPS_PER_EDGE: usize = 10;
/// Attempts allowed per requested swap before giving up.
const ATTEMPTS_PER_SWAP: usize = 50;

/// Degree- and weight-preserving randomisation with `10·|E|` swaps.
pub fn randomize_null(g: &SignedGraph, seed: u64) -> Result<SignedGraph> {
    randomize_null_with(g, seed, SWAPS_PER_EDGE * g.edge_count()).map(|(g, _)| g)
}

/// Performs up to `swaps` accepted double-edge swaps, keeping the graph
/// simple, then deals the original weight multiset onto the new edges in a
/// uniformly random order. Returns the graph and the accepted swap count.
pub fn randomize_null_with(g: &SignedGraph, seed: u64, swaps: usize) -> Result<(SignedGraph, usize)> {
    if g.edge_count() < 2 {
        return Err(Error::InvalidInput("null model needs at least 2 edges".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ends: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.a, e.b)).collect();
    let mut present: HashSet<(usize, usize)> = ends.iter().copied().collect();
    let m = ends.len();
    let mut accepted = 0;
    let mut attempts = 0;
    let budget = swaps.saturating_mul(ATTEMPTS_PER_SWAP).max(1000);
    while accepted < swaps && attempts < budget {
        attempts += 1;
        let i = rng.gen_range(0..m);
        let j = rng.gen_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = ends[i];
        let (c, d) = if rng.gen_bool(0.5) { ends[j] } else { (ends[j].1, ends[j].0) };
        // (a,b),(c,d) -> (a,d),(c,b)
        if a == d || c == b {
            continue;
        }
        let e1 = (a.min(d), a.max(d));
        let e2 = (c.min(b), c.max(b));
        if e1 == e2 || present.contains(&e1) || present.contains(&e2) {
            continue;
        }
        present.remove(&ends[i]);
        present.remove(&ends[j]);
        present.insert(e1);
        present.insert(e2);
        ends[i] = e1;
        ends[j] = e2;
        accepted += 1;
    }
    if accepted == 0 && swaps > 0 {
        log::warn!("no degree-preserving swap possible; only weights were permuted");
    }
    let mut weights = g.weights();
    weights.shuffle(&mut rng);
    let edges = ends
        .into_iter()
        .zip(weights)
        .map(|((a, b), weight)| Edge {
            a,
            b,
            weight,
            provenance: Vec::new(),
        })
        .collect();
    Ok((
        SignedGraph {
            nodes: g.nodes.clone(),
            edges,
        },
        accepted,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularityReport {
    pub q_original: f64,
    pub samples: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub z: f64,
    pub master_seed: u64,
    pub mode: SignedMode,
}

/// Seed for null sample `i`, a splitmix64 step over the master seed.
pub fn sample_seed(master_seed: u64, i: u64) -> u64 {
    let mut z = master_seed.wrapping_add((i + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Z-score of the observed modularity against `n` randomised networks.
pub fn standardized_modularity(
    g: &SignedGraph,
    partition: &[usize],
    n: usize,
    master_seed: u64,
    mode: SignedMode,
) -> Result<ModularityReport> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 null samples".into()));
    }
    let q_original = modularity(g, partition, mode)?;
    let seeds: Vec<u64> = (0..n as u64).map(|i| sample_seed(master_seed, i)).collect();
    let qs = crate::par::map(&seeds, |&s| randomize_null(g, s).and_then(|r| modularity(&r, partition, mode)))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let mean = pairwise_sum(&qs) / n as f64;
    let sq: Vec<f64> = qs.iter().map(|q| (q - mean) * (q - mean)).collect();
    let std = (pairwise_sum(&sq) / (n - 1) as f64).sqrt();
    if std == 0.0 {
        return Err(Error::DegenerateNull);
    }
    Ok(ModularityReport {
        q_original,
        samples: n,
        mean,
        std,
        z: (q_original - mean) / std,
        master_seed,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarnet::graph::Party;
    use rand::Rng;

    fn sorted<T: PartialOrd + Clone>(mut v: Vec<T>) -> Vec<T> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> SignedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parties: Vec<Party> = (0..n).map(|i| if i % 2 == 0 { Party::Republican } else { Party::Democrat }).collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    edges.push((a, b, [-2.0, 1.0, 2.0][rng.gen_range(0..3)]));
                }
            }
        }
        SignedGraph::from_edges(&parties, &edges).unwrap()
    }

    /// Two positive cliques of `k` joined by a single edge.
    fn barbell(k: usize) -> SignedGraph {
        let parties: Vec<Party> = (0..2 * k).map(|i| if i < k { Party::Republican } else { Party::Democrat }).collect();
        let mut edges = vec![(k - 1, k, 1.0)];
        for base in [0, k] {
            for a in 0..k {
                for b in a + 1..k {
                    edges.push((base + a, base + b, 1.0));
                }
            }
        }
        SignedGraph::from_edges(&parties, &edges).unwrap()
    }

    #[test]
    fn preserves_degrees_and_weights() {
        let g = random_graph(20, 0.3, 1);
        for seed in 0..50 {
            let (r, accepted) = randomize_null_with(&g, seed, 10 * g.edge_count()).unwrap();
            assert!(accepted > 0);
            assert_eq!(r.degrees(), g.degrees());
            assert_eq!(sorted(r.weights()), sorted(g.weights()));
            let set: HashSet<(usize, usize)> = r.edges.iter().map(|e| (e.a, e.b)).collect();
            assert_eq!(set.len(), r.edge_count());
            assert!(r.edges.iter().all(|e| e.a < e.b));
        }
    }

    #[test]
    fn seeds_give_different_edge_sets() {
        let g = random_graph(20, 0.3, 2);
        let edge_set = |r: &SignedGraph| sorted(r.edges.iter().map(|e| (e.a, e.b)).collect::<Vec<_>>());
        let same = (0..100u64)
            .filter(|&i| edge_set(&randomize_null(&g, 2 * i).unwrap()) == edge_set(&randomize_null(&g, 2 * i + 1).unwrap()))
            .count();
        assert!(same <= 1, "{same} identical pairs");
    }

    #[test]
    fn unswappable_graph_only_permutes_weights() {
        // a star has no valid swap
        let parties = [Party::Republican; 4];
        let g = SignedGraph::from_edges(&parties, &[(0, 1, 2.0), (0, 2, -2.0), (0, 3, 1.0)]).unwrap();
        let (r, accepted) = randomize_null_with(&g, 3, 30).unwrap();
        assert_eq!(accepted, 0);
        assert_eq!(sorted(r.edges.iter().map(|e| (e.a, e.b)).collect()), vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(sorted(r.weights()), sorted(g.weights()));
    }

    #[test]
    fn too_few_edges_is_an_error() {
        let g = SignedGraph::from_edges(&[Party::Republican, Party::Democrat], &[(0, 1, 1.0)]).unwrap();
        assert!(randomize_null(&g, 0).is_err());
    }

    #[test]
    fn barbell_is_strongly_modular() {
        let g = barbell(10);
        let r = standardized_modularity(&g, &g.party_partition(), 200, 5, SignedMode::Verbatim).unwrap();
        assert!(r.z > 3.0, "{r:?}");
    }

    #[test]
    fn partition_blind_graph_has_small_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let parties: Vec<Party> = (0..50).map(|i| if i % 2 == 0 { Party::Republican } else { Party::Democrat }).collect();
        let mut edges = Vec::new();
        for a in 0..50 {
            for b in a + 1..50 {
                if rng.gen_bool(0.1) {
                    edges.push((a, b, 1.0));
                }
            }
        }
        let g = SignedGraph::from_edges(&parties, &edges).unwrap();
        let r = standardized_modularity(&g, &g.party_partition(), 300, 4, SignedMode::Verbatim).unwrap();
        assert!(r.z.abs() < 4.0, "{r:?}");
    }

    #[test]
    fn report_is_deterministic() {
        let g = random_graph(15, 0.4, 3);
        let p = g.party_partition();
        let a = standardized_modularity(&g, &p, 50, 42, SignedMode::Verbatim).unwrap();
        let b = standardized_modularity(&g, &p, 50, 42, SignedMode::Verbatim).unwrap();
        assert_eq!(a.z.to_bits(), b.z.to_bits());
        assert_eq!(a, b);
        assert_eq!(a.samples, 50);
        assert_eq!(a.z, (a.q_original - a.mean) / a.std);
    }
}
