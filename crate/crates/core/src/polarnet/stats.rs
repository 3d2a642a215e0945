use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::SignedGraph;

pub const DEFAULT_K_MIN: usize = 2;
pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    /// `(degree, node count)` pairs in increasing degree.
    pub degree_histogram: Vec<(usize, usize)>,
    /// Global clustering coefficient of the unweighted skeleton.
    pub clustering: f64,
    pub k_min: usize,
    /// Approximate discrete estimate `1 + n / Σ ln(k / (k_min − ½))`.
    pub alpha: Option<f64>,
    /// Exact discrete maximum-likelihood estimate.
    pub alpha_mle: Option<f64>,
    pub pagerank: Vec<(String, f64)>,
}

pub fn graph_stats(g: &SignedGraph, k_min: usize) -> GraphStats {
    let degrees = g.degrees();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in &degrees {
        *hist.entry(d).or_default() += 1;
    }
    let pr = pagerank(g, PAGERANK_DAMPING, PAGERANK_TOLERANCE);
    GraphStats {
        nodes: g.node_count(),
        edges: g.edge_count(),
        degree_histogram: hist.into_iter().collect(),
        clustering: transitivity(g),
        k_min,
        alpha: power_law_alpha(&degrees, k_min),
        alpha_mle: power_law_alpha_mle(&degrees, k_min),
        pagerank: g.nodes.iter().map(|n| n.person.clone()).zip(pr).collect(),
    }
}

/// `3 × triangles / connected triples`; 0 when there are no triples.
pub fn transitivity(g: &SignedGraph) -> f64 {
    let n = g.node_count();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for e in &g.edges {
        adj[e.a].insert(e.b);
        adj[e.b].insert(e.a);
    }
    let mut closed = 0usize; // each triangle counted 3 times, once per apex
    let mut triples = 0usize;
    for nb in &adj {
        let d = nb.len();
        triples += d * d.saturating_sub(1) / 2;
        let nb: Vec<usize> = nb.iter().copied().collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if adj[a].contains(&b) {
                    closed += 1;
                }
            }
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

/// PageRank on absolute edge weights. Nodes without weighted edges spread
/// their mass uniformly.
pub fn pagerank(g: &SignedGraph, damping: f64, tol: f64) -> Vec<f64> {
    let n = g.node_count();
    if n == 0 {
        return Vec::new();
    }
    let mut out_w = vec![0.0; n];
    for e in &g.edges {
        out_w[e.a] += e.weight.abs();
        out_w[e.b] += e.weight.abs();
    }
    let mut pr = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let dangling: f64 = (0..n).filter(|&i| out_w[i] == 0.0).map(|i| pr[i]).sum();
        let base = (1.0 - damping) / n as f64 + damping * dangling / n as f64;
        let mut next = vec![base; n];
        for e in &g.edges {
            let w = e.weight.abs();
            if w == 0.0 {
                continue;
            }
            next[e.b] += damping * pr[e.a] * w / out_w[e.a];
            next[e.a] += damping * pr[e.b] * w / out_w[e.b];
        }
        let delta: f64 = next.iter().zip(&pr).map(|(a, b)| (a - b).abs()).sum();
        pr = next;
        if delta < tol {
            break;
        }
    }
    pr
}

fn tail(degrees: &[usize], k_min: usize) -> Vec<f64> {
    degrees.iter().filter(|&&k| k >= k_min && k > 0).map(|&k| k as f64).collect()
}

/// `α = 1 + n (Σ ln(k_i / (k_min − ½)))⁻¹` over degrees `≥ k_min`.
pub fn power_law_alpha(degrees: &[usize], k_min: usize) -> Option<f64> {
    let ks = tail(degrees, k_min.max(1));
    if ks.is_empty() {
        return None;
    }
    let shift = k_min.max(1) as f64 - 0.5;
    let s: f64 = ks.iter().map(|k| (k / shift).ln()).sum();
    (s > 0.0).then(|| 1.0 + ks.len() as f64 / s)
}

/// Hurwitz zeta `ζ(s, q) = Σ_{k≥0} (k + q)^−s` for `s > 1`, `q > 0`.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    const N: usize = 20;
    // Bernoulli numbers B2..B12
    const B: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let mut sum = 0.0;
    for k in 0..N {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // Euler–Maclaurin tail
    let mut fact = 1.0; // (2j)!
    let mut rising = s; // s (s+1) ... (s+2j-2)
    let mut pow = a.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        let two_j = 2 * (j + 1);
        fact *= (two_j - 1) as f64 * two_j as f64;
        sum += b / fact * rising * pow;
        rising *= (s + two_j as f64 - 1.0) * (s + two_j as f64);
        pow /= a * a;
    }
    sum
}

/// Exact discrete maximum-likelihood α for `P(k) = k^−α / ζ(α, k_min)`,
/// found by golden-section search on `(1, 10]`.
pub fn power_law_alpha_mle(degrees: &[usize], k_min: usize) -> Option<f64> {
    let k_min = k_min.max(1);
    let ks = tail(degrees, k_min);
    if ks.is_empty() || ks.iter().all(|&k| k == k_min as f64) {
        return None;
    }
    let n = ks.len() as f64;
    let s: f64 = ks.iter().map(|k| k.ln()).sum();
    let nll = |a: f64| a * s + n * hurwitz_zeta(a, k_min as f64).ln();
    let (mut lo, mut hi) = (1.0 + 1e-6, 10.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (nll(x1), nll(x2));
    while hi - lo > 1e-9 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = nll(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = nll(x2);
        }
    }
    Some((lo + hi) / 2.0)
}

/// Continuous power law with lower bound `k_min − ½`, rounded to the
/// nearest integer.
pub fn sample_power_law_rounded(rng: &mut impl Rng, n: usize, alpha: f64, k_min: usize) -> Vec<usize> {
    let x0 = k_min as f64 - 0.5;
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let x = x0 * (1.0 - u).powf(-1.0 / (alpha - 1.0));
            x.round().max(k_min as f64) as usize
        })
        .collect()
}

/// Exact draws from `P(k) ∝ k^−α`, `k ≥ k_min`, by inverting the
/// complementary CDF `ζ(α, k) / ζ(α, k_min)`.
pub fn sample_zeta(rng: &mut impl Rng, n: usize, alpha: f64, k_min: usize) -> Vec<usize> {
    let z0 = hurwitz_zeta(alpha, k_min as f64);
    let ccdf = |k: usize| hurwitz_zeta(alpha, k as f64) / z0;
    let x0 = k_min as f64 - 0.5;
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
            // want ccdf(k) >= u > ccdf(k + 1); start from the continuous guess
            let guess = (x0 * u.powf(-1.0 / (alpha - 1.0))).round();
            let mut k = (guess.min(1e12) as usize).max(k_min);
            while k > k_min && ccdf(k) < u {
                k -= 1;
            }
            while ccdf(k + 1) >= u {
                k += 1;
            }
            k
        })
        .collect()
}
