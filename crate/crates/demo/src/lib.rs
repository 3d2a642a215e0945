//! Browser bindings for a few of the analysis operations. Each export has a
//! plain Rust twin returning `Result<_, String>` so the logic is testable off
//! the wasm target.

use std::collections::BTreeMap;

use falcon_core::encoder::{aggregate_occurrences, AttentionNorm};
use falcon_core::extract::GeoPoint;
use falcon_core::polarnet::{interaction_distance, modularity, standardized_modularity, Party, SignedGraph, SignedMode};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Polarization {
    pub nodes: usize,
    pub edges: usize,
    pub q: f64,
    pub mean: f64,
    pub std: f64,
    pub z: f64,
}

/// Parses `source,source_party,target,target_party,weight` lines. Blank lines,
/// `#` comments and a `source,...` header are skipped.
pub fn parse_edge_list(text: &str) -> Result<SignedGraph, String> {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut parties = Vec::new();
    let mut edges = Vec::new();
    let mut node = |name: &str, party: &str, line: usize| -> Result<usize, String> {
        let party = Party::parse(party).ok_or_else(|| format!("line {line}: unknown party {party:?}"))?;
        let key = name.trim().to_lowercase();
        if let Some(&i) = index.get(&key) {
            if parties[i] != party {
                return Err(format!("line {line}: {name} listed with two parties"));
            }
            return Ok(i);
        }
        index.insert(key, parties.len());
        parties.push(party);
        Ok(parties.len() - 1)
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("source,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(format!("line {}: expected 5 fields, got {}", i + 1, f.len()));
        }
        let w: f64 = f[4].parse().map_err(|_| format!("line {}: bad weight {:?}", i + 1, f[4]))?;
        let a = node(f[0], f[1], i + 1)?;
        let b = node(f[2], f[3], i + 1)?;
        edges.push((a, b, w));
    }
    SignedGraph::from_edges(&parties, &edges).map_err(|e| e.to_string())
}

pub fn polarization(edge_list: &str, samples: usize, seed: u64, mode: &str) -> Result<Polarization, String> {
    let mode: SignedMode = mode.parse().map_err(|e: falcon_core::Error| e.to_string())?;
    let g = parse_edge_list(edge_list)?;
    let partition = g.party_partition();
    let r = standardized_modularity(&g, &partition, samples, seed, mode).map_err(|e| e.to_string())?;
    Ok(Polarization {
        nodes: g.node_count(),
        edges: g.edge_count(),
        q: r.q_original,
        mean: r.mean,
        std: r.std,
        z: r.z,
    })
}

/// Modularity of the party split alone, without the null model.
pub fn party_modularity(edge_list: &str, mode: &str) -> Result<f64, String> {
    let mode: SignedMode = mode.parse().map_err(|e: falcon_core::Error| e.to_string())?;
    let g = parse_edge_list(edge_list)?;
    modularity(&g, &g.party_partition(), mode).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
pub struct AttentionInput {
    pub occurrences: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub norm: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct AttentionOutput {
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub aggregated: Vec<f64>,
}

pub fn occurrence_attention(input: &AttentionInput) -> Result<AttentionOutput, String> {
    let norm = match input.norm.as_deref().unwrap_or("softmax") {
        "softmax" => AttentionNorm::Softmax,
        "literal" => AttentionNorm::Literal,
        other => return Err(format!("unknown norm {other:?}")),
    };
    let f = aggregate_occurrences(input.occurrences.clone(), &input.w, input.b, norm).map_err(|e| e.to_string())?;
    Ok(AttentionOutput {
        scores: f.scores,
        weights: f.weights,
        aggregated: f.aggregated,
    })
}

fn js_err(e: impl ToString) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Standardized modularity of the party partition as a JSON string.
#[wasm_bindgen(js_name = polarization)]
pub fn polarization_js(edge_list: &str, samples: u32, seed: u32, mode: &str) -> Result<String, JsValue> {
    let r = polarization(edge_list, samples as usize, seed as u64, mode).map_err(js_err)?;
    serde_json::to_string(&r).map_err(js_err)
}

#[wasm_bindgen(js_name = partyModularity)]
pub fn party_modularity_js(edge_list: &str, mode: &str) -> Result<f64, JsValue> {
    party_modularity(edge_list, mode).map_err(js_err)
}

/// Takes `{occurrences, w, b, norm}` as JSON and returns scores, weights and
/// the aggregated vector as JSON.
#[wasm_bindgen(js_name = occurrenceAttention)]
pub fn occurrence_attention_js(input: &str) -> Result<String, JsValue> {
    let input: AttentionInput = serde_json::from_str(input).map_err(js_err)?;
    let out = occurrence_attention(&input).map_err(js_err)?;
    serde_json::to_string(&out).map_err(js_err)
}

/// Kilometres from the interaction location to both birthplaces, summed.
#[wasm_bindgen(js_name = interactionDistance)]
pub fn interaction_distance_js(lat: f64, lon: f64, lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let p = |lat, lon| Some(GeoPoint { lat, lon });
    interaction_distance(p(lat, lon), p(lat1, lon1), p(lat2, lon2)).unwrap_or(f64::NAN)
}
