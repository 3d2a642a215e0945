//! Named parameter traversal shared by optimisation, checkpoints and
//! checksums.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A bundle of named `f64` tensors. Visit order must be stable.
pub trait Params {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64]));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64]));
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}/{name}")
    }
}

/// A copy of `p` with every entry set to zero, used as a gradient buffer.
pub fn zeroed<P: Params + Clone>(p: &P) -> P {
    let mut z = p.clone();
    z.visit_mut("", &mut |_, t| t.fill(0.0));
    z
}

pub fn count<P: Params + ?Sized>(p: &P) -> usize {
    let mut n = 0;
    p.visit("", &mut |_, t| n += t.len());
    n
}

/// SHA-256 over names and exact bit patterns.
pub fn checksum<P: Params + ?Sized>(p: &P) -> String {
    let mut h = Sha256::new();
    p.visit("", &mut |name, t| {
        h.update(name.as_bytes());
        h.update((t.len() as u64).to_le_bytes());
        for v in t {
            h.update(v.to_bits().to_le_bytes());
        }
    });
    hex::encode(h.finalize())
}

/// Parameters as base64 little-endian `f64` blobs keyed by name.
pub fn to_blobs<P: Params + ?Sized>(p: &P) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    p.visit("", &mut |name, t| {
        let bytes: Vec<u8> = t.iter().flat_map(|v| v.to_le_bytes()).collect();
        out.insert(name.to_string(), STANDARD.encode(bytes));
    });
    out
}

/// Restores parameters written by [`to_blobs`]; names and lengths must match.
pub fn from_blobs<P: Params + ?Sized>(p: &mut P, blobs: &BTreeMap<String, String>) -> Result<()> {
    let mut err: Option<Error> = None;
    let mut seen = 0;
    p.visit_mut("", &mut |name, t| {
        if err.is_some() {
            return;
        }
        let Some(b64) = blobs.get(name) else {
            err = Some(Error::CheckpointMismatch(format!("missing parameter `{name}`")));
            return;
        };
        let bytes = match STANDARD.decode(b64) {
            Ok(b) => b,
            Err(e) => {
                err = Some(Error::CheckpointMismatch(format!("parameter `{name}`: {e}")));
                return;
            }
        };
        if bytes.len() != t.len() * 8 {
            err = Some(Error::CheckpointMismatch(format!(
                "parameter `{name}` has {} values, expected {}",
                bytes.len() / 8,
                t.len()
            )));
            return;
        }
        for (v, chunk) in t.iter_mut().zip(bytes.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        seen += 1;
    });
    if let Some(e) = err {
        return Err(e);
    }
    if seen != blobs.len() {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint has {} tensors, model expects {seen}",
            blobs.len()
        )));
    }
    Ok(())
}

/// Flattened values keyed by name.
pub fn to_map<P: Params + ?Sized>(p: &P) -> BTreeMap<String, Vec<f64>> {
    let mut out = BTreeMap::new();
    p.visit("", &mut |name, t| {
        out.insert(name.to_string(), t.to_vec());
    });
    out
}
