//! Central finite differences over named parameters, used to validate the
//! hand-written backward passes.

use std::collections::BTreeMap;

use crate::params::Params;

/// `(f(θ+h·e_k) − f(θ−h·e_k)) / 2h` for every entry of every tensor whose
/// name passes `filter`.
pub fn finite_difference<P, F>(
    params: &P,
    filter: impl Fn(&str) -> bool,
    h: f64,
    f: F,
) -> BTreeMap<String, Vec<f64>>
where
    P: Params + Clone,
    F: Fn(&P) -> f64,
{
    let mut shapes: Vec<(String, usize)> = Vec::new();
    params.visit("", &mut |name, t| {
        if filter(name) {
            shapes.push((name.to_string(), t.len()));
        }
    });
    let mut out = BTreeMap::new();
    for (name, len) in shapes {
        let mut g = vec![0.0; len];
        for (k, gk) in g.iter_mut().enumerate() {
            let eval = |delta: f64| {
                let mut p = params.clone();
                p.visit_mut("", &mut |n, t| {
                    if n == name {
                        t[k] += delta;
                    }
                });
                f(&p)
            };
            *gk = (eval(h) - eval(-h)) / (2.0 * h);
        }
        out.insert(name, g);
    }
    out
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`; zero when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-300 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
