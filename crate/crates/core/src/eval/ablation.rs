use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricReport};
use crate::dataset::{LabeledExample, LabeledTriple, Split};
use crate::error::Result;
use crate::train::{pretrain_from_triples, train_labeled, Checkpoint, FusionMode, TrainConfig};

/// A named configuration in the ablation table.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: &'static str,
    pub config: TrainConfig,
}

/// The six ablation rows derived from `base`: the full model, without
/// feature transfer, without the auxiliary task, without both, with unit
/// task weights, and with concatenation in place of gated cross-attention.
pub fn ablation_variants(base: &TrainConfig) -> Vec<Variant> {
    let with = |name, f: &dyn Fn(&mut TrainConfig)| {
        let mut config = base.clone();
        f(&mut config);
        Variant { name, config }
    };
    vec![
        with("FALCON", &|c| {
            c.ft = true;
            c.mt = true;
            c.aw = true;
            c.fusion_mode = FusionMode::Attention;
        }),
        with("w/o ft", &|c| {
            c.ft = false;
            c.mt = true;
            c.aw = true;
        }),
        with("w/o mt", &|c| {
            c.ft = true;
            c.mt = false;
            c.fusion_mode = FusionMode::Attention;
        }),
        with("w/o ft&mt", &|c| {
            c.ft = false;
            c.mt = false;
        }),
        with("w/o aw", &|c| {
            c.ft = true;
            c.mt = true;
            c.aw = false;
            c.fusion_mode = FusionMode::Attention;
        }),
        with("concat", &|c| {
            c.ft = true;
            c.mt = true;
            c.aw = true;
            c.fusion_mode = FusionMode::Concat;
        }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub best_epoch: Option<usize>,
    pub val: Option<MetricReport>,
    pub test: MetricReport,
}

/// Scores labelled examples with a checkpoint. Candidates the encoder cannot
/// take count as negative predictions and are logged.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, examples: &[LabeledExample], dataset: &str) -> Result<MetricReport> {
    let cands: Vec<_> = examples.iter().map(|e| e.candidate.clone()).collect();
    let preds = ckpt.predict(&cands, ckpt.config.threshold)?;
    let skipped = preds.iter().filter(|p| p.label.is_none()).count();
    if skipped > 0 {
        log::warn!("{dataset}: {skipped} skipped candidates scored as negative");
    }
    let labels: Vec<u8> = preds.iter().map(|p| u8::from(p.label == Some(true))).collect();
    let gold: Vec<u8> = examples.iter().map(|e| e.y_inter).collect();
    Ok(compute_metrics(&labels, &gold)?.with_labels(dataset, ckpt.config.hash()))
}

/// Metrics on an external labelled corpus, using every example regardless
/// of split tag. No retraining.
pub fn evaluate_transfer(ckpt: &Checkpoint, external: &[LabeledExample], dataset: &str) -> Result<MetricReport> {
    evaluate_checkpoint(ckpt, external, dataset)
}

/// Metrics on the examples tagged with `split`.
pub fn evaluate_split(ckpt: &Checkpoint, examples: &[LabeledExample], split: Split, dataset: &str) -> Result<MetricReport> {
    let picked: Vec<LabeledExample> = examples.iter().filter(|e| e.split == Some(split)).cloned().collect();
    evaluate_checkpoint(ckpt, &picked, dataset)
}

/// Trains every variant for every seed and reports test metrics. The
/// trajectory extractor is pretrained once per seed and shared by the
/// variants that use it. Rows run in parallel; output order is variant
/// order, then seed order.
pub fn run_ablations(
    examples: &[LabeledExample],
    triples: &[LabeledTriple],
    base: &TrainConfig,
    seeds: &[u64],
) -> Result<Vec<AblationRow>> {
    let variants = ablation_variants(base);
    let extractors = seeds
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..base.clone() };
            pretrain_from_triples(triples, &cfg).map(|(e, _)| e)
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..seeds.len()).map(move |s| (v, s)))
        .collect();
    crate::par::map(&jobs, |&(v, s)| {
        let variant = &variants[v];
        let cfg = TrainConfig {
            seed: seeds[s],
            ..variant.config.clone()
        };
        let extractor = cfg.ft.then(|| extractors[s].clone());
        let ckpt = train_labeled(examples, extractor, &cfg)?;
        let test = evaluate_split(&ckpt, examples, Split::Test, "test")?;
        let val = ckpt.history.iter().find(|h| Some(h.epoch) == ckpt.best_epoch).and_then(|h| h.val.clone());
        Ok(AblationRow {
            name: variant.name.to_string(),
            seed: seeds[s],
            config_hash: cfg.hash(),
            best_epoch: ckpt.best_epoch,
            val,
            test,
        })
    })
    .into_iter()
    .collect()
}

/// Seed-averaged test metrics per variant, in first-seen order:
/// `(name, accuracy, precision, recall, f1)`.
pub fn seed_means(rows: &[AblationRow]) -> Vec<(String, f64, f64, f64, f64)> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.name.as_str()) {
            names.push(&r.name);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let group: Vec<&MetricReport> = rows.iter().filter(|r| r.name == name).map(|r| &r.test).collect();
            let n = group.len() as f64;
            let mean = |f: fn(&MetricReport) -> f64| group.iter().map(|m| f(m)).sum::<f64>() / n;
            (
                name.to_string(),
                mean(|m| m.accuracy),
                mean(|m| m.precision),
                mean(|m| m.recall),
                mean(|m| m.f1),
            )
        })
        .collect()
}

const HEADER: [&str; 8] = ["config", "seed", "hash", "acc", "p", "r", "f1", "best_epoch"];

fn cells(r: &AblationRow) -> [String; 8] {
    [
        r.name.clone(),
        r.seed.to_string(),
        r.config_hash.clone(),
        format!("{:.2}", r.test.accuracy),
        format!("{:.2}", r.test.precision),
        format!("{:.2}", r.test.recall),
        format!("{:.2}", r.test.f1),
        r.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
    ]
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&cells(r).join(","));
        out.push('\n');
    }
    out
}

/// Column-aligned table followed by seed means.
pub fn ablation_text(rows: &[AblationRow]) -> String {
    let body: Vec<[String; 8]> = rows.iter().map(cells).collect();
    let mut width: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cols: &[String]| {
        let padded: Vec<String> = cols.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, &HEADER.map(String::from));
    for row in &body {
        line(&mut out, row);
    }
    out.push('\n');
    let _ = writeln!(out, "{:<12}{:>8}{:>8}{:>8}{:>8}", "mean", "acc", "p", "r", "f1");
    for (name, a, p, r, f) in seed_means(rows) {
        let _ = writeln!(out, "{name:<12}{a:>8.2}{p:>8.2}{r:>8.2}{f:>8.2}");
    }
    out
}
