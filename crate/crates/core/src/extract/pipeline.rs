use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::mpsc::sync_channel;

use serde::{Deserialize, Serialize};

use super::geo::Gazetteer;
use super::record::InteractionRecord;
use crate::encoder::{load_backbone, EncoderBackbone};
use crate::error::{Error, Result};
use crate::ingest::{load_triples, pair_corpus, read_documents, CandidateQuadruple, Document, TrajectoryTriple};
use crate::train::{Checkpoint, Prediction};

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub threshold: f64,
    pub gazetteer: Option<Gazetteer>,
    /// Capacity of each queue between reader, scorer and writer.
    pub queue_depth: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            gazetteer: None,
            queue_depth: 4,
        }
    }
}

/// Counts for a whole run. `positives + negatives + skipped == candidates`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub documents: usize,
    /// Documents finished by an earlier run and not processed again.
    pub documents_resumed: usize,
    pub candidates: usize,
    pub positives: usize,
    pub negatives: usize,
    pub skipped: usize,
    /// Triples whose document is missing or whose segment does not match it.
    pub rejected_triples: usize,
    /// Unparseable input lines.
    pub corrupt_lines: usize,
}

/// One finished document, appended to the progress file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocProgress {
    pub doc_id: String,
    pub candidates: usize,
    pub positives: usize,
    pub negatives: usize,
    pub skipped: usize,
    /// Output length in bytes once this document was written.
    pub output_bytes: u64,
}

impl RunSummary {
    fn add(&mut self, p: &DocProgress) {
        self.candidates += p.candidates;
        self.positives += p.positives;
        self.negatives += p.negatives;
        self.skipped += p.skipped;
    }
}

/// Groups triples by document, dropping those that do not match a document.
pub fn assign_triples(docs: &[Document], triples: Vec<TrajectoryTriple>) -> (BTreeMap<String, Vec<TrajectoryTriple>>, usize) {
    let by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut grouped: BTreeMap<String, Vec<TrajectoryTriple>> =
        docs.iter().map(|d| (d.doc_id.clone(), Vec::new())).collect();
    let mut rejected = 0;
    for t in triples {
        let ok = match by_id.get(t.segment.doc_id.as_str()) {
            Some(doc) => t.segment.validate_against(doc).map_err(|e| e.to_string()),
            None => Err(format!("unknown document {}", t.segment.doc_id)),
        };
        match ok {
            Ok(()) => grouped.get_mut(&t.segment.doc_id).expect("known doc").push(t),
            Err(msg) => {
                log::warn!("rejecting triple in {}: {msg}", t.segment.segment_id);
                rejected += 1;
            }
        }
    }
    (grouped, rejected)
}

/// Streams interaction records for every positively scored candidate.
///
/// Reading and pairing, scoring, and writing run on separate threads joined
/// by bounded queues; documents are written in `doc_id` order. Documents in
/// `done` are skipped. `on_doc` runs after each document's records are
/// flushed.
pub fn extract_corpus<W: Write>(
    grouped: BTreeMap<String, Vec<TrajectoryTriple>>,
    done: &BTreeSet<String>,
    checkpoint: &Checkpoint,
    backbone: &dyn EncoderBackbone,
    opts: &ExtractOptions,
    out: &mut W,
    start_bytes: u64,
    mut on_doc: impl FnMut(&DocProgress) -> Result<()>,
) -> Result<RunSummary> {
    let mut summary = RunSummary::default();
    let work: Vec<(String, Vec<TrajectoryTriple>)> =
        grouped.into_iter().filter(|(id, _)| !done.contains(id)).collect();
    summary.documents = work.len();
    let depth = opts.queue_depth.max(1);
    let (tx_cand, rx_cand) = sync_channel::<(String, Vec<CandidateQuadruple>)>(depth);
    let (tx_pred, rx_pred) = sync_channel::<Result<(String, Vec<Prediction>)>>(depth);
    let mut bytes = start_bytes;
    std::thread::scope(|s| {
        s.spawn(move || {
            for (doc_id, triples) in work {
                if tx_cand.send((doc_id, pair_corpus(&triples))).is_err() {
                    break;
                }
            }
        });
        s.spawn(move || {
            for (doc_id, cands) in rx_cand {
                let scored = checkpoint
                    .predict_with(backbone, &cands, opts.threshold)
                    .map(|p| (doc_id, p));
                let failed = scored.is_err();
                if tx_pred.send(scored).is_err() || failed {
                    break;
                }
            }
        });
        for msg in rx_pred {
            let (doc_id, preds) = msg?;
            let mut p = DocProgress {
                doc_id,
                candidates: preds.len(),
                positives: 0,
                negatives: 0,
                skipped: 0,
                output_bytes: 0,
            };
            for pred in &preds {
                match (pred.label, pred.score) {
                    (Some(true), Some(score)) => {
                        p.positives += 1;
                        let line = InteractionRecord::from_candidate(&pred.candidate, score, opts.gazetteer.as_ref()).to_line();
                        writeln!(out, "{line}").map_err(|e| Error::io("<output>", e))?;
                        bytes += line.len() as u64 + 1;
                    }
                    (Some(false), _) => p.negatives += 1,
                    _ => p.skipped += 1,
                }
            }
            out.flush().map_err(|e| Error::io("<output>", e))?;
            p.output_bytes = bytes;
            summary.add(&p);
            on_doc(&p)?;
        }
        Ok::<(), Error>(())
    })?;
    Ok(summary)
}

fn read_progress(path: &Path) -> Result<Vec<DocProgress>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// File-level driver: reads documents and triples, writes records to
/// `out_path`, and resumes from `progress_path` when it lists finished
/// documents. Output written after the last recorded document is discarded
/// before resuming.
pub fn extract_files(
    docs_dir: &Path,
    triples_path: &Path,
    checkpoint: &Checkpoint,
    opts: &ExtractOptions,
    out_path: &Path,
    progress_path: Option<&Path>,
) -> Result<RunSummary> {
    let docs = read_documents(docs_dir)?;
    let triples = load_triples(triples_path)?;
    let (grouped, rejected) = assign_triples(&docs.items, triples.items);
    let backbone = load_backbone(&checkpoint.config.backbone)?;

    let previous = match progress_path {
        Some(p) => read_progress(p)?,
        None => Vec::new(),
    };
    let done: BTreeSet<String> = previous.iter().map(|p| p.doc_id.clone()).collect();
    let start = previous.last().map_or(0, |p| p.output_bytes);
    let file = if previous.is_empty() {
        File::create(out_path)
    } else {
        OpenOptions::new().write(true).open(out_path)
    }
    .map_err(|e| Error::io(out_path, e))?;
    file.set_len(start).map_err(|e| Error::io(out_path, e))?;
    let mut file = file;
    use std::io::Seek;
    file.seek(std::io::SeekFrom::End(0)).map_err(|e| Error::io(out_path, e))?;
    let mut out = BufWriter::new(file);

    let mut progress = match progress_path {
        Some(p) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p, e))?,
        ),
        None => None,
    };
    let mut summary = extract_corpus(grouped, &done, checkpoint, backbone.as_ref(), opts, &mut out, start, |p| {
        if let (Some(f), Some(path)) = (progress.as_mut(), progress_path) {
            writeln!(f, "{}", serde_json::to_string(p)?).map_err(|e| Error::io(path, e))?;
            f.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })?;
    for p in &previous {
        summary.add(p);
    }
    summary.documents += previous.len();
    summary.documents_resumed = previous.len();
    summary.rejected_triples = rejected;
    summary.corrupt_lines = triples.errors.len() + docs.errors.len();
    Ok(summary)
}
