use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use falcon_core::dataset::{dump_labeled, load_labeled, load_labeled_triples, split_dataset, summarize, Split};
use falcon_core::eval::{
    ablation_csv, ablation_text, evaluate_checkpoint, evaluate_split, run_ablations, MetricReport,
};
use falcon_core::extract::{
    classify_records, client_from_spec, dump_records, extract_files, load_records, ExtractOptions, Gazetteer,
    HttpSettings, InteractionRecord, RetryPolicy,
};
use falcon_core::fusion::FrozenTrajectoryExtractor;
use falcon_core::ingest::{
    audit_keys, dump_candidates, load_candidates, load_gold_keys, load_triples, pair_corpus, read_documents,
};
use falcon_core::polarnet::{
    build_graph, graph_stats, modularity_series, record_distances, standardized_modularity, trend_ratios,
    type_totals, write_edge_csv, write_gexf, write_rows_csv, AttrTable, Bin, GraphOptions, SeriesOptions,
    SignedMode, DEFAULT_K_MIN,
};
use falcon_core::train::{
    prediction_to_line, pretrain_from_triples, train_labeled, Checkpoint, TrainConfig,
};

#[derive(Parser)]
#[command(name = "falcon", version, about = "Spatio-temporal interaction extraction and polarization analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pair co-occurring trajectory triples into candidate quadruples.
    Ingest(IngestArgs),
    /// Inspect or split a labelled dataset.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Pretrain and freeze the trajectory extractor.
    PretrainTra(PretrainArgs),
    /// Train the interaction classifier.
    Train(TrainArgs),
    /// Score candidate quadruples with a checkpoint.
    Predict(PredictArgs),
    /// Evaluate a checkpoint on labelled data.
    Eval(EvalArgs),
    /// Train and evaluate the ablation variants.
    Ablate(AblateArgs),
    /// Extract interaction records from a corpus.
    Extract(ExtractArgs),
    /// Type interaction records with a chat-completion client.
    ClassifyType(ClassifyArgs),
    /// Network analyses over typed records.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Export the interaction network.
    #[command(subcommand)]
    Graph(GraphCmd),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    triples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Hand-labelled interactions to audit coverage against.
    #[arg(long)]
    gold: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DatasetCmd {
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Train, validation and test shares.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.7, 0.1, 0.2])]
        ratios: Vec<f64>,
        /// Keep all examples of a document in one split.
        #[arg(long)]
        group_by_doc: bool,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML file with training settings; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct PretrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Labelled trajectory triples (JSONL with `y_tra`).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Labelled examples with split tags.
    #[arg(long)]
    data: PathBuf,
    /// A pretrained extractor; needed when feature transfer is on unless
    /// `--trajectory` is given.
    #[arg(long)]
    extractor: Option<PathBuf>,
    /// Labelled trajectory triples to pretrain an extractor first.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the checkpoint's threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Dataset name recorded in the report.
    #[arg(long)]
    name: Option<String>,
    /// Write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    seeds: Vec<u64>,
    /// Directory for `ablation.csv`, `ablation.txt` and `ablation.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    triples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    /// CSV `location,lat,lon[,state]` for geocoding.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Per-document progress log; an existing one resumes the run.
    #[arg(long)]
    progress: Option<PathBuf>,
    /// Write the run summary as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    queue_depth: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `fixture:<path>` for canned responses, or `http`.
    #[arg(long)]
    llm: String,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    api_key_env: Option<String>,
}

#[derive(Args, Clone)]
struct RecordArgs {
    /// Typed interaction records (JSONL).
    #[arg(long)]
    records: PathBuf,
    /// CSV `person,party[,state,birth_lat,birth_lon,profession]`.
    #[arg(long)]
    attrs: PathBuf,
}

impl RecordArgs {
    fn load(&self) -> Result<(Vec<InteractionRecord>, AttrTable)> {
        let report = load_records(&self.records)?;
        if !report.errors.is_empty() {
            log::warn!("{} unreadable record lines skipped", report.errors.len());
        }
        Ok((report.items, AttrTable::load(&self.attrs)?))
    }
}

#[derive(Args, Clone)]
struct FilterArgs {
    /// First year of the window (inclusive).
    #[arg(long)]
    from: Option<i32>,
    /// Last year of the window (inclusive).
    #[arg(long)]
    to: Option<i32>,
    /// Only interactions located in this state.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    drop_zero_edges: bool,
}

impl FilterArgs {
    fn options(&self) -> GraphOptions {
        let window = match (self.from, self.to) {
            (None, None) => None,
            (a, b) => Some((a.unwrap_or(i32::MIN), b.unwrap_or(i32::MAX))),
        };
        GraphOptions {
            window,
            state: self.state.clone(),
            drop_zero_edges: self.drop_zero_edges,
        }
    }
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Standardised modularity of the party partition, overall and per year.
    Polarization {
        #[command(flatten)]
        input: RecordArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "verbatim")]
        mode: SignedMode,
        /// Per-year series from this year.
        #[arg(long, default_value_t = 1960)]
        series_from: i32,
        #[arg(long, default_value_t = 2024)]
        series_to: i32,
        /// Each year's network includes all earlier years.
        #[arg(long)]
        cumulative: bool,
        /// Also compute a per-year series for each listed state.
        #[arg(long, value_delimiter = ',')]
        states: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inter-party share and type shares per time bin.
    Trends {
        #[command(flatten)]
        input: RecordArgs,
        #[arg(long, default_value = "decade")]
        bin: Bin,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distance from each interaction to both birthplaces.
    Distance {
        #[command(flatten)]
        input: RecordArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Degree histogram, clustering, power-law exponent and PageRank.
    Stats {
        #[command(flatten)]
        input: RecordArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = DEFAULT_K_MIN)]
        k_min: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GraphCmd {
    Export {
        #[command(flatten)]
        input: RecordArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        gexf: Option<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let docs = read_documents(&a.docs)?;
    let triples = load_triples(&a.triples)?;
    let corrupt = triples.errors.len() + docs.errors.len();
    let (grouped, rejected) = falcon_core::extract::assign_triples(&docs.items, triples.items);
    let valid: Vec<_> = grouped.into_values().flatten().collect();
    let candidates = pair_corpus(&valid);
    let mut out = create(&a.out)?;
    dump_candidates(&mut out, &candidates)?;
    out.flush()?;
    let mut summary = serde_json::json!({
        "documents": docs.items.len(),
        "triples": valid.len(),
        "rejected_triples": rejected,
        "corrupt_lines": corrupt,
        "candidates": candidates.len(),
    });
    if let Some(gold) = &a.gold {
        let gold = load_gold_keys(gold)?.items;
        summary["coverage"] = audit_keys(&gold, &candidates)?.into();
    }
    print_json(&summary)
}

fn dataset(cmd: DatasetCmd) -> Result<()> {
    match cmd {
        DatasetCmd::Summarize { input } => {
            let report = load_labeled(&input)?;
            if !report.errors.is_empty() {
                log::warn!("{} invalid lines skipped", report.errors.len());
            }
            print_json(&summarize(&report.items))
        }
        DatasetCmd::Split {
            input,
            out,
            seed,
            ratios,
            group_by_doc,
        } => {
            let mut examples = load_labeled(&input)?.items;
            let ratios: [f64; 3] = ratios.try_into().map_err(|_| anyhow::anyhow!("need three ratios"))?;
            let splits = split_dataset(&examples, ratios, seed, group_by_doc)?;
            for (ex, s) in examples.iter_mut().zip(splits) {
                ex.split = Some(s);
            }
            let mut w = create(&out)?;
            dump_labeled(&mut w, &examples)?;
            w.flush()?;
            print_json(&summarize(&examples))
        }
    }
}

fn pretrain(a: PretrainArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let triples = load_labeled_triples(&a.data)?.items;
    let (ext, log) = pretrain_from_triples(&triples, &cfg)?;
    ext.save(&a.out)?;
    print_json(&serde_json::json!({
        "epoch_losses": log.epoch_losses,
        "checksum": ext.checksum(),
    }))
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let examples = load_labeled(&a.data)?.items;
    let extractor = match (&a.extractor, &a.trajectory) {
        (Some(p), _) => Some(FrozenTrajectoryExtractor::load(p)?),
        (None, Some(t)) if cfg.ft => {
            let triples = load_labeled_triples(t)?.items;
            Some(pretrain_from_triples(&triples, &cfg)?.0)
        }
        _ => None,
    };
    let ckpt = train_labeled(&examples, extractor, &cfg)?;
    ckpt.save(&a.out)?;
    let best = ckpt.history.iter().find(|h| Some(h.epoch) == ckpt.best_epoch);
    print_json(&serde_json::json!({
        "config_hash": cfg.hash(),
        "best_epoch": ckpt.best_epoch,
        "epochs": ckpt.history.len(),
        "train": best.map(|h| &h.train),
        "val": best.and_then(|h| h.val.as_ref()),
    }))
}

fn predict(a: PredictArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let cands = load_candidates(&a.candidates)?.items;
    let threshold = a.threshold.unwrap_or(ckpt.config.threshold);
    let preds = ckpt.predict(&cands, threshold)?;
    let mut w = create(&a.out)?;
    for p in &preds {
        writeln!(w, "{}", prediction_to_line(p))?;
    }
    w.flush()?;
    let positives = preds.iter().filter(|p| p.label == Some(true)).count();
    let skipped = preds.iter().filter(|p| p.label.is_none()).count();
    print_json(&serde_json::json!({
        "candidates": preds.len(),
        "positives": positives,
        "negatives": preds.len() - positives - skipped,
        "skipped": skipped,
    }))
}

fn print_metrics(m: &MetricReport) {
    eprintln!(
        "{}: acc {:.2}  p {:.2}  r {:.2}  f1 {:.2}  (tp {} fp {} fn {} tn {})",
        m.dataset, m.accuracy, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn_, m.tn
    );
}

fn eval(a: EvalArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let examples = load_labeled(&a.data)?.items;
    let (split, default_name) = match a.split {
        SplitArg::Train => (Some(Split::Train), "train"),
        SplitArg::Val => (Some(Split::Val), "val"),
        SplitArg::Test => (Some(Split::Test), "test"),
        SplitArg::All => (None, "all"),
    };
    let name = a.name.as_deref().unwrap_or(default_name);
    let report = match split {
        Some(s) => evaluate_split(&ckpt, &examples, s, name)?,
        None => evaluate_checkpoint(&ckpt, &examples, name)?,
    };
    print_metrics(&report);
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    print_json(&report)
}

fn ablate(a: AblateArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let examples = load_labeled(&a.data)?.items;
    let triples = load_labeled_triples(&a.trajectory)?.items;
    let rows = run_ablations(&examples, &triples, &cfg, &a.seeds)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("ablation.csv"), ablation_csv(&rows))?;
    let text = ablation_text(&rows);
    fs::write(a.out.join("ablation.txt"), &text)?;
    write_json(&a.out.join("ablation.json"), &rows)?;
    print!("{text}");
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let opts = ExtractOptions {
        threshold: a.threshold.unwrap_or(ckpt.config.threshold),
        gazetteer: a.gazetteer.as_deref().map(Gazetteer::load).transpose()?,
        queue_depth: a.queue_depth,
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let summary = extract_files(&a.docs, &a.triples, &ckpt, &opts, &a.out, a.progress.as_deref())?;
    if let Some(p) = &a.summary {
        write_json(p, &summary)?;
    }
    print_json(&summary)
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let mut settings = HttpSettings::default();
    if let Some(e) = a.endpoint {
        settings.endpoint = e;
    }
    if let Some(m) = a.model {
        settings.model = m;
    }
    if let Some(k) = a.api_key_env {
        settings.api_key_env = k;
    }
    let client = client_from_spec(&a.llm, &settings)?;
    let mut records = load_records(&a.records)?.items;
    let counts = classify_records(&mut records, client.as_ref(), RetryPolicy::default());
    let mut w = create(&a.out)?;
    dump_records(&mut w, &records)?;
    w.flush()?;
    print_json(&counts)
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    write_rows_csv(rows, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(serde::Serialize)]
struct ZRow<'a> {
    scope: &'a str,
    year: i32,
    nodes: usize,
    edges: usize,
    q: Option<f64>,
    mean: Option<f64>,
    std: Option<f64>,
    z: Option<f64>,
    note: Option<String>,
}

fn z_rows<'a>(scope: &'a str, points: &[falcon_core::polarnet::SeriesPoint]) -> Vec<ZRow<'a>> {
    points
        .iter()
        .map(|p| ZRow {
            scope,
            year: p.year,
            nodes: p.nodes,
            edges: p.edges,
            q: p.report.as_ref().map(|r| r.q_original),
            mean: p.report.as_ref().map(|r| r.mean),
            std: p.report.as_ref().map(|r| r.std),
            z: p.report.as_ref().map(|r| r.z),
            note: p.note.clone(),
        })
        .collect()
}

fn analyze(cmd: AnalyzeCmd) -> Result<()> {
    match cmd {
        AnalyzeCmd::Polarization {
            input,
            filter,
            samples,
            seed,
            mode,
            series_from,
            series_to,
            cumulative,
            states,
            out,
        } => {
            let (records, attrs) = input.load()?;
            let (g, build) = build_graph(&records, &attrs, &filter.options());
            let overall = standardized_modularity(&g, &g.party_partition(), samples, seed, mode)?;
            fs::create_dir_all(&out)?;
            let base = SeriesOptions {
                first_year: series_from,
                last_year: series_to,
                cumulative,
                samples,
                master_seed: seed,
                mode,
                drop_zero_edges: filter.drop_zero_edges,
                state: None,
            };
            let annual = modularity_series(&records, &attrs, &base);
            let mut rows = z_rows("all", &annual);
            let mut by_state = Vec::new();
            for s in &states {
                let series = modularity_series(&records, &attrs, &SeriesOptions { state: Some(s.clone()), ..base.clone() });
                by_state.push((s.clone(), series));
            }
            for (s, series) in &by_state {
                rows.extend(z_rows(s, series));
            }
            write_csv(&out.join("modularity_series.csv"), &rows)?;
            let doc = serde_json::json!({
                "graph": { "nodes": g.node_count(), "edges": g.edge_count(), "build": build },
                "overall": overall,
                "series": annual,
                "states": by_state.iter().map(|(s, v)| (s.clone(), v)).collect::<std::collections::BTreeMap<_, _>>(),
            });
            write_json(&out.join("polarization.json"), &doc)?;
            print_json(&overall)
        }
        AnalyzeCmd::Trends { input, bin, out } => {
            let (records, attrs) = input.load()?;
            let series = trend_ratios(&records, &attrs, bin);
            write_csv(&out, &series.rows)?;
            let totals = type_totals(&records, &attrs);
            write_json(&out.with_extension("json"), &serde_json::json!({ "series": series, "totals": totals }))?;
            print_json(&totals)
        }
        AnalyzeCmd::Distance { input, out } => {
            let (records, attrs) = input.load()?;
            let rows = record_distances(&records, &attrs);
            write_csv(&out, &rows)?;
            let known: Vec<f64> = rows.iter().filter_map(|r| r.distance_km).collect();
            let mean = (!known.is_empty()).then(|| known.iter().sum::<f64>() / known.len() as f64);
            print_json(&serde_json::json!({
                "records": rows.len(),
                "with_distance": known.len(),
                "mean_km": mean,
            }))
        }
        AnalyzeCmd::Stats { input, filter, k_min, out } => {
            let (records, attrs) = input.load()?;
            let (g, _) = build_graph(&records, &attrs, &filter.options());
            if g.node_count() == 0 {
                bail!("graph is empty");
            }
            let stats = graph_stats(&g, k_min);
            write_json(&out, &stats)?;
            print_json(&serde_json::json!({
                "nodes": stats.nodes,
                "edges": stats.edges,
                "clustering": stats.clustering,
                "alpha": stats.alpha,
                "alpha_mle": stats.alpha_mle,
            }))
        }
    }
}

fn graph(cmd: GraphCmd) -> Result<()> {
    let GraphCmd::Export { input, filter, csv, gexf } = cmd;
    if csv.is_none() && gexf.is_none() {
        bail!("nothing to write: pass --csv and/or --gexf");
    }
    let (records, attrs) = input.load()?;
    let (g, report) = build_graph(&records, &attrs, &filter.options());
    if let Some(p) = csv {
        let mut w = create(&p)?;
        write_edge_csv(&g, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = gexf {
        let mut w = create(&p)?;
        write_gexf(&g, &mut w)?;
        w.flush()?;
    }
    print_json(&serde_json::json!({ "nodes": g.node_count(), "edges": g.edge_count(), "build": report }))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Ingest(a) => ingest(a),
        Command::Dataset(c) => dataset(c),
        Command::PretrainTra(a) => pretrain(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Extract(a) => extract(a),
        Command::ClassifyType(a) => classify(a),
        Command::Analyze(c) => analyze(c),
        Command::Graph(c) => graph(c),
    }
}
