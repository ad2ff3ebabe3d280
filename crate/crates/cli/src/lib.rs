//! The `kgrat` command line.
//!
//! Exit codes: 0 success, 1 operational failure, 2 usage or input errors.

pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kgrat_core::astar::{find_paths_or_frontier, SearchReportJson};
use kgrat_core::bench::{self, BenchReport};
use kgrat_core::linker::{EntityLinker, MentionSource};
use kgrat_core::synth::pipeline::entity_pairs;
use kgrat_core::synth::{read_qa_jsonl, synthesize, Backend, OfflineBackend, QAPair};
use kgrat_core::trainer::model::ModelDims;
use kgrat_core::trainer::synthetic::{reference_run, synthetic_task, REFERENCE_OBJECTS, REFERENCE_TASK_SEED};
use kgrat_core::trainer::{encode_all, grad_check, read_train_jsonl, Checkpoint, ToyModel, TrainRecord};
use kgrat_core::{Heuristic, KnowledgeGraph, LandmarkTable, SearchConfig};
use kgrat_gateway::{Gateway, HttpBackend};
use serde::Serialize;

use config::{BackendKind, Config};
use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "kgrat", version, about = "Reasoning-path search, rationale synthesis and KL-aligned toy training")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Triples as TSV (subject, relation, object) or a JSON snapshot from `ingest`.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "kgrat-out")]
    pub out: PathBuf,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a triple file, print its counts and write a snapshot.
    Ingest,
    /// Link entities and search reasoning paths for one QA pair or a QA file.
    Paths(PathsArgs),
    /// Build the rationale dataset.
    Synth(SynthArgs),
    /// Compare landmark A* with the zero heuristic on generated graphs.
    Bench(BenchArgs),
    /// Train the toy student towards the rationale-conditioned teacher.
    Train(TrainArgs),
}

#[derive(Debug, Args)]
pub struct SearchFlags {
    /// Search with h = 0.
    #[arg(long)]
    pub zero_heuristic: bool,
    #[arg(long)]
    pub max_paths: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub anchors: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PathsArgs {
    #[arg(long, requires = "answer", conflicts_with = "qa")]
    pub question: Option<String>,
    #[arg(long, requires = "question")]
    pub answer: Option<String>,
    /// QA pairs as JSONL.
    #[arg(long)]
    pub qa: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub qa: PathBuf,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Endpoint for the http backend, e.g. http://127.0.0.1:8000/v1.
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub search: SearchFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset JSONL from `synth`. Defaults to the built-in synthetic task.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Minimize KL(q || p) instead.
    #[arg(long)]
    pub reverse: bool,
    /// Compare analytic and finite-difference gradients before training.
    #[arg(long)]
    pub grad_check: bool,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Operational(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Operational(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Operational(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Operational(format!("{}: {e}", path.display()))
}

fn read_input(path: &Path, m: &mut RunManifest) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Failure::Usage(format!("{}: no such file", path.display())),
        _ => io_err(path)(e),
    })?;
    m.input(path, &bytes);
    Ok(bytes)
}

fn utf8(path: &Path, bytes: Vec<u8>) -> Result<String> {
    String::from_utf8(bytes).map_err(|e| Failure::Usage(format!("{}: not UTF-8: {e}", path.display())))
}

fn load_graph(common: &Common, m: &mut RunManifest) -> Result<KnowledgeGraph> {
    let path = common
        .graph
        .as_deref()
        .ok_or_else(|| Failure::Usage("--graph is required".into()))?;
    let bytes = read_input(path, m)?;
    m.time("load_graph", || {
        if path.extension().is_some_and(|e| e == "json") {
            KnowledgeGraph::from_snapshot(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
        } else {
            KnowledgeGraph::load(bytes.as_slice()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
        }
    })
}

fn apply_search(cfg: &mut Config, f: &SearchFlags) {
    cfg.search.zero_heuristic |= f.zero_heuristic;
    if let Some(v) = f.max_paths {
        cfg.search.max_paths = v;
    }
    if let Some(v) = f.max_depth {
        cfg.search.max_depth = v;
    }
    if let Some(v) = f.anchors {
        cfg.heuristic.anchor_count = v;
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::load(cli.common.config.as_deref()).map_err(Failure::Usage)?;
    if let Some(s) = cli.common.seed {
        cfg.seed = Some(s);
    }
    cfg.apply_seed();
    if let Some(j) = cli.common.jobs {
        cfg.jobs = j;
    }
    match &cli.command {
        Command::Ingest => {}
        Command::Paths(a) => apply_search(&mut cfg, &a.search),
        Command::Synth(a) => {
            apply_search(&mut cfg, &a.search);
            if let Some(b) = a.backend {
                cfg.synth.backend = b;
            }
            if let Some(u) = &a.base_url {
                cfg.gateway.base_url = u.clone();
            }
            if let Some(mo) = &a.model {
                cfg.gateway.model = mo.clone();
            }
        }
        Command::Bench(a) => {
            if let Some(v) = a.nodes {
                cfg.bench.nodes = v;
            }
            if let Some(v) = a.queries {
                cfg.bench.queries = v;
            }
            if let Some(v) = a.max_depth {
                cfg.bench.max_depth = v;
            }
        }
        Command::Train(a) => {
            if let Some(v) = a.steps {
                cfg.train.steps = v;
            }
            if let Some(v) = a.lr {
                cfg.train.lr = v;
            }
            cfg.train.reverse |= a.reverse;
        }
    }
    cfg.validate().map_err(Failure::Usage)?;
    Ok(cfg)
}

fn ingest(common: &Common, m: &mut RunManifest) -> Result<()> {
    let g = load_graph(common, m)?;
    println!("{} entities, {} relations, {} triples", g.entity_count(), g.relation_count(), g.triple_count());
    m.output(&common.out, "graph.json", &g.to_snapshot()).map_err(io_err(&common.out))?;
    m.results = serde_json::json!({
        "entities": g.entity_count(),
        "relations": g.relation_count(),
        "triples": g.triple_count(),
    });
    Ok(())
}

#[derive(Debug, Serialize)]
struct PathsEntry {
    id: String,
    question: String,
    answer: String,
    /// `ok`, `partial` (frontier fallback), `no_path` or `unmatched`.
    status: &'static str,
    entities_q: Vec<String>,
    entities_a: Vec<String>,
    report: SearchReportJson,
}

fn paths_for(g: &KnowledgeGraph, linker: &EntityLinker<'_>, qa: &QAPair, cfg: &Config) -> PathsEntry {
    let context = format!("{} {}", qa.question, qa.answer);
    let eq = linker.link_text(&qa.question, &context, MentionSource::Question);
    let ea = linker.link_text(&qa.answer, &context, MentionSource::Answer);
    let labels = |ids: &[kgrat_core::EntityId]| ids.iter().map(|&e| g.entity_label(e).to_owned()).collect();
    let mut json = SearchReportJson { paths: Vec::new(), nodes_expanded: 0, queue_pushes: 0, wall_time_ms: 0 };
    let mut complete = false;
    for (q, a) in entity_pairs(&eq.entities, &ea.entities, cfg.search.pair_budget) {
        let table;
        let heuristic = if cfg.search.zero_heuristic {
            Heuristic::Zero
        } else {
            table = LandmarkTable::for_goal(g, a, &cfg.heuristic);
            Heuristic::Landmarks(&table)
        };
        let sc = SearchConfig {
            max_paths: cfg.search.max_paths,
            max_depth: cfg.search.max_depth,
            direction: cfg.heuristic.direction,
            heuristic,
        };
        let r = find_paths_or_frontier(g, q, a, &sc).expect("linked ids are valid");
        complete |= r.has_complete();
        let part = r.to_json(g);
        json.nodes_expanded += part.nodes_expanded;
        json.queue_pushes += part.queue_pushes;
        json.wall_time_ms += part.wall_time_ms;
        for p in part.paths {
            if !json.paths.contains(&p) {
                json.paths.push(p);
            }
        }
    }
    let status = if eq.entities.is_empty() || ea.entities.is_empty() {
        "unmatched"
    } else if complete {
        "ok"
    } else if json.paths.is_empty() {
        "no_path"
    } else {
        "partial"
    };
    PathsEntry {
        id: qa.id.clone(),
        question: qa.question.clone(),
        answer: qa.answer.clone(),
        status,
        entities_q: labels(&eq.entities),
        entities_a: labels(&ea.entities),
        report: json,
    }
}

fn read_qas(path: &Path, m: &mut RunManifest) -> Result<Vec<QAPair>> {
    let text = utf8(path, read_input(path, m)?)?;
    let (qas, errors) = read_qa_jsonl(&text);
    for e in &errors {
        eprintln!("warning: {}: {e}; skipped", path.display());
    }
    Ok(qas)
}

fn paths(common: &Common, a: &PathsArgs, cfg: &Config, m: &mut RunManifest) -> Result<()> {
    let g = load_graph(common, m)?;
    let qas = match (&a.question, &a.answer, &a.qa) {
        (Some(q), Some(ans), None) => vec![QAPair {
            id: "q0".into(),
            instruction: String::new(),
            question: q.clone(),
            answer: ans.clone(),
            options: None,
        }],
        (None, None, Some(path)) => read_qas(path, m)?,
        _ => return Err(Failure::Usage("give either --question and --answer, or --qa".into())),
    };
    let linker = EntityLinker::new(&g);
    let entries: Vec<PathsEntry> = m.time("search", || qas.iter().map(|qa| paths_for(&g, &linker, qa, cfg)).collect());
    for e in &entries {
        let best = e.report.paths.first().map(|p| p.cost.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{}\t{}\tpaths={}\tbest_cost={}\texpanded={}",
            e.id,
            e.status,
            e.report.paths.len(),
            best,
            e.report.nodes_expanded
        );
    }
    let text = serde_json::to_string_pretty(&entries).expect("paths serialize") + "\n";
    m.output(&common.out, "paths.json", text.as_bytes()).map_err(io_err(&common.out))?;
    m.results = serde_json::json!({
        "queries": entries.len(),
        "nodes_expanded": entries.iter().map(|e| e.report.nodes_expanded).sum::<u64>(),
    });
    Ok(())
}

fn synth(common: &Common, a: &SynthArgs, cfg: &Config, m: &mut RunManifest) -> Result<()> {
    let g = load_graph(common, m)?;
    let qas = read_qas(&a.qa, m)?;
    let backend: Box<dyn Backend> = match cfg.synth.backend {
        BackendKind::Offline => Box::new(OfflineBackend),
        BackendKind::Http => {
            let gateway = Gateway::new(cfg.gateway.clone()).map_err(|e| Failure::Usage(e.to_string()))?;
            Box::new(HttpBackend { gateway })
        }
    };
    let out = m.time("synthesize", || synthesize(&qas, &g, &cfg.synth_config(), backend.as_ref()));
    let failed = out.records.iter().filter(|r| r.status == kgrat_core::synth::RecordStatus::Failed).count();
    let stats = out.stats.to_json();
    m.output(&common.out, "dataset.jsonl", out.to_jsonl().as_bytes())
        .map_err(io_err(&common.out))?;
    let stats_text = serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n";
    m.output(&common.out, "path_stats.json", stats_text.as_bytes())
        .map_err(io_err(&common.out))?;
    println!("{} records ({} failed), {} paths", out.records.len(), failed, stats.paths);
    for (name, b) in [
        ("1-hop", stats.one_hop),
        ("2-hop", stats.two_hop),
        ("3-hop complete", stats.three_hop_complete),
        ("3-hop partial", stats.three_hop_partial),
    ] {
        println!("  {name:<15} {:>6} {:>7.2}%", b.count, b.percent);
    }
    println!("  {:<15} {:>6} {:>7.2}% of records", "unmatched", stats.unmatched.count, stats.unmatched.percent);
    m.results = serde_json::json!({ "records": out.records.len(), "failed": failed, "stats": stats });
    Ok(())
}

fn bench_table(r: &BenchReport) -> String {
    let mut s = String::new();
    let n = r.rows.len();
    let _ = writeln!(s, "queries                      {n}");
    let _ = writeln!(s, "landmark <= zero expansions  {}/{n}", r.dominated);
    let _ = writeln!(s, "landmark <  zero expansions  {}/{n}", r.strictly_fewer);
    let _ = writeln!(s, "mean expansion ratio         {:.3}", r.mean_expansion_ratio);
    let _ = writeln!(s, "mean speedup (zero/landmark) {:.3}", r.mean_speedup);
    let same = r.rows.iter().filter(|q| q.same_costs).count();
    let _ = writeln!(s, "identical path costs         {same}/{n}");
    let _ = writeln!(s, "oracle agreement (tiny)      {}/{}", r.tiny_agree, r.tiny_total);
    s
}

fn bench_csv(r: &BenchReport) -> String {
    let mut s = String::from("start,goal,landmark_expanded,zero_expanded,landmark_pushes,zero_pushes,costs,same_costs,landmark_ms,zero_ms\n");
    for q in &r.rows {
        let costs: Vec<String> = q.costs.iter().map(usize::to_string).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{:.4},{:.4}",
            q.start.0,
            q.goal.0,
            q.landmark_expanded,
            q.zero_expanded,
            q.landmark_pushes,
            q.zero_pushes,
            costs.join(" "),
            q.same_costs,
            q.landmark_ms,
            q.zero_ms
        );
    }
    s
}

fn bench_cmd(common: &Common, cfg: &Config, m: &mut RunManifest) -> Result<()> {
    let mut bc = cfg.bench.clone();
    bc.max_paths = cfg.search.max_paths;
    let report = match &common.graph {
        Some(_) => {
            let g = load_graph(common, m)?;
            m.time("bench", || bench::run_on(&g, &bc))
        }
        None => m.time("bench", || bench::run(&bc)),
    };
    print!("{}", bench_table(&report));
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    m.output(&common.out, "bench.json", json.as_bytes()).map_err(io_err(&common.out))?;
    m.output(&common.out, "bench.csv", bench_csv(&report).as_bytes())
        .map_err(io_err(&common.out))?;
    m.results = serde_json::json!({
        "queries": report.rows.len(),
        "dominated": report.dominated,
        "strictly_fewer": report.strictly_fewer,
        "mean_expansion_ratio": report.mean_expansion_ratio,
        "mean_speedup": report.mean_speedup,
        "tiny_agree": report.tiny_agree,
        "tiny_total": report.tiny_total,
    });
    Ok(())
}

fn train_cmd(common: &Common, a: &TrainArgs, cfg: &Config, m: &mut RunManifest) -> Result<()> {
    let records: Vec<TrainRecord> = match &a.data {
        Some(path) => {
            let text = utf8(path, read_input(path, m)?)?;
            read_train_jsonl(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => synthetic_task(REFERENCE_OBJECTS, REFERENCE_TASK_SEED),
    };
    if records.is_empty() {
        return Err(Failure::Usage("no usable training records".into()));
    }
    let op = |e: kgrat_core::trainer::TrainError| Failure::Operational(e.to_string());
    let run = m.time("train", || reference_run(&records, &cfg.train)).map_err(op)?;
    let mut grad_err = None;
    if a.grad_check {
        let data = encode_all(&run.vocab, &records).map_err(op)?;
        let gc = &cfg.grad_check;
        let worst = m.time("grad_check", || -> std::result::Result<f64, kgrat_core::trainer::TrainError> {
            let mut worst: f64 = 0.0;
            for s in 0..gc.seeds {
                let p = ToyModel::random(ModelDims::new(run.vocab.len()), cfg.train.seed.wrapping_add(s))?;
                worst = worst.max(grad_check(&p, &run.teacher, &data, gc.samples, gc.eps, s)?);
            }
            Ok(worst)
        });
        let worst = worst.map_err(op)?;
        println!("grad check: max relative error {worst:.3e} over {} seeds", gc.seeds);
        grad_err = Some(worst);
    }
    let o = &run.outcome;
    println!(
        "KL {:.6} -> {:.6} ({:.1}% of initial) in {} steps",
        o.initial.mean,
        o.last.mean,
        100.0 * run.loss_ratio(),
        cfg.train.steps
    );
    println!("argmax agreement {:.3} -> {:.3}", run.agreement_before, run.agreement_after);
    let frozen = run.teacher_checksum.0 == run.teacher_checksum.1;
    println!("teacher checksum {} ({})", run.teacher_checksum.1, if frozen { "unchanged" } else { "CHANGED" });
    let vocab = Some(run.vocab.tokens().to_vec());
    let dir = &common.out;
    m.output(dir, "checkpoint.json", Checkpoint::new(&o.model, vocab.clone()).to_json().as_bytes())
        .map_err(io_err(dir))?;
    m.output(dir, "teacher.json", Checkpoint::new(&run.teacher, vocab).to_json().as_bytes())
        .map_err(io_err(dir))?;
    m.output(dir, "trace.csv", o.trace_csv().as_bytes()).map_err(io_err(dir))?;
    m.results = serde_json::json!({
        "records": records.len(),
        "initial_kl": o.initial.mean,
        "final_kl": o.last.mean,
        "loss_ratio": run.loss_ratio(),
        "agreement_before": run.agreement_before,
        "agreement_after": run.agreement_after,
        "teacher_unchanged": frozen,
        "student_checksum": o.model.checksum(),
        "grad_check_max_rel_err": grad_err,
    });
    if !frozen {
        return Err(Failure::Operational("teacher parameters changed during training".into()));
    }
    Ok(())
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::Ingest => "ingest",
        Command::Paths(_) => "paths",
        Command::Synth(_) => "synth",
        Command::Bench(_) => "bench",
        Command::Train(_) => "train",
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let out = &cli.common.out;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut m = RunManifest::new(name(&cli.command), &cfg);
    let res = match &cli.command {
        Command::Ingest => ingest(&cli.common, &mut m),
        Command::Paths(a) => paths(&cli.common, a, &cfg, &mut m),
        Command::Synth(a) => synth(&cli.common, a, &cfg, &mut m),
        Command::Bench(_) => bench_cmd(&cli.common, &cfg, &mut m),
        Command::Train(a) => train_cmd(&cli.common, a, &cfg, &mut m),
    };
    m.write(out).map_err(io_err(out))?;
    res
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}
