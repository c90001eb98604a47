//! Command-line surface: `ingest`, `query`, `route`, `eval`, and `stats`.
//!
//! Every run prints a single JSON envelope `{"meta": ..., "result": ...}` to
//! stdout (or to `--json-out`). The `meta` object carries the timestamp and
//! seed; the `result` object is byte-deterministic for deterministic
//! pipelines, so runs can be diffed directly.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/data error, 3 backend
//! error (network, misconfiguration, or a model response that stayed
//! unusable after retries).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Deserialize;

use crate::embedding::{
    CachedEmbedder, Embedder, EmbeddingError, FixtureEmbedder, HashEmbedder, HnswParams,
    HttpEmbedder, IndexKind, VectorIndex,
};
use crate::eval::{
    load_dataset, run_eval, DatasetItem, EvalError, EvalOptions, Metric, PipelineAnswer,
    QuestionPipeline,
};
use crate::graph::{GraphError, PropertyGraph};
use crate::llm::{BackendError, ChatBackend, HttpChatBackend, DEFAULT_TIMEOUT_SECS};
use crate::navigator::{
    EntityExtractor, LexicalExtractor, LexicalNavigator, LlmExtractor, LlmNavigator, Navigator,
    NavigatorError, ReplayScript, ScriptedNavigator,
};
use crate::rag::{self, ChunkIndex, RagError};
use crate::router::{
    HeuristicClassifier, LiveGraphStage, LiveRagStage, LlmClassifier, MultihopClassifier, Router,
    RouterConfig, RouterError, RoutedAnswer,
};
use crate::search::{answer_from_evidence, SearchConfig, SearchEngine, SearchError};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;
const EXIT_BACKEND: i32 = 3;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::NotConfigured(_)
            | EmbeddingError::Transport(_)
            | EmbeddingError::MalformedPayload(_) => CliError::Backend(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<NavigatorError> for CliError {
    fn from(e: NavigatorError) -> Self {
        match e {
            NavigatorError::Unparseable { .. } | NavigatorError::Backend(_) => {
                CliError::Backend(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Navigation { source, .. } => CliError::from(source),
            SearchError::Extraction(source) => CliError::from(source),
            SearchError::Embedding(source) => CliError::from(source),
            SearchError::Backend(_) | SearchError::AnswerUnparseable { .. } => {
                CliError::Backend(e.to_string())
            }
            SearchError::NoAnchors => CliError::Data(e.to_string()),
        }
    }
}

impl From<RagError> for CliError {
    fn from(e: RagError) -> Self {
        match e {
            RagError::Embedding(source) => CliError::from(source),
            RagError::Backend(_) | RagError::AnswerUnparseable { .. } => {
                CliError::Backend(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<RouterError> for CliError {
    fn from(e: RouterError) -> Self {
        match e {
            RouterError::Rag(source) => CliError::from(source),
            RouterError::Search(source) => CliError::from(source),
            RouterError::Backend(source) => CliError::from(source),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Backend(source) => CliError::from(source),
            EvalError::JudgeRequiresBackend(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Optional defaults merged underneath command-line flags: a flag given on
/// the command line always wins; absent flags fall back to the config file,
/// then to built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    max_iter: Option<usize>,
    tau_sim: Option<f64>,
    expansion_per_node: Option<usize>,
    max_select_per_step: Option<usize>,
    entity_anchor_floor: Option<f64>,
    confidence_threshold: Option<f64>,
    rag_top_k: Option<usize>,
    dim: Option<usize>,
    embedder: Option<String>,
    navigator: Option<String>,
    classifier: Option<String>,
    index: Option<String>,
    llm_timeout_s: Option<u64>,
    judge_delay_ms: Option<u64>,
    embed_cache: Option<PathBuf>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "inses",
    version,
    about = "Knowledge-graph question answering with iterative frontier search"
)]
struct Cli {
    /// Seed for randomized components (the approximate index).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with defaults for tuning flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the JSON result envelope here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a graph file from triples, or an embedded chunk index from
    /// chunks.
    #[command(group(ArgGroup::new("source").required(true).args(["triples", "chunks"])))]
    Ingest {
        /// Triple records, one JSON object per line.
        #[arg(long, value_name = "FILE")]
        triples: Option<PathBuf>,
        /// Text chunks, one JSON object per line.
        #[arg(long, value_name = "FILE")]
        chunks: Option<PathBuf>,
        /// Output path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Embedding width recorded in the output.
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Answer a question by searching a graph.
    Query {
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        #[arg(long)]
        question: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
        /// exact, approximate, or auto.
        #[arg(long)]
        index: Option<String>,
        /// llm, lexical, or scripted:<file>.
        #[arg(long)]
        navigator: Option<String>,
        /// Write the iteration-by-iteration trace here (JSON lines).
        #[arg(long, value_name = "FILE")]
        trace_out: Option<PathBuf>,
        #[arg(long, value_name = "SECONDS")]
        llm_timeout_s: Option<u64>,
    },
    /// Route a question between retrieval and graph search.
    Route {
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        /// Embedded chunk index built by `ingest --chunks`.
        #[arg(long, value_name = "FILE")]
        chunks: PathBuf,
        #[arg(long)]
        question: String,
        #[arg(long)]
        confidence_threshold: Option<f64>,
        /// heuristic or llm.
        #[arg(long)]
        classifier: Option<String>,
        #[arg(long)]
        rag_top_k: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
        /// llm or lexical (for the graph leg).
        #[arg(long)]
        navigator: Option<String>,
        #[arg(long, value_name = "SECONDS")]
        llm_timeout_s: Option<u64>,
    },
    /// Score a pipeline over a JSONL dataset.
    Eval {
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// rag, inses, or router.
        #[arg(long)]
        pipeline: String,
        /// Write the JSONL report here.
        #[arg(long, value_name = "FILE")]
        report: PathBuf,
        /// Comma-separated: em, judge, sufficiency.
        #[arg(long)]
        metrics: Option<String>,
        /// Score exact match on raw bytes instead of normalized text.
        #[arg(long)]
        em_strict: bool,
        /// Pause between judge calls.
        #[arg(long, value_name = "MS")]
        judge_delay_ms: Option<u64>,
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        chunks: Option<PathBuf>,
        #[arg(long)]
        confidence_threshold: Option<f64>,
        #[arg(long)]
        classifier: Option<String>,
        #[arg(long)]
        rag_top_k: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
        /// llm or lexical.
        #[arg(long)]
        navigator: Option<String>,
        #[arg(long, value_name = "SECONDS")]
        llm_timeout_s: Option<u64>,
    },
    /// Print size and degree statistics for a graph file.
    Stats {
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tau_sim: Option<f64>,
    #[arg(long)]
    expansion_per_node: Option<usize>,
    #[arg(long)]
    max_select_per_step: Option<usize>,
    #[arg(long)]
    entity_anchor_floor: Option<f64>,
}

impl SearchArgs {
    fn resolve(&self, config: &ConfigFile) -> SearchConfig {
        let defaults = SearchConfig::default();
        SearchConfig {
            max_iter: self.max_iter.or(config.max_iter).unwrap_or(defaults.max_iter),
            tau_sim: self.tau_sim.or(config.tau_sim).unwrap_or(defaults.tau_sim),
            expansion_per_node: self
                .expansion_per_node
                .or(config.expansion_per_node)
                .unwrap_or(defaults.expansion_per_node),
            max_select_per_step: self
                .max_select_per_step
                .or(config.max_select_per_step)
                .unwrap_or(defaults.max_select_per_step),
            entity_anchor_floor: self.entity_anchor_floor.or(config.entity_anchor_floor),
        }
    }
}

#[derive(Debug, Args)]
struct EmbedderArgs {
    /// hash, external, or fixture:<file>.
    #[arg(long)]
    embedder: Option<String>,
    /// JSONL cache for embedding calls.
    #[arg(long, value_name = "FILE")]
    embed_cache: Option<PathBuf>,
}

fn build_embedder(
    spec: &str,
    dim: usize,
    cache: Option<&Path>,
) -> CliResult<Arc<dyn Embedder>> {
    let inner: Arc<dyn Embedder> = if spec == "hash" {
        Arc::new(HashEmbedder::new(dim))
    } else if spec == "external" {
        Arc::new(HttpEmbedder::from_env(dim)?)
    } else if let Some(path) = spec.strip_prefix("fixture:") {
        let embedder = FixtureEmbedder::from_path(Path::new(path))?;
        if embedder.dim() != dim {
            return Err(CliError::Data(format!(
                "fixture embedder is {}-dimensional but {dim} is required",
                embedder.dim()
            )));
        }
        Arc::new(embedder)
    } else {
        return Err(CliError::Usage(format!(
            "unknown embedder {spec:?} (expected hash, external, or fixture:<file>)"
        )));
    };
    match cache {
        None => Ok(inner),
        Some(path) => Ok(Arc::new(CachedEmbedder::open(ArcEmbedder(inner), path)?)),
    }
}

/// Lets a shared embedder sit inside the caching wrapper.
struct ArcEmbedder(Arc<dyn Embedder>);

impl Embedder for ArcEmbedder {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        self.0.embed(text)
    }
    fn identity(&self) -> String {
        self.0.identity()
    }
}

fn parse_index_kind(spec: &str) -> CliResult<IndexKind> {
    match spec {
        "exact" => Ok(IndexKind::Exact),
        "approximate" => Ok(IndexKind::Approximate),
        "auto" => Ok(IndexKind::Auto),
        other => Err(CliError::Usage(format!(
            "unknown index kind {other:?} (expected exact, approximate, or auto)"
        ))),
    }
}

fn build_index(
    graph: &PropertyGraph,
    embedder: &dyn Embedder,
    kind: IndexKind,
    seed: u64,
) -> CliResult<VectorIndex> {
    let resolved = kind.resolve(graph.node_count());
    let mut index = VectorIndex::with_params(
        resolved,
        embedder.dim(),
        HnswParams { seed, ..HnswParams::default() },
    );
    for id in graph.nodes() {
        let display = graph.display_name(id).unwrap_or(id.as_str());
        index.insert(id.clone(), embedder.embed(display)?)?;
    }
    Ok(index)
}

fn chat_backend(timeout_s: u64) -> CliResult<Arc<dyn ChatBackend>> {
    Ok(Arc::new(HttpChatBackend::from_env(Duration::from_secs(timeout_s))?))
}

enum NavigatorChoice {
    Llm,
    Lexical,
    Scripted(ReplayScript),
}

impl NavigatorChoice {
    fn parse(spec: &str, allow_scripted: bool) -> CliResult<Self> {
        if spec == "llm" {
            return Ok(NavigatorChoice::Llm);
        }
        if spec == "lexical" {
            return Ok(NavigatorChoice::Lexical);
        }
        if let Some(path) = spec.strip_prefix("scripted:") {
            if !allow_scripted {
                return Err(CliError::Usage(
                    "scripted navigation replays a single recorded walk and cannot serve here"
                        .into(),
                ));
            }
            let script = ReplayScript::from_path(Path::new(path))
                .map_err(|e| CliError::Data(format!("cannot load script {path}: {e}")))?;
            return Ok(NavigatorChoice::Scripted(script));
        }
        Err(CliError::Usage(format!(
            "unknown navigator {spec:?} (expected llm, lexical, or scripted:<file>)"
        )))
    }
}

struct Envelope {
    seed: u64,
    json_out: Option<PathBuf>,
}

impl Envelope {
    /// Prints `{"meta": {...}, "result": ...}`. Everything nondeterministic
    /// lives under `meta`, so `result` can be compared across runs.
    fn emit(&self, result: serde_json::Value) -> CliResult<()> {
        let timestamp_unix_ms = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let envelope = serde_json::json!({
            "meta": {
                "timestamp_unix_ms": timestamp_unix_ms,
                "seed": self.seed,
            },
            "result": result,
        });
        let text = serde_json::to_string(&envelope)
            .map_err(|e| CliError::Data(format!("cannot serialize result: {e}")))?;
        match &self.json_out {
            None => {
                println!("{text}");
                Ok(())
            }
            Some(path) => {
                let mut file = std::fs::File::create(path)?;
                file.write_all(text.as_bytes())?;
                file.write_all(b"\n")?;
                Ok(())
            }
        }
    }
}

/// Parses `args` and runs the selected command, returning the process exit
/// code. The first element of `args` is the program name.
pub fn run<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(error) => {
            let code = match error.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            let _ = error.print();
            return code;
        }
    };

    let seed = cli.seed.unwrap_or(0);
    let envelope = Envelope { seed, json_out: cli.json_out.clone() };
    match dispatch(cli, seed, &envelope) {
        Ok(()) => EXIT_OK,
        Err(error) => {
            eprintln!("error: {error}");
            error.exit_code()
        }
    }
}

fn dispatch(cli: Cli, seed: u64, envelope: &Envelope) -> CliResult<()> {
    let config = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { triples, chunks, out, dim, embedder } => {
            cmd_ingest(&config, triples, chunks, &out, dim, embedder, envelope)
        }
        Command::Query {
            graph,
            question,
            search,
            embedder,
            index,
            navigator,
            trace_out,
            llm_timeout_s,
        } => cmd_query(
            &config,
            &graph,
            &question,
            search,
            embedder,
            index,
            navigator,
            trace_out,
            llm_timeout_s,
            seed,
            envelope,
        ),
        Command::Route {
            graph,
            chunks,
            question,
            confidence_threshold,
            classifier,
            rag_top_k,
            search,
            embedder,
            navigator,
            llm_timeout_s,
        } => cmd_route(
            &config,
            &graph,
            &chunks,
            &question,
            confidence_threshold,
            classifier,
            rag_top_k,
            search,
            embedder,
            navigator,
            llm_timeout_s,
            seed,
            envelope,
        ),
        Command::Eval {
            dataset,
            pipeline,
            report,
            metrics,
            em_strict,
            judge_delay_ms,
            graph,
            chunks,
            confidence_threshold,
            classifier,
            rag_top_k,
            search,
            embedder,
            navigator,
            llm_timeout_s,
        } => cmd_eval(EvalInvocation {
            config,
            dataset,
            pipeline,
            report,
            metrics,
            em_strict,
            judge_delay_ms,
            graph,
            chunks,
            confidence_threshold,
            classifier,
            rag_top_k,
            search,
            embedder,
            navigator,
            llm_timeout_s,
            seed,
            envelope,
        }),
        Command::Stats { graph } => cmd_stats(&graph, envelope),
    }
}

fn cmd_ingest(
    config: &ConfigFile,
    triples: Option<PathBuf>,
    chunks: Option<PathBuf>,
    out: &Path,
    dim: Option<usize>,
    embedder_args: EmbedderArgs,
    envelope: &Envelope,
) -> CliResult<()> {
    let dim = dim.or(config.dim).unwrap_or(64);
    if let Some(path) = triples {
        let file = std::fs::File::open(&path)
            .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
        let mut graph = PropertyGraph::new(dim);
        let report = graph.ingest(std::io::BufReader::new(file))?;
        graph.save_to_path(out)?;
        let stats = graph.stats();
        return envelope.emit(serde_json::json!({
            "mode": "triples",
            "lines": report.lines_read,
            "edges_added": report.edges_added,
            "duplicates_dropped": report.duplicates,
            "nodes": stats.node_count,
            "edges": stats.edge_count,
            "average_degree": stats.average_degree,
            "out": out.display().to_string(),
        }));
    }

    let path = chunks.expect("clap enforces one source");
    let file = std::fs::File::open(&path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let parsed = rag::parse_chunks(std::io::BufReader::new(file)).map_err(CliError::from)?;
    let spec = embedder_args
        .embedder
        .as_deref()
        .or(config.embedder.as_deref())
        .unwrap_or("hash")
        .to_owned();
    let cache = embedder_args.embed_cache.as_deref().or(config.embed_cache.as_deref());
    let embedder = build_embedder(&spec, dim, cache)?;
    let index = ChunkIndex::build(parsed, embedder.as_ref()).map_err(CliError::from)?;
    index.save_to_path(out).map_err(CliError::from)?;
    envelope.emit(serde_json::json!({
        "mode": "chunks",
        "chunks": index.len(),
        "embedder": embedder.identity(),
        "out": out.display().to_string(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_query(
    config: &ConfigFile,
    graph_path: &Path,
    question: &str,
    search_args: SearchArgs,
    embedder_args: EmbedderArgs,
    index_spec: Option<String>,
    navigator_spec: Option<String>,
    trace_out: Option<PathBuf>,
    llm_timeout_s: Option<u64>,
    seed: u64,
    envelope: &Envelope,
) -> CliResult<()> {
    let graph = PropertyGraph::load_from_path(graph_path)?;
    let search_config = search_args.resolve(config);
    let spec = embedder_args
        .embedder
        .as_deref()
        .or(config.embedder.as_deref())
        .unwrap_or("hash")
        .to_owned();
    let cache = embedder_args.embed_cache.as_deref().or(config.embed_cache.as_deref());
    let embedder = build_embedder(&spec, graph.embedding_dim(), cache)?;
    let index_kind = parse_index_kind(
        index_spec.as_deref().or(config.index.as_deref()).unwrap_or("auto"),
    )?;
    let index = build_index(&graph, embedder.as_ref(), index_kind, seed)?;
    let engine = SearchEngine::new(&graph, &index, embedder.as_ref(), search_config);

    let navigator_spec = navigator_spec
        .as_deref()
        .or(config.navigator.as_deref())
        .unwrap_or("llm")
        .to_owned();
    let timeout_s =
        llm_timeout_s.or(config.llm_timeout_s).unwrap_or(DEFAULT_TIMEOUT_SECS);

    let (mentions, outcome, answer) = match NavigatorChoice::parse(&navigator_spec, true)? {
        NavigatorChoice::Llm => {
            let backend = chat_backend(timeout_s)?;
            let extractor = LlmExtractor::new(backend.clone());
            let mentions = extractor
                .extract(question)
                .map_err(|e| CliError::from(SearchError::Extraction(e)))?;
            let mut navigator = LlmNavigator::new(backend.clone());
            let outcome = engine.search(question, &mentions, &mut navigator)?;
            let answer =
                answer_from_evidence(question, &outcome.evidence, &graph, backend.as_ref())?;
            (mentions, outcome, Some(answer))
        }
        NavigatorChoice::Lexical => {
            let mentions = LexicalExtractor
                .extract(question)
                .map_err(|e| CliError::from(SearchError::Extraction(e)))?;
            let mut navigator = LexicalNavigator::new(search_config.max_select_per_step);
            let outcome = engine.search(question, &mentions, &mut navigator)?;
            (mentions, outcome, None)
        }
        NavigatorChoice::Scripted(script) => {
            let mentions = script.entities.clone();
            let mut navigator = ScriptedNavigator::new(script);
            let outcome = engine.search(question, &mentions, &mut navigator)?;
            (mentions, outcome, None)
        }
    };

    if let Some(path) = trace_out {
        let file = std::fs::File::create(&path)?;
        outcome.trace.write_jsonl(std::io::BufWriter::new(file))?;
    }

    envelope.emit(serde_json::json!({
        "question": question,
        "mentions": mentions,
        "evidence": outcome.evidence,
        "stop_reason": outcome.stop_reason,
        "iterations": outcome.trace.iterations.len(),
        "answer": answer,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_route(
    config: &ConfigFile,
    graph_path: &Path,
    chunks_path: &Path,
    question: &str,
    confidence_threshold: Option<f64>,
    classifier_spec: Option<String>,
    rag_top_k: Option<usize>,
    search_args: SearchArgs,
    embedder_args: EmbedderArgs,
    navigator_spec: Option<String>,
    llm_timeout_s: Option<u64>,
    seed: u64,
    envelope: &Envelope,
) -> CliResult<()> {
    let graph = PropertyGraph::load_from_path(graph_path)?;
    let chunk_index = ChunkIndex::load_from_path(chunks_path).map_err(CliError::from)?;
    let search_config = search_args.resolve(config);
    let spec = embedder_args
        .embedder
        .as_deref()
        .or(config.embedder.as_deref())
        .unwrap_or("hash")
        .to_owned();
    let cache = embedder_args.embed_cache.as_deref().or(config.embed_cache.as_deref());
    let embedder = build_embedder(&spec, graph.embedding_dim(), cache)?;
    let index = build_index(&graph, embedder.as_ref(), IndexKind::Auto, seed)?;
    let engine = SearchEngine::new(&graph, &index, embedder.as_ref(), search_config);

    let timeout_s =
        llm_timeout_s.or(config.llm_timeout_s).unwrap_or(DEFAULT_TIMEOUT_SECS);
    let backend = chat_backend(timeout_s)?;

    let router_config = RouterConfig {
        confidence_threshold: confidence_threshold
            .or(config.confidence_threshold)
            .unwrap_or(RouterConfig::default().confidence_threshold),
    };
    let top_k = rag_top_k.or(config.rag_top_k).unwrap_or(rag::DEFAULT_TOP_K);

    let classifier_spec = classifier_spec
        .as_deref()
        .or(config.classifier.as_deref())
        .unwrap_or("heuristic")
        .to_owned();
    let heuristic = HeuristicClassifier;
    let llm_classifier;
    let classifier: &dyn MultihopClassifier = match classifier_spec.as_str() {
        "heuristic" => &heuristic,
        "llm" => {
            llm_classifier = LlmClassifier::new(backend.clone());
            &llm_classifier
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown classifier {other:?} (expected heuristic or llm)"
            )))
        }
    };

    let navigator_spec = navigator_spec
        .as_deref()
        .or(config.navigator.as_deref())
        .unwrap_or("llm")
        .to_owned();
    let navigator: Box<dyn Navigator> = match NavigatorChoice::parse(&navigator_spec, false)? {
        NavigatorChoice::Llm => Box::new(LlmNavigator::new(backend.clone())),
        NavigatorChoice::Lexical => {
            Box::new(LexicalNavigator::new(search_config.max_select_per_step))
        }
        NavigatorChoice::Scripted(_) => unreachable!("rejected above"),
    };
    let llm_extractor;
    let lexical_extractor = LexicalExtractor;
    let extractor: &dyn EntityExtractor = if navigator_spec == "llm" {
        llm_extractor = LlmExtractor::new(backend.clone());
        &llm_extractor
    } else {
        &lexical_extractor
    };

    let mut rag_stage = LiveRagStage {
        index: &chunk_index,
        embedder: embedder.as_ref(),
        backend: backend.as_ref(),
        top_k,
    };
    let mut graph_stage = LiveGraphStage {
        engine: &engine,
        extractor,
        navigator,
        answer_backend: Some(backend.as_ref()),
    };
    let mut router = Router::new(classifier, &mut rag_stage, &mut graph_stage, router_config);
    let outcome = router.route(question).map_err(CliError::from)?;

    let answer_json = match &outcome.answer {
        RoutedAnswer::Rag(answer) => serde_json::json!({
            "kind": "rag",
            "answer": answer.answer,
            "reasoning": answer.reasoning,
            "confidence": answer.confidence,
        }),
        RoutedAnswer::Graph(response) => serde_json::json!({
            "kind": "graph",
            "answer": response.answer,
            "evidence": response.evidence,
            "stop_reason": response.stop_reason,
        }),
    };
    envelope.emit(serde_json::json!({
        "question": question,
        "route": outcome.decision.route,
        "cause": outcome.decision.cause,
        "rag_confidence": outcome.decision.rag_confidence,
        "answer": answer_json,
    }))
}

struct EvalInvocation<'a> {
    config: ConfigFile,
    dataset: PathBuf,
    pipeline: String,
    report: PathBuf,
    metrics: Option<String>,
    em_strict: bool,
    judge_delay_ms: Option<u64>,
    graph: Option<PathBuf>,
    chunks: Option<PathBuf>,
    confidence_threshold: Option<f64>,
    classifier: Option<String>,
    rag_top_k: Option<usize>,
    search: SearchArgs,
    embedder: EmbedderArgs,
    navigator: Option<String>,
    llm_timeout_s: Option<u64>,
    seed: u64,
    envelope: &'a Envelope,
}

struct RagPipeline<'a> {
    index: &'a ChunkIndex,
    embedder: &'a dyn Embedder,
    backend: &'a dyn ChatBackend,
    top_k: usize,
}

impl QuestionPipeline for RagPipeline<'_> {
    fn answer(&mut self, item: &DatasetItem) -> Result<PipelineAnswer, String> {
        let (answer, retrieved) = rag::answer_with_rag(
            &item.question,
            self.index,
            self.embedder,
            self.backend,
            self.top_k,
        )
        .map_err(|e| e.to_string())?;
        let context = retrieved
            .iter()
            .map(|s| s.chunk.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n");
        Ok(PipelineAnswer { answer: answer.answer, context: Some(context), route: None })
    }
}

struct GraphPipeline<'a> {
    engine: &'a SearchEngine<'a>,
    extractor: &'a dyn EntityExtractor,
    navigator: Box<dyn Navigator + 'a>,
    backend: &'a dyn ChatBackend,
}

impl QuestionPipeline for GraphPipeline<'_> {
    fn answer(&mut self, item: &DatasetItem) -> Result<PipelineAnswer, String> {
        let outcome = self
            .engine
            .search_with_extractor(&item.question, self.extractor, self.navigator.as_mut())
            .map_err(|e| e.to_string())?;
        let answer = answer_from_evidence(
            &item.question,
            &outcome.evidence,
            self.engine.graph(),
            self.backend,
        )
        .map_err(|e| e.to_string())?;
        let names = self.engine.graph().display_names();
        let context = outcome
            .evidence
            .iter()
            .map(|t| {
                let head = names.get(&t.head).cloned().unwrap_or_else(|| t.head.to_string());
                let tail = names.get(&t.tail).cloned().unwrap_or_else(|| t.tail.to_string());
                let line = format!("{head} → {} → {tail}", t.relation);
                match &t.source_text {
                    Some(source) => format!("{line} (source: {source})"),
                    None => line,
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        Ok(PipelineAnswer { answer: answer.answer, context: Some(context), route: None })
    }
}

struct RouterPipeline<'a> {
    router: Router<'a>,
}

impl QuestionPipeline for RouterPipeline<'_> {
    fn answer(&mut self, item: &DatasetItem) -> Result<PipelineAnswer, String> {
        let outcome = self.router.route(&item.question).map_err(|e| e.to_string())?;
        let cause = outcome.decision.cause;
        match outcome.answer {
            RoutedAnswer::Rag(answer) => {
                Ok(PipelineAnswer { answer: answer.answer, context: None, route: Some(cause) })
            }
            RoutedAnswer::Graph(response) => {
                let answer = response
                    .answer
                    .map(|a| a.answer)
                    .ok_or_else(|| "graph stage produced no answer".to_owned())?;
                Ok(PipelineAnswer { answer, context: None, route: Some(cause) })
            }
        }
    }
}

fn cmd_eval(inv: EvalInvocation<'_>) -> CliResult<()> {
    let config = &inv.config;
    let dataset_file = std::fs::File::open(&inv.dataset)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", inv.dataset.display())))?;
    let items = load_dataset(std::io::BufReader::new(dataset_file)).map_err(CliError::from)?;

    let mut metrics: BTreeSet<Metric> = BTreeSet::new();
    let metrics_spec = inv.metrics.as_deref().unwrap_or("em");
    for part in metrics_spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        metrics.insert(part.parse::<Metric>().map_err(CliError::Usage)?);
    }
    if metrics.is_empty() {
        metrics.insert(Metric::ExactMatch);
    }
    let judge_delay = inv
        .judge_delay_ms
        .or(config.judge_delay_ms)
        .map(Duration::from_millis);
    let options = EvalOptions { metrics: metrics.clone(), em_strict: inv.em_strict, judge_delay };

    let timeout_s = inv.llm_timeout_s.or(config.llm_timeout_s).unwrap_or(DEFAULT_TIMEOUT_SECS);
    let backend = chat_backend(timeout_s)?;
    let search_config = inv.search.resolve(config);
    let spec = inv
        .embedder
        .embedder
        .as_deref()
        .or(config.embedder.as_deref())
        .unwrap_or("hash")
        .to_owned();
    let cache = inv.embedder.embed_cache.as_deref().or(config.embed_cache.as_deref());
    let top_k = inv.rag_top_k.or(config.rag_top_k).unwrap_or(rag::DEFAULT_TOP_K);

    let navigator_spec = inv
        .navigator
        .as_deref()
        .or(config.navigator.as_deref())
        .unwrap_or("llm")
        .to_owned();

    let needs_graph = matches!(inv.pipeline.as_str(), "inses" | "router");
    let needs_chunks = matches!(inv.pipeline.as_str(), "rag" | "router");
    if !matches!(inv.pipeline.as_str(), "rag" | "inses" | "router") {
        return Err(CliError::Usage(format!(
            "unknown pipeline {:?} (expected rag, inses, or router)",
            inv.pipeline
        )));
    }

    let graph = if needs_graph {
        let path = inv.graph.as_ref().ok_or_else(|| {
            CliError::Usage(format!("pipeline {:?} requires --graph", inv.pipeline))
        })?;
        Some(PropertyGraph::load_from_path(path)?)
    } else {
        None
    };
    let chunk_index = if needs_chunks {
        let path = inv.chunks.as_ref().ok_or_else(|| {
            CliError::Usage(format!("pipeline {:?} requires --chunks", inv.pipeline))
        })?;
        Some(ChunkIndex::load_from_path(path).map_err(CliError::from)?)
    } else {
        None
    };

    let dim = graph.as_ref().map(PropertyGraph::embedding_dim).or(config.dim).unwrap_or(64);
    let embedder = build_embedder(&spec, dim, cache)?;
    let index = match &graph {
        Some(graph) => Some(build_index(graph, embedder.as_ref(), IndexKind::Auto, inv.seed)?),
        None => None,
    };
    let engine = match (&graph, &index) {
        (Some(graph), Some(index)) => {
            Some(SearchEngine::new(graph, index, embedder.as_ref(), search_config))
        }
        _ => None,
    };

    let make_navigator = || -> CliResult<Box<dyn Navigator>> {
        match NavigatorChoice::parse(&navigator_spec, false)? {
            NavigatorChoice::Llm => Ok(Box::new(LlmNavigator::new(backend.clone()))),
            NavigatorChoice::Lexical => {
                Ok(Box::new(LexicalNavigator::new(search_config.max_select_per_step)))
            }
            NavigatorChoice::Scripted(_) => unreachable!("rejected above"),
        }
    };
    let llm_extractor = LlmExtractor::new(backend.clone());
    let lexical_extractor = LexicalExtractor;
    let extractor: &dyn EntityExtractor = if navigator_spec == "llm" {
        &llm_extractor
    } else {
        &lexical_extractor
    };

    let config_echo = serde_json::json!({
        "pipeline": inv.pipeline,
        "metrics": metrics_spec,
        "em_strict": inv.em_strict,
        "search": search_config,
        "rag_top_k": top_k,
        "embedder": embedder.identity(),
        "navigator": navigator_spec,
    });

    let report = match inv.pipeline.as_str() {
        "rag" => {
            let mut pipeline = RagPipeline {
                index: chunk_index.as_ref().expect("checked above"),
                embedder: embedder.as_ref(),
                backend: backend.as_ref(),
                top_k,
            };
            run_eval(&items, &mut pipeline, &options, Some(backend.as_ref()), config_echo)
        }
        "inses" => {
            let mut pipeline = GraphPipeline {
                engine: engine.as_ref().expect("checked above"),
                extractor,
                navigator: make_navigator()?,
                backend: backend.as_ref(),
            };
            run_eval(&items, &mut pipeline, &options, Some(backend.as_ref()), config_echo)
        }
        "router" => {
            let router_config = RouterConfig {
                confidence_threshold: inv
                    .confidence_threshold
                    .or(config.confidence_threshold)
                    .unwrap_or(RouterConfig::default().confidence_threshold),
            };
            let classifier_spec = inv
                .classifier
                .as_deref()
                .or(config.classifier.as_deref())
                .unwrap_or("heuristic")
                .to_owned();
            let heuristic = HeuristicClassifier;
            let llm_classifier;
            let classifier: &dyn MultihopClassifier = match classifier_spec.as_str() {
                "heuristic" => &heuristic,
                "llm" => {
                    llm_classifier = LlmClassifier::new(backend.clone());
                    &llm_classifier
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown classifier {other:?} (expected heuristic or llm)"
                    )))
                }
            };
            let mut rag_stage = LiveRagStage {
                index: chunk_index.as_ref().expect("checked above"),
                embedder: embedder.as_ref(),
                backend: backend.as_ref(),
                top_k,
            };
            let mut graph_stage = LiveGraphStage {
                engine: engine.as_ref().expect("checked above"),
                extractor,
                navigator: make_navigator()?,
                answer_backend: Some(backend.as_ref()),
            };
            let router = Router::new(classifier, &mut rag_stage, &mut graph_stage, router_config);
            let mut pipeline = RouterPipeline { router };
            run_eval(&items, &mut pipeline, &options, Some(backend.as_ref()), config_echo)
        }
        _ => unreachable!("validated above"),
    }
    .map_err(CliError::from)?;

    let report_file = std::fs::File::create(&inv.report)?;
    report.write_jsonl(std::io::BufWriter::new(report_file))?;

    let causes: Vec<crate::router::RouteCause> =
        report.records.iter().filter_map(|r| r.route_cause).collect();
    let routing = if causes.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::to_value(crate::router::RoutingStats::from_causes(&causes))
            .unwrap_or(serde_json::Value::Null)
    };

    inv.envelope.emit(serde_json::json!({
        "summary": report.summary,
        "routing": routing,
        "report": inv.report.display().to_string(),
    }))
}

fn cmd_stats(graph_path: &Path, envelope: &Envelope) -> CliResult<()> {
    let graph = PropertyGraph::load_from_path(graph_path)?;
    let stats = graph.stats();
    envelope.emit(serde_json::json!({
        "node_count": stats.node_count,
        "edge_count": stats.edge_count,
        "average_degree": stats.average_degree,
    }))
}
