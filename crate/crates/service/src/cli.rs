//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 user error (bad arguments, unreadable or invalid
//! input files, replay mismatch), 2 internal error (backend failures and
//! anything else unexpected). With `--json` every command writes one JSON
//! document to stdout.
//!
//! Commands that take `--train` / `--test` fall back to the generated
//! teaching suite when no dataset is given; the suite's own KB is then used
//! unless `--kb` or `--remote` picks another backend.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use teachqa_core::engine::{RemoteBackend, RemoteConfig, ReasoningBackend, SymbolicBackend, SymbolicKb};
use teachqa_core::session::{self, transcript_from_jsonl, SessionEnv};
use teachqa_core::sim::{self, ExperimentConfig, ExperimentMode, QAExample, SuiteConfig, SyntheticSuite};
use teachqa_core::{
    answer, AnswerResult, Choice, ControllerConfig, IndexStrategy, MemoryHandle, MemoryStore,
    Provenance, QuestionRef, RetrievalConfig,
};

use crate::api::{self, AppState};
use crate::config::{BackendSelection, ServiceConfig};
use crate::model_server;

#[derive(Debug, Parser)]
#[command(name = "teachqa", version, about = "Teachable question answering with proof-backed answers")]
pub struct Cli {
    /// Write machine-readable JSON to stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Serve a symbolic backend over the model protocol.
    ModelServer {
        #[arg(long, default_value = "127.0.0.1:9000")]
        listen: SocketAddr,
        #[arg(long)]
        kb: Option<PathBuf>,
    },
    /// Answer one question.
    Ask {
        #[arg(long)]
        question: String,
        /// Comma-separated choices; candidates are generated when omitted.
        #[arg(long, value_delimiter = ',')]
        choices: Vec<String>,
        #[arg(long)]
        memory: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
    },
    /// Teach with the simulated teacher and save the resulting memory.
    Teach {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        memory_out: PathBuf,
        /// Memory to start from.
        #[arg(long)]
        memory: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
    },
    /// Accuracy on a test set with memory frozen.
    Eval {
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        memory: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EvalMode::Proof)]
        mode: EvalMode,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
    },
    /// Learning curve over growing train prefixes.
    Curve {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1")]
        fractions: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
    },
    /// Recall@k of gold facts under each memory indexing strategy.
    BenchRetrieval {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Strategies to report; all four when omitted.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<IndexStrategy>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,10")]
        ks: Vec<usize>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Re-run a recorded session transcript and check the final memory hash.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        /// Memory the session started from; empty when omitted.
        #[arg(long)]
        memory: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
    },
    /// Write the generated suite (train, test, KB) to a directory.
    GenSuite {
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        suite: SuiteArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Direct,
    Proof,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Symbolic KB file; the bundled fixture (or the suite KB) when omitted.
    #[arg(long, conflicts_with = "remote")]
    pub kb: Option<PathBuf>,
    /// Base URL of a model service.
    #[arg(long)]
    pub remote: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub remote_timeout_ms: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RetrievalArgs {
    /// Facts retrieved per question.
    #[arg(long, default_value_t = 5)]
    pub r: usize,
    #[arg(long, default_value = "F")]
    pub index: IndexStrategy,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    /// Seed of the generated suite used when no dataset is given.
    #[arg(long, default_value_t = 0)]
    pub suite_seed: u64,
}

#[derive(Debug)]
enum CliError {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

type CliResult<T = ()> = Result<T, CliError>;

fn user<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::User(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Internal(e.into())
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

struct Output<'a> {
    json: bool,
    out: &'a mut dyn Write,
}

impl Output<'_> {
    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) -> CliResult {
        let s = if self.json {
            serde_json::to_string_pretty(value).map_err(internal)? + "\n"
        } else {
            text()
        };
        self.out.write_all(s.as_bytes()).map_err(internal)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => 1,
            };
        }
    };
    let mut output = Output { json: cli.json, out };
    match run(cli.command, &mut output) {
        Ok(()) => 0,
        Err(e) => {
            let (CliError::User(inner) | CliError::Internal(inner)) = &e;
            let _ = writeln!(err, "error: {inner:#}");
            e.code()
        }
    }
}

fn run(command: Command, out: &mut Output<'_>) -> CliResult {
    match command {
        Command::Serve { config } => {
            let cfg = ServiceConfig::load(&config).map_err(user)?;
            serve(cfg).map_err(internal)
        }
        Command::ModelServer { listen, kb } => {
            let kb = match kb {
                Some(p) => SymbolicKb::load(&p).map_err(user)?,
                None => SymbolicKb::penny_fixture(),
            };
            model_server_blocking(listen, Arc::new(SymbolicBackend::new(kb))).map_err(internal)
        }
        Command::Ask {
            question,
            choices,
            memory,
            backend,
            retrieval,
        } => ask(out, &question, &choices, memory.as_deref(), &backend, &retrieval),
        Command::Teach {
            train,
            memory_out,
            memory,
            seed,
            suite,
            backend,
            retrieval,
        } => {
            let data = Data::load(train.as_deref(), None, &suite)?;
            let backend = data.backend(&backend)?;
            let mem = load_memory(memory.as_deref())?;
            let log = sim::teach(&data.train, seed, &mem, backend.as_ref(), &controller(&retrieval)?)
                .map_err(internal)?;
            mem.read().save(&memory_out).map_err(user)?;
            let summary = json!({
                "examples": log.steps.len(),
                "wrong": log.wrong(),
                "facts_added": log.facts_added(),
                "memory_size": mem.read().len(),
                "memory_hash": mem.content_hash(),
                "memory_out": memory_out,
            });
            out.emit(&summary, || {
                format!(
                    "taught {} examples: {} wrong, {} facts added; memory has {} facts ({})\n",
                    log.steps.len(),
                    log.wrong(),
                    log.facts_added(),
                    mem.read().len(),
                    memory_out.display()
                )
            })
        }
        Command::Eval {
            test,
            memory,
            mode,
            suite,
            backend,
            retrieval,
        } => {
            let data = Data::load(None, test.as_deref(), &suite)?;
            let backend = data.backend(&backend)?;
            let mem = load_memory(memory.as_deref())?;
            let mut cfg = ExperimentConfig::new(
                match mode {
                    EvalMode::Direct => ExperimentMode::DirectQa,
                    EvalMode::Proof => ExperimentMode::AfterTeaching,
                },
                0,
            );
            cfg.controller = controller(&retrieval)?;
            let report = sim::evaluate(&data.test, &mem, backend.as_ref(), &cfg).map_err(internal)?;
            out.emit(&report, || {
                let correct = report.records.iter().filter(|r| r.correct).count();
                format!(
                    "accuracy {:.1}% ({correct}/{}) mode={mode:?} memory={} facts\n",
                    report.accuracy * 100.0,
                    report.records.len(),
                    report.memory_size
                )
            })
        }
        Command::Curve {
            train,
            test,
            fractions,
            seeds,
            suite,
            backend,
            retrieval,
        } => {
            let data = Data::load(train.as_deref(), test.as_deref(), &suite)?;
            let backend = data.backend(&backend)?;
            let cfg = controller(&retrieval)?;
            let points = sim::learning_curve(&data.train, &data.test, &fractions, &seeds, backend.as_ref(), &cfg)
                .map_err(|e| match e {
                    teachqa_core::ControllerError::InvalidConfig(_) => user(e),
                    other => internal(other),
                })?;
            out.emit(&points, || {
                let mut s = String::from("fraction  mean_acc  per_seed\n");
                for p in &points {
                    let per: Vec<String> = p.per_seed.iter().map(|a| format!("{:.1}", a * 100.0)).collect();
                    s += &format!("{:>8.2}  {:>8.1}  {}\n", p.fraction, p.mean_accuracy * 100.0, per.join(" "));
                }
                s
            })
        }
        Command::BenchRetrieval {
            train,
            test,
            strategy,
            ks,
            suite,
        } => {
            let data = Data::load(train.as_deref(), test.as_deref(), &suite)?;
            let strategies = if strategy.is_empty() {
                IndexStrategy::ALL.to_vec()
            } else {
                strategy
            };
            let report = bench_retrieval(&data.train, &data.test, &strategies, &ks)?;
            out.emit(&report, || report.render())
        }
        Command::Replay {
            transcript,
            memory,
            backend,
            retrieval,
        } => {
            let text = std::fs::read_to_string(&transcript)
                .with_context(|| format!("reading {}", transcript.display()))
                .map_err(user)?;
            let entries = transcript_from_jsonl(&text).map_err(user)?;
            let recorded = entries
                .last()
                .map(|e| e.memory_hash.clone())
                .ok_or_else(|| user(anyhow!("empty transcript")))?;
            let mem = load_memory(memory.as_deref())?;
            let backend = build_backend(&backend, None)?;
            let cfg = controller(&retrieval)?;
            let state = session::replay("replay", &entries, SessionEnv::new(&mem, backend.as_ref(), &cfg))
                .map_err(internal)?;
            let actual = mem.content_hash();
            let matches = actual == recorded;
            let summary = json!({
                "turns": state.turn_number,
                "status": state.status,
                "recorded_hash": recorded,
                "replayed_hash": actual,
                "matches": matches,
            });
            out.emit(&summary, || {
                format!(
                    "replayed {} turns, status {:?}: memory hash {}\n",
                    state.turn_number,
                    state.status,
                    if matches { "matches" } else { "DIFFERS" }
                )
            })?;
            if matches {
                Ok(())
            } else {
                Err(user(anyhow!("replayed memory hash {actual} differs from recorded {recorded}")))
            }
        }
        Command::GenSuite { out_dir, suite } => {
            let s = sim::generate(&SuiteConfig {
                seed: suite.suite_seed,
                ..SuiteConfig::default()
            });
            write_suite(&s, &out_dir).map_err(user)?;
            let summary = json!({
                "out_dir": out_dir,
                "train": s.train.len(),
                "test": s.test.len(),
                "facts": s.facts.len(),
                "misconceptions": s.facts.iter().filter(|f| f.misconception).count(),
            });
            out.emit(&summary, || {
                format!(
                    "wrote {} train and {} test examples to {}\n",
                    s.train.len(),
                    s.test.len(),
                    out_dir.display()
                )
            })
        }
    }
}

fn controller(r: &RetrievalArgs) -> CliResult<ControllerConfig> {
    let mut cfg = ControllerConfig::default();
    cfg.retrieval = RetrievalConfig::default().with_r(r.r).with_strategy(r.index);
    cfg.validate().map_err(user)?;
    Ok(cfg)
}

fn load_memory(path: Option<&Path>) -> CliResult<MemoryHandle> {
    match path {
        None => Ok(MemoryHandle::default()),
        Some(p) => Ok(MemoryHandle::new(MemoryStore::load(p).map_err(user)?)),
    }
}

fn build_backend(args: &BackendArgs, default_kb: Option<&SymbolicKb>) -> CliResult<Arc<dyn ReasoningBackend>> {
    if let Some(url) = &args.remote {
        let mut cfg = RemoteConfig::new(url.clone());
        cfg.timeout_ms = args.remote_timeout_ms;
        return Ok(Arc::new(RemoteBackend::new(&cfg).map_err(user)?));
    }
    let kb = match (&args.kb, default_kb) {
        (Some(p), _) => SymbolicKb::load(p).map_err(user)?,
        (None, Some(kb)) => kb.clone(),
        (None, None) => SymbolicKb::penny_fixture(),
    };
    Ok(Arc::new(SymbolicBackend::new(kb)))
}

/// Train/test examples, from files or the generated suite.
struct Data {
    train: Vec<QAExample>,
    test: Vec<QAExample>,
    suite_kb: Option<SymbolicKb>,
}

impl Data {
    fn load(train: Option<&Path>, test: Option<&Path>, suite: &SuiteArgs) -> CliResult<Self> {
        let read = |p: &Path| -> CliResult<Vec<QAExample>> { Ok(sim::load_dataset(p).map_err(user)?.examples) };
        if train.is_none() && test.is_none() {
            let s = sim::generate(&SuiteConfig {
                seed: suite.suite_seed,
                ..SuiteConfig::default()
            });
            let kb = SymbolicKb::from_file(s.kb).map_err(internal)?;
            return Ok(Data {
                train: s.train,
                test: s.test,
                suite_kb: Some(kb),
            });
        }
        Ok(Data {
            train: train.map(read).transpose()?.unwrap_or_default(),
            test: test.map(read).transpose()?.unwrap_or_default(),
            suite_kb: None,
        })
    }

    fn backend(&self, args: &BackendArgs) -> CliResult<Arc<dyn ReasoningBackend>> {
        build_backend(args, self.suite_kb.as_ref())
    }
}

/// Indexes each train example's core fact, linked to its question, and
/// queries with each test question whose core fact is in the index.
fn bench_retrieval(
    train: &[QAExample],
    test: &[QAExample],
    strategies: &[IndexStrategy],
    ks: &[usize],
) -> CliResult<teachqa_core::memory::RecallReport> {
    let (store, pairs) = recall_fixture(train, test).map_err(user)?;
    if pairs.is_empty() {
        return Err(user(anyhow!("no test question has its core fact among the train facts")));
    }
    store
        .evaluate_recall_all(&pairs, ks, strategies, teachqa_core::Bm25Params::default())
        .map_err(user)
}

/// Memory and `(query, gold fact id)` pairs for a recall benchmark.
pub fn recall_fixture(
    train: &[QAExample],
    test: &[QAExample],
) -> Result<(MemoryStore, Vec<(String, String)>), teachqa_core::MemoryError> {
    let mut store = MemoryStore::new();
    for ex in train {
        store.add_fact(
            &ex.core_fact,
            Provenance::SimulatedTeacher,
            Some(&QuestionRef::from_text(&ex.question)),
        )?;
    }
    let pairs = test
        .iter()
        .filter_map(|ex| {
            store
                .find_by_text(&ex.core_fact)
                .map(|r| (ex.question.clone(), r.id.clone()))
        })
        .collect();
    Ok((store, pairs))
}

fn write_suite(s: &SyntheticSuite, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("train.jsonl"), sim::dataset::to_jsonl(&s.train))?;
    std::fs::write(dir.join("test.jsonl"), sim::dataset::to_jsonl(&s.test))?;
    std::fs::write(dir.join("kb.json"), serde_json::to_string_pretty(&s.kb)?)?;
    Ok(())
}

fn ask(
    out: &mut Output<'_>,
    question: &str,
    choices: &[String],
    memory: Option<&Path>,
    backend: &BackendArgs,
    retrieval: &RetrievalArgs,
) -> CliResult {
    let mem = load_memory(memory)?;
    let backend = build_backend(backend, None)?;
    let cfg = controller(retrieval)?;
    let result = if choices.is_empty() {
        teachqa_core::answer_open(question, &mem, backend.as_ref(), &cfg)
    } else {
        answer(question, &Choice::lettered(choices), &mem, backend.as_ref(), &cfg)
    }
    .map_err(|e| match e {
        teachqa_core::ControllerError::EmptyQuestion | teachqa_core::ControllerError::NoChoices => user(e),
        other => internal(other),
    })?;
    out.emit(&result, || render_answer(&result))
}

fn render_answer(result: &AnswerResult) -> String {
    match result {
        AnswerResult::NoProof { .. } => "I don't know: no verified proof for any choice.\n".into(),
        AnswerResult::Answered {
            choice_label,
            choice_text,
            hypothesis,
            best_proof,
            ..
        } => {
            let mut s = format!("{choice_label}) {choice_text}\n");
            if let Some(p) = best_proof {
                s += "Because:\n";
                for (i, prem) in p.premises.iter().enumerate() {
                    s += &format!("  {}. {prem} [{:.2}]\n", i + 1, p.premise_scores[i]);
                }
                s += &format!("  => {hypothesis} [{:.2}]\n", p.overall_score);
            }
            s
        }
    }
}

/// Runs the HTTP API until interrupted.
pub fn serve(cfg: ServiceConfig) -> anyhow::Result<()> {
    let backend: Arc<dyn ReasoningBackend> = match &cfg.backend {
        BackendSelection::Symbolic { kb } => {
            let kb = match kb {
                Some(p) => SymbolicKb::load(p)?,
                None => SymbolicKb::penny_fixture(),
            };
            Arc::new(SymbolicBackend::new(kb))
        }
        BackendSelection::Remote(r) => Arc::new(RemoteBackend::new(r)?),
    };
    let memory = match &cfg.memory_path {
        Some(p) if p.exists() => MemoryHandle::new(MemoryStore::load(p)?),
        _ => MemoryHandle::default(),
    };
    let mut state = AppState::new(memory, backend, cfg.controller.clone());
    state.backend_name = cfg.backend.name().into();
    state.memory_path = cfg.memory_path.clone();
    state.autosave = cfg.autosave;
    state.session_idle = cfg.session_idle;
    let state = Arc::new(state);

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
        log::info!("listening on {}", listener.local_addr()?);
        let sweeper = api::spawn_sweeper(state.clone());
        axum::serve(listener, api::router(state))
            .with_graceful_shutdown(shutdown_signal())
            .await?;
        sweeper.abort();
        Ok(())
    })
}

fn model_server_blocking(listen: SocketAddr, backend: Arc<dyn ReasoningBackend>) -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen).await?;
        log::info!("model server listening on {}", listener.local_addr()?);
        axum::serve(listener, model_server::router(backend))
            .with_graceful_shutdown(shutdown_signal())
            .await?;
        Ok(())
    })
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}
