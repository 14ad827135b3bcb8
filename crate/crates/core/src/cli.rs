//! Command-line front end: `run`, `serve`, `analyze` and the `sim-client`
//! loopback adapter.
//!
//! Exit codes: 0 when a campaign finds nothing (or an analysis succeeds),
//! 1 when it finds counterexamples or meets the synthesis target, 2 on any
//! configuration, protocol or I/O error.

use std::ffi::OsString;
use std::fs;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error_table::{format_atom, format_real, ErrorTable, TableError};
use crate::falsifier::{self, FalsifierError, Mode, Objective, RunConfig, RunResult, SimulatorSpec};
use crate::feature_space::{FeatureSpace, Point, SpaceDocument, Value};
use crate::mtl::parse_formula;
use crate::protocol::{self, space_signature, ProtocolError, DEFAULT_LISTEN, DEFAULT_TIMEOUT_SECS};
use crate::rng::{stream, streams};
use crate::samplers::SamplerSpec;
use crate::sims::InProcess;

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FOUND: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub const ERROR_TABLE_FILE: &str = "error_table.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration {file}: {message}")]
    ConfigInvalid { file: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Falsifier(#[from] FalsifierError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// The JSON run configuration.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub space: SpaceDocument,
    pub property: String,
    #[serde(default)]
    pub objective: Objective,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub mode: Mode,
    pub budget: usize,
    #[serde(default)]
    pub stop_on_first: bool,
    #[serde(default)]
    pub seed: u64,
    pub simulator: SimulatorSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub restart_after: Option<usize>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

/// Parses a configuration, naming the offending field and position on
/// failure.
pub fn parse_config(text: &str, file: &str) -> Result<ConfigDocument, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = if field == "." || field.is_empty() {
            inner.to_string()
        } else {
            format!("field `{field}`: {inner}")
        };
        CliError::ConfigInvalid {
            file: file.to_string(),
            message,
        }
    })
}

impl ConfigDocument {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        parse_config(&text, &path.display().to_string())
    }

    pub fn to_run_config(&self, file: &str) -> Result<RunConfig, CliError> {
        let invalid = |message: String| CliError::ConfigInvalid {
            file: file.to_string(),
            message,
        };
        let space = self.space.build().map_err(|e| invalid(format!("field `space`: {e}")))?;
        let property = parse_formula(&self.property).map_err(|e| invalid(format!("field `property`: {e}")))?;
        let config = RunConfig {
            space: Arc::new(space),
            property,
            objective: self.objective.clone(),
            sampler: self.sampler.clone(),
            mode: self.mode,
            budget: self.budget,
            stop_on_first: self.stop_on_first,
            seed: self.seed,
            simulator: self.simulator.clone(),
            restart_after: self.restart_after,
            timeout: Duration::from_secs(self.timeout_secs),
        };
        config.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Parser)]
#[command(name = "falsify-kit", version, about = "Simulation-guided falsification and parameter synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a campaign against the configured simulator.
    Run(RunArgs),
    /// Run a campaign against one external simulator connecting over TCP.
    Serve(ServeArgs),
    /// Analyze an exported error table.
    Analyze(AnalyzeArgs),
    /// Serve the configured reference simulator to a listening toolkit.
    SimClient(SimClientArgs),
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Args, Clone)]
pub struct ServeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = DEFAULT_LISTEN)]
    pub listen: String,
}

#[derive(Debug, Args, Clone)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Space document, or a run configuration containing one.
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub pca: bool,
    #[arg(long, value_name = "THRESH")]
    pub recurrent: Option<f64>,
    /// Anchor point as a JSON object of leaf paths, then K.
    #[arg(long, num_args = 2, value_names = ["ANCHOR", "K"])]
    pub k_closest: Option<Vec<String>>,
    #[arg(long, value_name = "K")]
    pub random: Option<usize>,
    #[arg(long, value_name = "N")]
    pub pca_samples: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct SimClientArgs {
    /// Run configuration whose space and in-process simulator are served.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = DEFAULT_LISTEN)]
    pub connect: String,
    /// Seconds to keep retrying the connection.
    #[arg(long, default_value_t = 10)]
    pub patience: u64,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "falsify" => Ok(Mode::Falsify),
        "fuzz" => Ok(Mode::Fuzz),
        "synthesize" => Ok(Mode::Synthesize),
        other => Err(format!("unknown mode `{other}` (falsify, fuzz, synthesize)")),
    }
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_CLEAN };
            e.print().ok();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Serve(a) => cmd_serve(&a),
        Command::Analyze(a) => cmd_analyze(&a).map(|report| {
            println!("{report}");
            EXIT_CLEAN
        }),
        Command::SimClient(a) => cmd_sim_client(&a).map(|_| EXIT_CLEAN),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}

fn prepare(args: &RunArgs) -> Result<(ConfigDocument, RunConfig, PathBuf), CliError> {
    let file = args.config.display().to_string();
    let mut doc = ConfigDocument::load(&args.config)?;
    if let Some(seed) = args.seed {
        doc.seed = seed;
    }
    if let Some(budget) = args.budget {
        doc.budget = budget;
    }
    if let Some(mode) = args.mode {
        doc.mode = mode;
    }
    let out = args
        .out
        .clone()
        .or_else(|| doc.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("falsify-out"));
    let config = doc.to_run_config(&file)?;
    Ok((doc, config, out))
}

pub fn cmd_run(args: &RunArgs) -> Result<i32, CliError> {
    let (_, config, out) = prepare(args)?;
    execute(&config, &out)
}

pub fn cmd_serve(args: &ServeArgs) -> Result<i32, CliError> {
    let (_, mut config, out) = prepare(&args.run)?;
    let addr = resolve(&args.listen)?;
    config.simulator = SimulatorSpec::Socket {
        host: addr.ip().to_string(),
        port: addr.port(),
    };
    execute(&config, &out)
}

fn resolve(addr: &str) -> Result<SocketAddr, CliError> {
    addr.to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| CliError::Usage(format!("cannot resolve address `{addr}`")))
}

fn execute(config: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let started = Instant::now();
    let result = falsifier::run(config)?;
    let wall = started.elapsed().as_secs_f64();
    write_artifacts(config, &result, out, wall)?;
    eprintln!(
        "{}: {} simulations, {} qualifying rows, {} failed, best score {}, {:.3} s",
        config.mode.name(),
        result.simulations_used,
        result.counterexamples.len(),
        result.failed_runs(),
        result.best.as_ref().map_or("none".to_string(), |b| format!("{:e}", b.2)),
        wall
    );
    Ok(if result.counterexamples.is_empty() {
        EXIT_CLEAN
    } else {
        EXIT_FOUND
    })
}

#[derive(Serialize)]
struct Best<'a> {
    run_id: u64,
    score: f64,
    point: &'a Point,
}

/// Contents of `summary.json`. Wall time is kept out so the file is
/// byte-stable for a fixed configuration; it goes to `timing.json`.
#[derive(Serialize)]
struct Summary<'a> {
    mode: &'static str,
    sampler: &'static str,
    seed: u64,
    budget: usize,
    simulations_used: usize,
    counterexamples: usize,
    failed_runs: usize,
    restarts: usize,
    first_counterexample: Option<u64>,
    best: Option<Best<'a>>,
}

pub fn write_artifacts(config: &RunConfig, result: &RunResult, out: &Path, wall_seconds: f64) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    result.counterexamples.export_csv(&out.join(ERROR_TABLE_FILE))?;
    write_runs(&config.space, result, &out.join(RUNS_FILE))?;

    let summary = Summary {
        mode: config.mode.name(),
        sampler: config.sampler.name(),
        seed: config.seed,
        budget: config.budget,
        simulations_used: result.simulations_used,
        counterexamples: result.counterexamples.len(),
        failed_runs: result.failed_runs(),
        restarts: result.restarts,
        first_counterexample: result.first_counterexample(),
        best: result.best.as_ref().map(|(run_id, point, score)| Best {
            run_id: *run_id,
            score: *score,
            point,
        }),
    };
    let path = out.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;

    let path = out.join(TIMING_FILE);
    let text = serde_json::to_string_pretty(&serde_json::json!({ "wall_seconds": wall_seconds })).expect("timing serializes") + "\n";
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(())
}

fn write_runs(space: &FeatureSpace, result: &RunResult, path: &Path) -> Result<(), CliError> {
    let fail = |e: csv::Error| io_err(path, e);
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    let (ordered, unordered) = space.dimensions();
    let mut header = vec!["run_id".to_string(), "score".into(), "satisfied".into(), "error".into()];
    header.extend(ordered.iter().cloned());
    header.extend(unordered.iter().cloned());
    w.write_record(&header).map_err(fail)?;
    for r in &result.runs {
        let mut rec = vec![
            r.run_id.to_string(),
            r.score.map(format_real).unwrap_or_default(),
            r.satisfied.map(|b| b.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ];
        for p in ordered.iter().chain(&unordered) {
            rec.push(match r.point.get(p) {
                Some(Value::Real(v)) => format_real(*v),
                Some(Value::Atom(a)) => format_atom(a),
                None => String::new(),
            });
        }
        w.write_record(&rec).map_err(fail)?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Reads a space document, or the `space` section of a run configuration.
pub fn load_space(path: &Path) -> Result<FeatureSpace, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file = path.display().to_string();
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::ConfigInvalid {
        file: file.clone(),
        message: e.to_string(),
    })?;
    let doc_value = match value.get("space") {
        Some(s) if value.get("domain").is_none() => s.clone(),
        _ => value,
    };
    let doc: SpaceDocument = serde_path_to_error::deserialize(doc_value).map_err(|e| CliError::ConfigInvalid {
        file: file.clone(),
        message: format!("field `{}`: {}", e.path(), e.inner()),
    })?;
    doc.build().map_err(|e| CliError::ConfigInvalid {
        file,
        message: e.to_string(),
    })
}

fn row_json(table: &ErrorTable, row: &crate::error_table::Row, distance: Option<f64>) -> serde_json::Value {
    let mut v = serde_json::json!({
        "run_id": row.run_id,
        "score": row.score,
        "point": table.point(row),
    });
    if let Some(d) = distance {
        v["distance"] = serde_json::json!(d);
    }
    v
}

/// Runs the requested analyses and returns them as one JSON document.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let space = Arc::new(load_space(&args.space)?);
    let table = ErrorTable::import_csv(space.clone(), &args.table)?;
    let mut report = serde_json::Map::new();
    report.insert("rows".into(), table.len().into());
    if args.pca {
        report.insert("pca".into(), serde_json::to_value(table.pca_analyze()?).expect("report serializes"));
    }
    if let Some(t) = args.recurrent {
        report.insert(
            "recurrent".into(),
            serde_json::to_value(table.recurrent_values(t)?).expect("report serializes"),
        );
    }
    if let Some(kc) = &args.k_closest {
        let anchor: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&kc[0])
            .map_err(|e| CliError::Usage(format!("--k-closest anchor is not a JSON object: {e}")))?;
        let k: usize = kc[1]
            .parse()
            .map_err(|_| CliError::Usage(format!("--k-closest count `{}` is not an integer", kc[1])))?;
        let anchor = space.point_from_json(&anchor).map_err(TableError::from)?;
        let rows: Vec<_> = table
            .select_k_closest(&anchor, k)?
            .into_iter()
            .map(|(r, d)| row_json(&table, r, Some(d)))
            .collect();
        report.insert("k_closest".into(), rows.into());
    }
    if let Some(k) = args.random {
        let mut rng = stream(args.seed, streams::SELECTION);
        let rows: Vec<_> = table
            .select_random(k, &mut rng)?
            .into_iter()
            .map(|r| row_json(&table, r, None))
            .collect();
        report.insert("random".into(), rows.into());
    }
    if let Some(n) = args.pca_samples {
        let mut rng = stream(args.seed, streams::PCA_JITTER);
        let points = table.generate_pca_samples(n, args.scale, &mut rng)?;
        report.insert("pca_samples".into(), serde_json::to_value(points).expect("points serialize"));
    }
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}

/// Connects to a listening toolkit and serves the configuration's
/// in-process simulator until the campaign ends.
pub fn cmd_sim_client(args: &SimClientArgs) -> Result<usize, CliError> {
    let file = args.config.display().to_string();
    let doc = ConfigDocument::load(&args.config)?;
    let config = doc.to_run_config(&file)?;
    let sim = match &config.simulator {
        SimulatorSpec::InProcess { name, params } => {
            let sim = InProcess::from_config(name, params).map_err(FalsifierError::from)?;
            sim.check_space(&config.space).map_err(FalsifierError::from)?;
            sim
        }
        SimulatorSpec::Socket { .. } => {
            return Err(CliError::Usage("sim-client needs an in_process simulator in the configuration".into()))
        }
    };
    let addr = resolve(&args.connect)?;
    let served = protocol::serve_in_process(
        addr,
        &space_signature(&config.space),
        &sim,
        Duration::from_secs(args.patience),
    )?;
    eprintln!("served {served} configurations");
    Ok(served)
}
