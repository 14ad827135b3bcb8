//! The sample → simulate → monitor → record loop.

use std::sync::Arc;
use std::time::Duration;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error_table::{ErrorTable, TableError};
use crate::feature_space::{FeatureSpace, Point, SpaceError};
use crate::mtl::{robustness, satisfies, Formula, MonitorError, Trace};
use crate::protocol::{space_signature, ProtocolError, SimServer};
use crate::rng::{stream, streams};
use crate::samplers::{Feedback, Sampler, SamplerError, SamplerSpec};
use crate::sims::{InProcess, ParamError, Simulator, SimulatorError};

/// Scores are clamped to this magnitude so that vacuous (infinite)
/// robustness stays usable as sampler feedback and table data.
pub const SCORE_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Falsify,
    Fuzz,
    Synthesize,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Falsify => "falsify",
            Mode::Fuzz => "fuzz",
            Mode::Synthesize => "synthesize",
        }
    }
}

/// What synthesis maximizes. Falsification always uses the property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// Robustness of the property.
    #[default]
    Robustness,
    /// Last sample of a signal.
    FinalValue { signal: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulatorSpec {
    InProcess {
        name: String,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
    },
    /// Listen on `host:port` for one external simulator.
    Socket { host: String, port: u16 },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub space: Arc<FeatureSpace>,
    pub property: Formula,
    pub objective: Objective,
    pub sampler: SamplerSpec,
    pub mode: Mode,
    pub budget: usize,
    pub stop_on_first: bool,
    pub seed: u64,
    pub simulator: SimulatorSpec,
    /// Rebuild the sampler after this many runs without a new best score.
    pub restart_after: Option<usize>,
    /// How long to wait for a socket simulator to connect or reply.
    pub timeout: Duration,
}

#[derive(Debug, Error)]
pub enum FalsifierError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error("run {run_id}: {source}")]
    Monitor {
        run_id: u64,
        #[source]
        source: MonitorError,
    },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// One simulation. `score` and `satisfied` are absent when the simulator
/// reported an error for this point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: u64,
    pub point: Point,
    pub score: Option<f64>,
    pub satisfied: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Rows with score < 0: violations when falsifying or fuzzing, points
    /// meeting the objective when synthesizing.
    pub counterexamples: ErrorTable,
    pub runs: Vec<RunRecord>,
    /// Lowest score seen, with its run id.
    pub best: Option<(u64, Point, f64)>,
    pub simulations_used: usize,
    pub restarts: usize,
}

impl RunResult {
    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }

    /// Run id of the first qualifying row, if any.
    pub fn first_counterexample(&self) -> Option<u64> {
        self.counterexamples.rows().first().map(|r| r.run_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub trace: Trace,
    pub score: f64,
    pub satisfied: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), FalsifierError> {
        if self.budget == 0 {
            return Err(FalsifierError::InvalidConfig("budget must be at least 1".into()));
        }
        if let Objective::FinalValue { signal } = &self.objective {
            if signal.is_empty() {
                return Err(FalsifierError::InvalidConfig("objective signal is empty".into()));
            }
        }
        if self.restart_after == Some(0) {
            return Err(FalsifierError::InvalidConfig("restart_after must be at least 1".into()));
        }
        Ok(())
    }

    /// Score of a trace (lower is closer to violation) and the Boolean
    /// verdict of the property.
    pub fn score_trace(&self, trace: &Trace, run_id: u64) -> Result<(f64, bool), FalsifierError> {
        let monitor = |source| FalsifierError::Monitor { run_id, source };
        let satisfied = satisfies(&self.property, trace, 0).map_err(monitor)?;
        let raw = match (self.mode, &self.objective) {
            (Mode::Synthesize, Objective::Robustness) => -robustness(&self.property, trace, 0).map_err(monitor)?,
            (Mode::Synthesize, Objective::FinalValue { signal }) => {
                let s = trace
                    .signal(signal)
                    .ok_or_else(|| monitor(MonitorError::UnknownSignal(signal.clone())))?;
                -s[s.len() - 1]
            }
            _ => robustness(&self.property, trace, 0).map_err(monitor)?,
        };
        Ok((raw.clamp(-SCORE_LIMIT, SCORE_LIMIT), satisfied))
    }

    fn sampler(&self, restarts: usize) -> Result<Sampler, SamplerError> {
        let id = if restarts == 0 {
            streams::SAMPLER
        } else {
            streams::RESTART_BASE + restarts as u64
        };
        Sampler::new(&self.sampler, &self.space, stream(self.seed, id))
    }
}

/// Runs a campaign against the simulator named in the configuration.
pub fn run(config: &RunConfig) -> Result<RunResult, FalsifierError> {
    config.validate()?;
    match &config.simulator {
        SimulatorSpec::InProcess { name, params } => {
            let mut sim = InProcess::from_config(name, params)?;
            sim.check_space(&config.space)?;
            run_with(config, &mut sim)
        }
        SimulatorSpec::Socket { host, port } => {
            let server = SimServer::bind(format!("{host}:{port}"))?;
            info!("waiting for a simulator on {}", server.local_addr());
            let mut conn = server.accept(&space_signature(&config.space), config.timeout)?;
            let result = run_with(config, &mut conn);
            conn.close().ok();
            result
        }
    }
}

/// Relative gain a score needs over the best since the last restart to
/// reset the stagnation counter.
pub const STAGNATION_TOLERANCE: f64 = 1e-3;

fn improves(score: f64, best: f64) -> bool {
    best.is_infinite() || score < best - STAGNATION_TOLERANCE * best.abs()
}

/// Runs a campaign against an already connected simulator.
pub fn run_with(config: &RunConfig, sim: &mut dyn Simulator) -> Result<RunResult, FalsifierError> {
    config.validate()?;
    let space = &config.space;
    let mut sampler = config.sampler(0)?;
    let mut table = ErrorTable::new(space.clone());
    let mut runs = Vec::new();
    let mut best: Option<(u64, Point, f64)> = None;
    let mut restarts = 0;
    let mut best_since_restart = f64::INFINITY;
    let mut stale = 0;

    for k in 0..config.budget {
        let run_id = k as u64 + 1;
        let point = sampler.next_point(space)?;
        let trace = match sim.simulate(run_id, &point) {
            Ok(t) => t,
            Err(SimulatorError::Reported { message, .. }) => {
                warn!("run {run_id} failed: {message}");
                runs.push(RunRecord {
                    run_id,
                    point,
                    score: None,
                    satisfied: None,
                    error: Some(message),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let (score, satisfied) = config.score_trace(&trace, run_id)?;
        debug!("run {run_id}: score {score:e}");
        if config.mode != Mode::Fuzz {
            sampler.observe(&Feedback {
                point: point.clone(),
                score,
            });
        }
        let qualifies = score < 0.0;
        if qualifies {
            table.insert(&point, score, run_id)?;
        }
        if best.as_ref().is_none_or(|b| score < b.2) {
            best = Some((run_id, point.clone(), score));
        }
        runs.push(RunRecord {
            run_id,
            point,
            score: Some(score),
            satisfied: Some(satisfied),
            error: None,
        });
        if qualifies && config.stop_on_first {
            break;
        }
        if let (Some(limit), false) = (config.restart_after, config.mode == Mode::Fuzz) {
            if improves(score, best_since_restart) {
                best_since_restart = score;
                stale = 0;
            } else {
                stale += 1;
            }
            if stale >= limit {
                restarts += 1;
                info!("restarting sampler after {stale} runs without improvement");
                sampler = config.sampler(restarts)?;
                best_since_restart = f64::INFINITY;
                stale = 0;
            }
        }
    }
    Ok(RunResult {
        counterexamples: table,
        simulations_used: runs.len(),
        runs,
        best,
        restarts,
    })
}

/// Simulates one point and scores it.
pub fn replay(config: &RunConfig, sim: &mut dyn Simulator, point: &Point) -> Result<Replay, FalsifierError> {
    config.space.check_point(point)?;
    let trace = sim.simulate(0, point)?;
    let (score, satisfied) = config.score_trace(&trace, 0)?;
    Ok(Replay {
        trace,
        score,
        satisfied,
    })
}
