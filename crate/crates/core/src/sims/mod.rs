//! Simulator interface and the bundled in-process reference simulators.

pub mod cartpole;
pub mod lanechange;

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::feature_space::{FeatureSpace, Point, Value};
use crate::mtl::Trace;
use crate::protocol::ProtocolError;

pub use cartpole::{cartpole_simulate, cartpole_simulate_envs, CartPoleEnv, CartPoleParams};
pub use lanechange::{lanechange_simulate, LaneChangeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("unknown simulator `{0}`")]
    UnknownModel(String),
    #[error("unknown simulator parameter `{0}`")]
    Unknown(String),
    #[error("invalid simulator parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum SimulatorError {
    /// The simulator ran but could not produce a trace for this point.
    #[error("run {run_id}: simulator reported: {message}")]
    Reported { run_id: u64, message: String },
    /// The link to the simulator is broken; the campaign cannot continue.
    #[error("run {run_id}: {source}")]
    Transport {
        run_id: u64,
        #[source]
        source: ProtocolError,
    },
}

/// Anything that turns a configuration into a trajectory.
pub trait Simulator {
    fn simulate(&mut self, run_id: u64, point: &Point) -> Result<Trace, SimulatorError>;
}

impl<S: Simulator + ?Sized> Simulator for Box<S> {
    fn simulate(&mut self, run_id: u64, point: &Point) -> Result<Trace, SimulatorError> {
        (**self).simulate(run_id, point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    CartPole,
    LaneChange,
}

impl Model {
    pub fn from_name(name: &str) -> Result<Self, ParamError> {
        match name {
            "cartpole" => Ok(Model::CartPole),
            "lanechange" => Ok(Model::LaneChange),
            other => Err(ParamError::UnknownModel(other.to_string())),
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Model::CartPole => cartpole::PARAM_NAMES,
            Model::LaneChange => lanechange::PARAM_NAMES,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvDoc {
    x0: f64,
    theta0: f64,
    pole_mass: f64,
    pole_half_length: f64,
}

/// A reference simulator with fixed parameters; point assignments override
/// parameters of the same name.
#[derive(Debug, Clone, PartialEq)]
pub struct InProcess {
    model: Model,
    base: BTreeMap<String, f64>,
    environments: Vec<CartPoleEnv>,
}

impl InProcess {
    pub fn new(model: Model) -> Self {
        InProcess {
            model,
            base: BTreeMap::new(),
            environments: Vec::new(),
        }
    }

    /// `params` holds numbers keyed by parameter name. The cart-pole also
    /// accepts `environments`, a list of `{x0, theta0, pole_mass,
    /// pole_half_length}` objects: each simulation then runs the controller
    /// in every environment back to back.
    pub fn from_config(
        name: &str,
        params: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<Self, ParamError> {
        let mut sim = InProcess::new(Model::from_name(name)?);
        for (key, value) in params {
            if key == "environments" && sim.model == Model::CartPole {
                let docs: Vec<EnvDoc> = serde_json::from_value(value.clone())
                    .map_err(|e| ParamError::Invalid(format!("environments: {e}")))?;
                sim.environments = docs
                    .into_iter()
                    .map(|d| CartPoleEnv {
                        x0: d.x0,
                        theta0: d.theta0,
                        pole_mass: d.pole_mass,
                        pole_half_length: d.pole_half_length,
                    })
                    .collect();
                continue;
            }
            if !sim.model.param_names().contains(&key.as_str()) {
                return Err(ParamError::Unknown(key.clone()));
            }
            let v = value
                .as_f64()
                .ok_or_else(|| ParamError::Invalid(format!("`{key}` must be a number")))?;
            sim.base.insert(key.clone(), v);
        }
        // Surface bad fixed parameters now rather than on the first run.
        sim.simulate_values(&BTreeMap::new())?;
        Ok(sim)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Parameter addressed by a leaf path: the path itself, or the path
    /// without its trailing `.0` (a one-dimensional box named after the
    /// parameter).
    pub fn param_for_path<'p>(&self, path: &'p str) -> Option<&'p str> {
        let names = self.model.param_names();
        if names.contains(&path) {
            return Some(path);
        }
        path.strip_suffix(".0").filter(|p| names.contains(p))
    }

    /// Every leaf of `space` must address a numeric parameter of this model.
    pub fn check_space(&self, space: &FeatureSpace) -> Result<(), ParamError> {
        if let Some(leaf) = space.unordered().first() {
            return Err(ParamError::Invalid(format!(
                "finite-set leaf `{}` has no meaning for this simulator",
                leaf.path
            )));
        }
        for leaf in space.ordered() {
            if self.param_for_path(&leaf.path).is_none() {
                return Err(ParamError::Unknown(leaf.path.clone()));
            }
        }
        Ok(())
    }

    /// Simulates with leaf-path assignments (as sent over the wire).
    pub fn simulate_assignments(&self, assignments: &BTreeMap<String, f64>) -> Result<Trace, ParamError> {
        let mut values = BTreeMap::new();
        for (path, v) in assignments {
            let name = self
                .param_for_path(path)
                .ok_or_else(|| ParamError::Unknown(path.clone()))?;
            values.insert(name.to_string(), *v);
        }
        self.simulate_values(&values)
    }

    pub fn simulate_values(&self, overrides: &BTreeMap<String, f64>) -> Result<Trace, ParamError> {
        let mut values = self.base.clone();
        values.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        match self.model {
            Model::CartPole => {
                let p = CartPoleParams::from_values(&values)?;
                cartpole_simulate_envs(&p, &self.environments)
            }
            Model::LaneChange => lanechange_simulate(&LaneChangeParams::from_values(&values)?),
        }
    }

    pub fn simulate_point(&self, point: &Point) -> Result<Trace, ParamError> {
        let mut values = BTreeMap::new();
        for (path, v) in point.iter() {
            match v {
                Value::Real(x) => {
                    values.insert(path.clone(), *x);
                }
                Value::Atom(a) => {
                    return Err(ParamError::Invalid(format!("`{path}` = `{a}` is not numeric")))
                }
            }
        }
        self.simulate_assignments(&values)
    }
}

impl Simulator for InProcess {
    fn simulate(&mut self, run_id: u64, point: &Point) -> Result<Trace, SimulatorError> {
        self.simulate_point(point).map_err(|e| SimulatorError::Reported {
            run_id,
            message: e.to_string(),
        })
    }
}

/// Adapter turning a closure into a [`Simulator`].
pub struct FnSimulator<F>(pub F);

impl<F> Simulator for FnSimulator<F>
where
    F: FnMut(&Point) -> Result<Trace, String>,
{
    fn simulate(&mut self, run_id: u64, point: &Point) -> Result<Trace, SimulatorError> {
        (self.0)(point).map_err(|message| SimulatorError::Reported { run_id, message })
    }
}
