//! Cart-pole under a fixed linear state-feedback controller.
//!
//! Dynamics are the classic inverted pendulum on a cart (Barto, Sutton &
//! Anderson), integrated with explicit Euler. Force is
//! `k_x·x + k_x_dot·ẋ + k_theta·θ + k_theta_dot·θ̇`, saturated at
//! `force_limit`.

use std::collections::BTreeMap;

use crate::mtl::Trace;

use super::ParamError;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
/// Gains that balance the nominal pole (0.1 kg, 0.5 m) but lose heavy,
/// long poles under the 10 N force limit.
pub const DEFAULT_GAINS: [f64; 4] = [1.0, 2.3, 30.0, 5.0];
/// State magnitudes are clamped here so diverging runs stay finite.
pub const STATE_CLAMP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleEnv {
    pub x0: f64,
    pub theta0: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartPoleParams {
    pub x0: f64,
    pub theta0: f64,
    pub pole_mass: f64,
    pub pole_half_length: f64,
    pub dt: f64,
    pub steps: usize,
    pub force_limit: f64,
    pub gains: [f64; 4],
}

impl Default for CartPoleParams {
    fn default() -> Self {
        CartPoleParams {
            x0: 0.0,
            theta0: 0.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            dt: 0.02,
            steps: 500,
            force_limit: 10.0,
            gains: DEFAULT_GAINS,
        }
    }
}

pub const PARAM_NAMES: &[&str] = &[
    "x0",
    "theta0",
    "pole_mass",
    "pole_half_length",
    "dt",
    "steps",
    "force_limit",
    "k_x",
    "k_x_dot",
    "k_theta",
    "k_theta_dot",
];

impl CartPoleParams {
    pub fn from_values(values: &BTreeMap<String, f64>) -> Result<Self, ParamError> {
        let mut p = CartPoleParams::default();
        for (name, &v) in values {
            match name.as_str() {
                "x0" => p.x0 = v,
                "theta0" => p.theta0 = v,
                "pole_mass" => p.pole_mass = v,
                "pole_half_length" => p.pole_half_length = v,
                "dt" => p.dt = v,
                "steps" => p.steps = as_count(name, v)?,
                "force_limit" => p.force_limit = v,
                "k_x" => p.gains[0] = v,
                "k_x_dot" => p.gains[1] = v,
                "k_theta" => p.gains[2] = v,
                "k_theta_dot" => p.gains[3] = v,
                other => return Err(ParamError::Unknown(other.to_string())),
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let all = [
            self.x0,
            self.theta0,
            self.pole_mass,
            self.pole_half_length,
            self.dt,
            self.force_limit,
        ];
        if all.iter().chain(&self.gains).any(|v| !v.is_finite()) {
            return Err(ParamError::Invalid("non-finite cart-pole parameter".into()));
        }
        if self.pole_mass <= 0.0 || self.pole_half_length <= 0.0 {
            return Err(ParamError::Invalid("pole mass and half-length must be positive".into()));
        }
        if self.dt <= 0.0 || self.steps == 0 || self.force_limit <= 0.0 {
            return Err(ParamError::Invalid("need dt > 0, steps >= 1, force_limit > 0".into()));
        }
        Ok(())
    }

    pub fn with_env(&self, env: &CartPoleEnv) -> Self {
        CartPoleParams {
            x0: env.x0,
            theta0: env.theta0,
            pole_mass: env.pole_mass,
            pole_half_length: env.pole_half_length,
            ..self.clone()
        }
    }
}

pub(crate) fn as_count(name: &str, v: f64) -> Result<usize, ParamError> {
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e7 {
        Ok(v as usize)
    } else {
        Err(ParamError::Invalid(format!("`{name}` must be a positive integer, got {v}")))
    }
}

/// Positions `x` and angles in degrees `theta_deg` for `steps + 1` samples.
fn rollout(p: &CartPoleParams) -> (Vec<f64>, Vec<f64>) {
    let total_mass = CART_MASS + p.pole_mass;
    let pole_moment = p.pole_mass * p.pole_half_length;
    let [kx, kxd, kth, kthd] = p.gains;

    let (mut x, mut x_dot, mut theta, mut theta_dot) = (p.x0, 0.0_f64, p.theta0, 0.0_f64);
    let mut xs = Vec::with_capacity(p.steps + 1);
    let mut thetas = Vec::with_capacity(p.steps + 1);
    for step in 0..=p.steps {
        xs.push(x);
        thetas.push(theta.to_degrees());
        if step == p.steps {
            break;
        }
        let force = (kx * x + kxd * x_dot + kth * theta + kthd * theta_dot)
            .clamp(-p.force_limit, p.force_limit);
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_moment * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;

        x = (x + p.dt * x_dot).clamp(-STATE_CLAMP, STATE_CLAMP);
        x_dot = (x_dot + p.dt * x_acc).clamp(-STATE_CLAMP, STATE_CLAMP);
        theta = (theta + p.dt * theta_dot).clamp(-STATE_CLAMP, STATE_CLAMP);
        theta_dot = (theta_dot + p.dt * theta_acc).clamp(-STATE_CLAMP, STATE_CLAMP);
    }
    (xs, thetas)
}

pub fn cartpole_simulate(p: &CartPoleParams) -> Result<Trace, ParamError> {
    cartpole_simulate_envs(p, &[])
}

/// Runs every environment with the controller of `p` and lays the runs end
/// to end in time. With no environments, runs `p` itself.
pub fn cartpole_simulate_envs(p: &CartPoleParams, envs: &[CartPoleEnv]) -> Result<Trace, ParamError> {
    p.validate()?;
    let runs: Vec<CartPoleParams> = if envs.is_empty() {
        vec![p.clone()]
    } else {
        envs.iter().map(|e| p.with_env(e)).collect()
    };
    let mut xs = Vec::new();
    let mut thetas = Vec::new();
    for run in &runs {
        run.validate()?;
        let (x, th) = rollout(run);
        xs.extend(x);
        thetas.extend(th);
    }
    let times = (0..xs.len()).map(|k| k as f64 * p.dt).collect();
    let mut signals = BTreeMap::new();
    signals.insert("x".to_string(), xs);
    signals.insert("theta_deg".to_string(), thetas);
    Trace::new(times, signals).map_err(|e| ParamError::Invalid(e.to_string()))
}
