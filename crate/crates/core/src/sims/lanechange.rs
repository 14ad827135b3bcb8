//! Kinematic lane change around a stopped obstacle.
//!
//! The ego car drives at constant speed toward an obstacle `initial_gap`
//! metres ahead. Once the longitudinal distance drops below
//! `reaction_distance` it steers toward the next lane with a spring-damper
//! lateral law `ÿ = gain·(lane_width − y) − damping·ẏ`.
//!
//! `gap` is the longitudinal distance while the ego still overlaps the
//! obstacle laterally (`|y − obstacle_offset| < clearance`); from the first
//! sample where it no longer overlaps, `gap` stays at the distance it had
//! then. A negative gap means the ego reached the obstacle while
//! overlapping it.

use std::collections::BTreeMap;

use crate::mtl::Trace;

use super::cartpole::as_count;
use super::ParamError;

#[derive(Debug, Clone, PartialEq)]
pub struct LaneChangeParams {
    pub ego_speed: f64,
    pub reaction_distance: f64,
    pub obstacle_offset: f64,
    pub lateral_gain: f64,
    pub initial_gap: f64,
    pub lane_width: f64,
    pub clearance: f64,
    pub damping: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Default for LaneChangeParams {
    fn default() -> Self {
        LaneChangeParams {
            ego_speed: 15.0,
            reaction_distance: 20.0,
            obstacle_offset: 0.0,
            lateral_gain: 4.0,
            initial_gap: 60.0,
            lane_width: 3.5,
            clearance: 2.0,
            damping: 4.0,
            dt: 0.05,
            steps: 200,
        }
    }
}

pub const PARAM_NAMES: &[&str] = &[
    "ego_speed",
    "reaction_distance",
    "obstacle_offset",
    "lateral_gain",
    "initial_gap",
    "lane_width",
    "clearance",
    "damping",
    "dt",
    "steps",
];

impl LaneChangeParams {
    pub fn from_values(values: &BTreeMap<String, f64>) -> Result<Self, ParamError> {
        let mut p = LaneChangeParams::default();
        for (name, &v) in values {
            match name.as_str() {
                "ego_speed" => p.ego_speed = v,
                "reaction_distance" => p.reaction_distance = v,
                "obstacle_offset" => p.obstacle_offset = v,
                "lateral_gain" => p.lateral_gain = v,
                "initial_gap" => p.initial_gap = v,
                "lane_width" => p.lane_width = v,
                "clearance" => p.clearance = v,
                "damping" => p.damping = v,
                "dt" => p.dt = v,
                "steps" => p.steps = as_count(name, v)?,
                other => return Err(ParamError::Unknown(other.to_string())),
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let all = [
            self.ego_speed,
            self.reaction_distance,
            self.obstacle_offset,
            self.lateral_gain,
            self.initial_gap,
            self.lane_width,
            self.clearance,
            self.damping,
            self.dt,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ParamError::Invalid("non-finite lane-change parameter".into()));
        }
        if self.ego_speed < 0.0 || self.reaction_distance <= 0.0 {
            return Err(ParamError::Invalid("need ego_speed >= 0 and reaction_distance > 0".into()));
        }
        if self.lateral_gain < 0.0 || self.damping < 0.0 || self.clearance <= 0.0 {
            return Err(ParamError::Invalid("need lateral_gain, damping >= 0 and clearance > 0".into()));
        }
        if self.dt <= 0.0 || self.steps == 0 {
            return Err(ParamError::Invalid("need dt > 0 and steps >= 1".into()));
        }
        Ok(())
    }
}

pub fn lanechange_simulate(p: &LaneChangeParams) -> Result<Trace, ParamError> {
    p.validate()?;
    let n = p.steps + 1;
    let mut gaps = Vec::with_capacity(n);
    let mut lateral = Vec::with_capacity(n);
    let mut overshoot = Vec::with_capacity(n);

    let (mut y, mut y_dot) = (0.0_f64, 0.0_f64);
    let mut triggered = false;
    let mut frozen_gap: Option<f64> = None;
    for step in 0..n {
        let t = step as f64 * p.dt;
        let dx = p.initial_gap - p.ego_speed * t;
        if frozen_gap.is_none() && (y - p.obstacle_offset).abs() >= p.clearance {
            frozen_gap = Some(dx);
        }
        gaps.push(frozen_gap.unwrap_or(dx));
        lateral.push(y);
        overshoot.push((y - p.lane_width).max(0.0));

        triggered |= dx < p.reaction_distance;
        if triggered {
            let y_acc = p.lateral_gain * (p.lane_width - y) - p.damping * y_dot;
            y_dot += p.dt * y_acc;
            y += p.dt * y_dot;
        }
    }
    let times = (0..n).map(|k| k as f64 * p.dt).collect();
    let mut signals = BTreeMap::new();
    signals.insert("gap".to_string(), gaps);
    signals.insert("lateral_offset".to_string(), lateral);
    signals.insert("overshoot".to_string(), overshoot);
    Trace::new(times, signals).map_err(|e| ParamError::Invalid(e.to_string()))
}
