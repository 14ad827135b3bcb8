use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::feature_space::{FeatureSpace, Point};
use crate::rng::SimRng;

use super::{prior_draw, rejecting, standard_normal, Feedback, Proposal, SamplerError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealingSettings {
    /// Proposal stddev as a fraction of each leaf's width.
    pub step_fraction: f64,
    /// Geometric cooling factor applied after every observation.
    pub cooling: f64,
    /// Prior samples used to estimate the initial temperature.
    pub warmup: usize,
    /// Probability of redrawing each unordered leaf from its prior.
    pub redraw_probability: f64,
}

impl Default for AnnealingSettings {
    fn default() -> Self {
        AnnealingSettings {
            step_fraction: 0.1,
            cooling: 0.97,
            warmup: 5,
            redraw_probability: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct State {
    reals: Vec<f64>,
    atoms: Vec<usize>,
    score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annealing {
    settings: AnnealingSettings,
    rng: SimRng,
    current: Option<State>,
    /// `None` until warm-up ends.
    temperature: Option<f64>,
    warmup_scores: Vec<f64>,
    pending: Option<Proposal>,
}

/// Metropolis rule for minimization.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else if temperature <= 0.0 {
        0.0
    } else {
        (-delta / temperature).exp()
    }
}

impl Annealing {
    pub fn new(settings: AnnealingSettings, rng: SimRng) -> Result<Self, SamplerError> {
        let s = &settings;
        if !(s.step_fraction > 0.0 && s.cooling > 0.0 && s.cooling <= 1.0) {
            return Err(SamplerError::Settings(
                "annealing needs step_fraction > 0 and cooling in (0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&s.redraw_probability) {
            return Err(SamplerError::Settings("redraw_probability must lie in [0, 1]".into()));
        }
        Ok(Annealing {
            settings,
            rng,
            current: None,
            temperature: None,
            warmup_scores: Vec::new(),
            pending: None,
        })
    }

    pub fn temperature(&self) -> Option<f64> {
        self.temperature
    }

    pub fn current_score(&self) -> Option<f64> {
        self.current.as_ref().map(|c| c.score)
    }

    pub(crate) fn next_point(&mut self, space: &FeatureSpace) -> Result<Point, SamplerError> {
        let proposal = match (&self.current, self.temperature) {
            (Some(cur), Some(_)) => {
                let cur = cur.clone();
                let step = self.settings.step_fraction;
                let redraw = self.settings.redraw_probability;
                rejecting(space, &mut self.rng, |rng| {
                    let reals = space
                        .ordered()
                        .iter()
                        .zip(&cur.reals)
                        .map(|(leaf, &x)| leaf.clip(x + step * leaf.width() * standard_normal(rng)))
                        .collect();
                    let atoms = cur
                        .atoms
                        .iter()
                        .enumerate()
                        .map(|(j, &k)| {
                            if rng.random::<f64>() < redraw {
                                space.draw_atom_index(j, rng)
                            } else {
                                k
                            }
                        })
                        .collect();
                    Ok((reals, atoms))
                })?
            }
            _ => rejecting(space, &mut self.rng, |rng| prior_draw(space, rng))?,
        };
        let point = proposal.point.clone();
        self.pending = Some(proposal);
        Ok(point)
    }

    pub(crate) fn observe(&mut self, fb: &Feedback) {
        let Some(p) = self.pending.take_if(|p| p.point == fb.point) else {
            return;
        };
        let candidate = State {
            reals: p.reals,
            atoms: p.atoms,
            score: fb.score,
        };
        match self.temperature {
            None => {
                self.warmup_scores.push(fb.score);
                if self.current.as_ref().is_none_or(|c| fb.score < c.score) {
                    self.current = Some(candidate);
                }
                if self.warmup_scores.len() >= self.settings.warmup.max(1) {
                    let n = self.warmup_scores.len() as f64;
                    let t0 = self.warmup_scores.iter().map(|s| s.abs()).sum::<f64>() / n;
                    self.temperature = Some(if t0 > 0.0 { t0 } else { 1.0 });
                }
            }
            Some(t) => {
                let cur = self.current.as_ref().map_or(f64::INFINITY, |c| c.score);
                let u: f64 = self.rng.random();
                if u < acceptance_probability(fb.score - cur, t) {
                    self.current = Some(candidate);
                }
                self.temperature = Some(t * self.settings.cooling);
            }
        }
    }
}
