use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::feature_space::{pick_weighted, FeatureSpace, Point};
use crate::rng::SimRng;

use super::{prior_draw, rejecting, standard_normal, Feedback, Proposal, SamplerError};

/// Tries at a truncated Gaussian draw before falling back to clipping.
const TRUNCATION_TRIES: usize = 100;
const SMOOTHING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossEntropySettings {
    pub batch: usize,
    pub elite_fraction: f64,
    /// Lower bound on refit stddevs, as a fraction of leaf width.
    pub stddev_floor: f64,
    /// Weight of the elite stddev against the previous one at each refit;
    /// 1 disables smoothing. The mean is never smoothed.
    pub stddev_smoothing: f64,
}

impl Default for CrossEntropySettings {
    fn default() -> Self {
        CrossEntropySettings {
            batch: 20,
            elite_fraction: 0.1,
            stddev_floor: 1e-3,
            stddev_smoothing: 0.5,
        }
    }
}

/// Fitted proposal distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
struct Sample {
    reals: Vec<f64>,
    atoms: Vec<usize>,
    score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    settings: CrossEntropySettings,
    rng: SimRng,
    /// `None` until the first batch is complete; until then draws come
    /// from the prior.
    fitted: Option<Fitted>,
    batch: Vec<Sample>,
    pending: Option<Proposal>,
    refits: usize,
    widths: Vec<f64>,
    categories: Vec<usize>,
}

impl CrossEntropy {
    pub fn new(settings: CrossEntropySettings, space: &FeatureSpace, rng: SimRng) -> Result<Self, SamplerError> {
        if settings.batch < 2 {
            return Err(SamplerError::Settings("cross-entropy batch must be at least 2".into()));
        }
        if !(settings.elite_fraction > 0.0 && settings.elite_fraction <= 1.0) {
            return Err(SamplerError::Settings("elite_fraction must lie in (0, 1]".into()));
        }
        if !(settings.stddev_smoothing > 0.0 && settings.stddev_smoothing <= 1.0) {
            return Err(SamplerError::Settings("stddev_smoothing must lie in (0, 1]".into()));
        }
        if !(settings.stddev_floor > 0.0 && settings.stddev_floor.is_finite()) {
            return Err(SamplerError::Settings("stddev_floor must be positive".into()));
        }
        Ok(CrossEntropy {
            settings,
            rng,
            fitted: None,
            batch: Vec::new(),
            pending: None,
            refits: 0,
            widths: space.ordered().iter().map(|l| l.width()).collect(),
            categories: space.unordered().iter().map(|l| l.values.len()).collect(),
        })
    }

    pub fn fitted(&self) -> Option<&Fitted> {
        self.fitted.as_ref()
    }

    pub fn refits(&self) -> usize {
        self.refits
    }

    /// Number of elites kept from a batch of `n`.
    pub fn elite_count(&self, n: usize) -> usize {
        let k = (self.settings.elite_fraction * n as f64 - 1e-9).ceil() as usize;
        k.max(2).min(n)
    }

    pub(crate) fn next_point(&mut self, space: &FeatureSpace) -> Result<Point, SamplerError> {
        let proposal = match &self.fitted {
            None => rejecting(space, &mut self.rng, |rng| prior_draw(space, rng))?,
            Some(fit) => {
                let fit = fit.clone();
                rejecting(space, &mut self.rng, |rng| Ok(draw_fitted(space, &fit, rng)))?
            }
        };
        let point = proposal.point.clone();
        self.pending = Some(proposal);
        Ok(point)
    }

    pub(crate) fn observe(&mut self, fb: &Feedback) {
        let Some(p) = self.pending.take_if(|p| p.point == fb.point) else {
            return;
        };
        self.batch.push(Sample {
            reals: p.reals,
            atoms: p.atoms,
            score: fb.score,
        });
        if self.batch.len() >= self.settings.batch {
            let batch = std::mem::take(&mut self.batch);
            self.refit(&batch);
        }
    }

    fn refit(&mut self, batch: &[Sample]) {
        let mut order: Vec<usize> = (0..batch.len()).collect();
        order.sort_by(|&a, &b| batch[a].score.total_cmp(&batch[b].score));
        let elites: Vec<&Sample> = order[..self.elite_count(batch.len())]
            .iter()
            .map(|&i| &batch[i])
            .collect();
        let n = elites.len() as f64;
        let dims = self.widths.len();
        let mut mean = vec![0.0; dims];
        let mut stddev = vec![0.0; dims];
        for i in 0..dims {
            let m = elites.iter().map(|e| e.reals[i]).sum::<f64>() / n;
            let elite_sd = population_stddev(elites.iter().map(|e| e.reals[i]));
            let previous = match &self.fitted {
                Some(f) => f.stddev[i],
                None => population_stddev(batch.iter().map(|e| e.reals[i])),
            };
            let beta = self.settings.stddev_smoothing;
            mean[i] = m;
            stddev[i] = (beta * elite_sd + (1.0 - beta) * previous).max(self.settings.stddev_floor * self.widths[i]);
        }
        let mut weights = Vec::new();
        for (j, &k) in self.categories.iter().enumerate() {
            let mut w = vec![SMOOTHING; k];
            for e in &elites {
                w[e.atoms[j]] += 1.0;
            }
            weights.push(w);
        }
        self.fitted = Some(Fitted { mean, stddev, weights });
        self.refits += 1;
    }
}

fn population_stddev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let m = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Draw from a fitted proposal. Stddevs are floored against leaf widths and
/// zero-prior categories stay impossible.
fn draw_fitted(space: &FeatureSpace, fit: &Fitted, rng: &mut SimRng) -> (Vec<f64>, Vec<usize>) {
    let reals = space
        .ordered()
        .iter()
        .enumerate()
        .map(|(i, leaf)| {
            let (m, s) = (fit.mean[i], fit.stddev[i]);
            for _ in 0..TRUNCATION_TRIES {
                let v = m + s * standard_normal(rng);
                if leaf.contains(v) {
                    return v;
                }
            }
            leaf.clip(m + s * standard_normal(rng))
        })
        .collect();
    let atoms = space
        .unordered()
        .iter()
        .enumerate()
        .map(|(j, leaf)| {
            let w: Vec<f64> = fit.weights[j]
                .iter()
                .zip(&leaf.weights)
                .map(|(&w, &prior)| if prior > 0.0 { w } else { 0.0 })
                .collect();
            pick_weighted(&w, rng.random::<f64>())
        })
        .collect();
    (reals, atoms)
}
