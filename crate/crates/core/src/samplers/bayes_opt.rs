use serde::{Deserialize, Serialize};

use crate::feature_space::{FeatureSpace, Point};
use crate::rng::SimRng;

use super::gp::{expected_improvement, GaussianProcess};
use super::{prior_draw, rejecting, standard_normal, Feedback, Proposal, SamplerError};

/// Local refinement around the best random candidate: perturbation scales
/// (fractions of leaf width) and draws per scale.
const REFINE_SCALES: [f64; 3] = [0.05, 0.01, 0.002];
const REFINE_DRAWS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BayesOptSettings {
    /// Kernel length-scale as a fraction of leaf width.
    pub length_scale: f64,
    pub candidates: usize,
    pub jitter: f64,
    pub jitter_cap: f64,
    /// Prior draws before the first model-based proposal.
    pub initial: usize,
}

impl Default for BayesOptSettings {
    fn default() -> Self {
        BayesOptSettings {
            length_scale: 0.2,
            candidates: 256,
            jitter: 1e-6,
            jitter_cap: 1e-2,
            initial: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesOpt {
    settings: BayesOptSettings,
    rng: SimRng,
    length_scales: Vec<f64>,
    history: Vec<(Vec<f64>, f64)>,
    pending: Option<Proposal>,
}

impl BayesOpt {
    pub fn new(settings: BayesOptSettings, space: &FeatureSpace, rng: SimRng) -> Result<Self, SamplerError> {
        let s = &settings;
        if !(s.length_scale > 0.0 && s.candidates > 0) {
            return Err(SamplerError::Settings("need length_scale > 0 and candidates >= 1".into()));
        }
        if !(s.jitter > 0.0 && s.jitter <= s.jitter_cap) {
            return Err(SamplerError::Settings("need 0 < jitter <= jitter_cap".into()));
        }
        let length_scales = space
            .ordered()
            .iter()
            .map(|l| s.length_scale * if l.width() > 0.0 { l.width() } else { 1.0 })
            .collect();
        Ok(BayesOpt {
            settings,
            rng,
            length_scales,
            history: Vec::new(),
            pending: None,
        })
    }

    pub fn history(&self) -> &[(Vec<f64>, f64)] {
        &self.history
    }

    /// Posterior over the current history.
    pub fn posterior(&self) -> Result<GaussianProcess, SamplerError> {
        let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = self.history.iter().cloned().unzip();
        GaussianProcess::fit(&xs, &ys, &self.length_scales, self.settings.jitter, self.settings.jitter_cap)
    }

    pub(crate) fn next_point(&mut self, space: &FeatureSpace) -> Result<Point, SamplerError> {
        let proposal = if self.history.len() < self.settings.initial.max(1) || space.ordered().is_empty() {
            rejecting(space, &mut self.rng, |rng| prior_draw(space, rng))?
        } else {
            self.propose(space)?
        };
        let point = proposal.point.clone();
        self.pending = Some(proposal);
        Ok(point)
    }

    /// Maximizes expected improvement over random prior candidates, then
    /// refines the winner with shrinking Gaussian perturbations.
    fn propose(&mut self, space: &FeatureSpace) -> Result<Proposal, SamplerError> {
        let gp = self.posterior()?;
        let best = self.history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
        let acquisition = |x: &[f64]| {
            let (m, v) = gp.predict(x);
            expected_improvement(m, v.sqrt(), best)
        };

        let mut winner: Option<(Proposal, f64)> = None;
        for _ in 0..self.settings.candidates {
            let c = rejecting(space, &mut self.rng, |rng| prior_draw(space, rng))?;
            let a = acquisition(&c.reals);
            if winner.as_ref().is_none_or(|w| a > w.1) {
                winner = Some((c, a));
            }
        }
        let (mut top, mut top_a) = winner.expect("at least one candidate");
        for scale in REFINE_SCALES {
            for _ in 0..REFINE_DRAWS {
                let reals: Vec<f64> = space
                    .ordered()
                    .iter()
                    .zip(&top.reals)
                    .map(|(l, &x)| l.clip(x + scale * l.width() * standard_normal(&mut self.rng)))
                    .collect();
                let a = acquisition(&reals);
                if a > top_a {
                    let point = space.assemble(&reals, &top.atoms);
                    if space.satisfies_constraints(&point) {
                        top = Proposal {
                            point,
                            reals,
                            atoms: top.atoms.clone(),
                        };
                        top_a = a;
                    }
                }
            }
        }
        Ok(top)
    }

    pub(crate) fn observe(&mut self, fb: &Feedback) {
        if let Some(p) = self.pending.take_if(|p| p.point == fb.point) {
            self.history.push((p.reals, fb.score));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_space::Domain;
    use crate::rng::{stream, streams};

    #[test]
    fn single_observation_proposal_is_feasible() {
        let sp = FeatureSpace::uniform(Domain::boxed(vec![-2.0], vec![3.0])).unwrap();
        let mut bo = BayesOpt::new(Default::default(), &sp, stream(4, streams::SAMPLER)).unwrap();
        let p = bo.next_point(&sp).unwrap();
        bo.observe(&Feedback { point: p, score: 1.0 });
        assert_eq!(bo.history().len(), 1);
        for _ in 0..5 {
            let q = bo.next_point(&sp).unwrap();
            sp.check_point(&q).unwrap();
            bo.observe(&Feedback { point: q, score: 1.0 });
        }
    }

    #[test]
    fn finds_quadratic_minimum() {
        let sp = FeatureSpace::uniform(Domain::boxed(vec![0.0, 0.0], vec![1.0, 1.0])).unwrap();
        let mut bo = BayesOpt::new(Default::default(), &sp, stream(2, streams::SAMPLER)).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..40 {
            let p = bo.next_point(&sp).unwrap();
            let (x, y) = (p.real("0").unwrap(), p.real("1").unwrap());
            let f = (x - 0.3).powi(2) + (y - 0.6).powi(2);
            best = best.min(f);
            bo.observe(&Feedback { point: p, score: f });
        }
        assert!(best < 1e-3, "{best}");
    }
}
