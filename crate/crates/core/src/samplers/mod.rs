//! Point generators. Passive samplers (uniform, Halton) ignore feedback;
//! active ones (annealing, cross-entropy, Bayesian optimization) adapt to
//! the scores they observe. Every sampler minimizes the score.

mod annealing;
mod bayes_opt;
mod cross_entropy;
pub mod gp;
mod halton;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_space::{FeatureSpace, Point, SpaceError};
use crate::rng::SimRng;

pub use annealing::{acceptance_probability, Annealing, AnnealingSettings};
pub use bayes_opt::{BayesOpt, BayesOptSettings};
pub use cross_entropy::{CrossEntropy, CrossEntropySettings, Fitted};
pub use gp::{expected_improvement, GaussianProcess};
pub use halton::{first_primes, radical_inverse, Halton};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("kernel matrix not positive definite even with jitter {0:e}")]
    SingularKernel(f64),
    #[error("invalid sampler settings: {0}")]
    Settings(String),
}

/// Score reported back to a sampler for a point it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub point: Point,
    pub score: f64,
}

/// Sampler choice as written in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    Uniform,
    Halton,
    Annealing(AnnealingSettings),
    CrossEntropy(CrossEntropySettings),
    BayesOpt(BayesOptSettings),
}

impl SamplerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerSpec::Uniform => "uniform",
            SamplerSpec::Halton => "halton",
            SamplerSpec::Annealing(_) => "annealing",
            SamplerSpec::CrossEntropy(_) => "cross_entropy",
            SamplerSpec::BayesOpt(_) => "bayes_opt",
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, SamplerSpec::Uniform | SamplerSpec::Halton)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uniform {
    rng: SimRng,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Uniform(Uniform),
    Halton(Halton),
    Annealing(Annealing),
    CrossEntropy(CrossEntropy),
    BayesOpt(BayesOpt),
}

impl Sampler {
    /// Builds sampler state for `space`, drawing randomness from `rng`.
    pub fn new(spec: &SamplerSpec, space: &FeatureSpace, rng: SimRng) -> Result<Self, SamplerError> {
        Ok(match spec {
            SamplerSpec::Uniform => Sampler::Uniform(Uniform { rng }),
            SamplerSpec::Halton => Sampler::Halton(Halton::new(space)),
            SamplerSpec::Annealing(s) => Sampler::Annealing(Annealing::new(s.clone(), rng)?),
            SamplerSpec::CrossEntropy(s) => Sampler::CrossEntropy(CrossEntropy::new(s.clone(), space, rng)?),
            SamplerSpec::BayesOpt(s) => Sampler::BayesOpt(BayesOpt::new(s.clone(), space, rng)?),
        })
    }

    /// Next point to simulate. Constraints are enforced by rejection
    /// around each sampler's raw proposal.
    pub fn next_point(&mut self, space: &FeatureSpace) -> Result<Point, SamplerError> {
        match self {
            Sampler::Uniform(u) => Ok(space.sample_prior(&mut u.rng)?),
            Sampler::Halton(h) => h.next_point(space),
            Sampler::Annealing(a) => a.next_point(space),
            Sampler::CrossEntropy(c) => c.next_point(space),
            Sampler::BayesOpt(b) => b.next_point(space),
        }
    }

    /// Reports the score of the most recent point. Passive samplers ignore
    /// it; so does every sampler when the point is not the one it proposed.
    pub fn observe(&mut self, fb: &Feedback) {
        match self {
            Sampler::Uniform(_) | Sampler::Halton(_) => {}
            Sampler::Annealing(a) => a.observe(fb),
            Sampler::CrossEntropy(c) => c.observe(fb),
            Sampler::BayesOpt(b) => b.observe(fb),
        }
    }
}

/// A proposal remembered in flattened form until its score arrives.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Proposal {
    pub point: Point,
    pub reals: Vec<f64>,
    pub atoms: Vec<usize>,
}

/// Repeats `propose` until the assembled point satisfies the constraints.
pub(crate) fn rejecting<F>(space: &FeatureSpace, rng: &mut SimRng, mut propose: F) -> Result<Proposal, SamplerError>
where
    F: FnMut(&mut SimRng) -> Result<(Vec<f64>, Vec<usize>), SamplerError>,
{
    for _ in 0..space.max_rejections() {
        let (reals, atoms) = propose(rng)?;
        let point = space.assemble(&reals, &atoms);
        if space.satisfies_constraints(&point) {
            let reals = space.ordered().iter().zip(&reals).map(|(l, &v)| l.clip(v)).collect();
            return Ok(Proposal { point, reals, atoms });
        }
    }
    Err(SpaceError::RejectionBudgetExhausted(space.max_rejections()).into())
}

/// Draw from the prior of every leaf (before constraint rejection).
pub(crate) fn prior_draw(space: &FeatureSpace, rng: &mut SimRng) -> Result<(Vec<f64>, Vec<usize>), SamplerError> {
    Ok(space.draw_raw(rng)?)
}

pub(crate) fn standard_normal(rng: &mut SimRng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_space::{Atom, Domain, DistributionSpec};
    use crate::rng::{stream, streams};
    use std::collections::BTreeMap;

    fn space() -> FeatureSpace {
        FeatureSpace::uniform(Domain::structure([
            ("x", Domain::boxed(vec![0.0], vec![1.0])),
            ("c", Domain::set(["a", "b", "c"])),
        ]))
        .unwrap()
    }

    fn all_specs() -> Vec<SamplerSpec> {
        vec![
            SamplerSpec::Uniform,
            SamplerSpec::Halton,
            SamplerSpec::Annealing(Default::default()),
            SamplerSpec::CrossEntropy(CrossEntropySettings {
                batch: 5,
                ..Default::default()
            }),
            SamplerSpec::BayesOpt(BayesOptSettings {
                candidates: 16,
                ..Default::default()
            }),
        ]
    }

    fn drive(spec: &SamplerSpec, seed: u64, n: usize) -> Vec<Point> {
        let sp = space();
        let mut s = Sampler::new(spec, &sp, stream(seed, streams::SAMPLER)).unwrap();
        (0..n)
            .map(|_| {
                let p = s.next_point(&sp).unwrap();
                let score = p.real("x.0").unwrap() - 0.4;
                s.observe(&Feedback { point: p.clone(), score });
                p
            })
            .collect()
    }

    #[test]
    fn every_sampler_is_deterministic_and_in_bounds() {
        let sp = space();
        for spec in all_specs() {
            let a = drive(&spec, 11, 25);
            assert_eq!(a, drive(&spec, 11, 25), "{}", spec.name());
            for p in &a {
                sp.check_point(p).unwrap();
            }
        }
    }

    #[test]
    fn passive_observe_is_identity() {
        let sp = space();
        for spec in [SamplerSpec::Uniform, SamplerSpec::Halton] {
            let mut s = Sampler::new(&spec, &sp, stream(3, streams::SAMPLER)).unwrap();
            let p = s.next_point(&sp).unwrap();
            let before = s.clone();
            s.observe(&Feedback { point: p, score: -4.0 });
            assert_eq!(s, before);
        }
    }

    #[test]
    fn degenerate_categorical_always_first() {
        let mut dists = BTreeMap::new();
        dists.insert(
            "root".to_string(),
            DistributionSpec::Categorical {
                weights: vec![1.0, 0.0],
            },
        );
        let sp = FeatureSpace::build(Domain::set(["a", "b"]), dists, vec![]).unwrap();
        let mut s = Sampler::new(&SamplerSpec::Uniform, &sp, stream(0, streams::SAMPLER)).unwrap();
        for _ in 0..200 {
            assert_eq!(s.next_point(&sp).unwrap().atom("root"), Some(&Atom::from("a")));
        }
    }

    #[test]
    fn spec_json_forms() {
        let s: SamplerSpec = serde_json::from_str(r#"{"kind":"cross_entropy","batch":10}"#).unwrap();
        match s {
            SamplerSpec::CrossEntropy(c) => {
                assert_eq!(c.batch, 10);
                assert_eq!(c.elite_fraction, 0.1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            serde_json::from_str::<SamplerSpec>(r#"{"kind":"halton"}"#).unwrap(),
            SamplerSpec::Halton
        );
        assert!(serde_json::from_str::<SamplerSpec>(r#"{"kind":"grid"}"#).is_err());
        assert!(serde_json::from_str::<SamplerSpec>(r#"{"kind":"annealing","cooling":0.9,"x":1}"#).is_err());
    }
}
