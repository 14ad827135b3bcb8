use crate::feature_space::{pick_weighted, FeatureSpace, Point, SpaceError};

use super::SamplerError;

/// Halton sequence over the leaves of a space. Ordered leaves take the
/// first bases in leaf order and map linearly onto their interval; each
/// unordered leaf takes one more base and goes through its categorical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Halton {
    index: u64,
    bases: Vec<u64>,
}

impl Halton {
    pub fn new(space: &FeatureSpace) -> Self {
        let d = space.ordered().len() + space.unordered().len();
        Halton {
            index: 1,
            bases: first_primes(d),
        }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    /// Raw sequence element at the current index; advances the index.
    pub fn next_coordinates(&mut self) -> Vec<f64> {
        let k = self.index;
        self.index += 1;
        self.bases.iter().map(|&b| radical_inverse(k, b)).collect()
    }

    pub(crate) fn next_point(&mut self, space: &FeatureSpace) -> Result<Point, SamplerError> {
        let n_ord = space.ordered().len();
        // Constraint rejection walks the sequence forward.
        for _ in 0..space.max_rejections() {
            let u = self.next_coordinates();
            let reals: Vec<f64> = space
                .ordered()
                .iter()
                .zip(&u)
                .map(|(leaf, &c)| leaf.lo + leaf.width() * c)
                .collect();
            let atoms: Vec<usize> = space
                .unordered()
                .iter()
                .zip(&u[n_ord..])
                .map(|(leaf, &c)| pick_weighted(&leaf.weights, c))
                .collect();
            let p = space.assemble(&reals, &atoms);
            if space.satisfies_constraints(&p) {
                return Ok(p);
            }
        }
        Err(SpaceError::RejectionBudgetExhausted(space.max_rejections()).into())
    }
}

/// Digit reversal of `k` in base `b`, as the exact ratio of two integers.
pub fn radical_inverse(mut k: u64, b: u64) -> f64 {
    let (mut num, mut den) = (0u64, 1u64);
    while k > 0 {
        num = num * b + k % b;
        den *= b;
        k /= b;
    }
    num as f64 / den as f64
}

pub fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}
