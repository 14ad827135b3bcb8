//! Gaussian-process regression with a squared-exponential kernel.
//!
//! Targets are divided by their root-mean-square and modelled with a
//! zero prior mean and unit signal variance. Zero is the satisfaction
//! boundary for robustness scores, so unexplored regions are predicted to
//! sit on it.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::SamplerError;

#[derive(Debug, Clone)]
pub struct GaussianProcess {
    inputs: Vec<Vec<f64>>,
    length_scales: Vec<f64>,
    scale: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

pub fn se_kernel(a: &[f64], b: &[f64], length_scales: &[f64]) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(length_scales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    (-0.5 * r2).exp()
}

impl GaussianProcess {
    /// Fits the posterior. The diagonal jitter starts at `jitter` and grows
    /// tenfold, up to `jitter_cap`, until the kernel matrix factors.
    pub fn fit(
        inputs: &[Vec<f64>],
        targets: &[f64],
        length_scales: &[f64],
        jitter: f64,
        jitter_cap: f64,
    ) -> Result<Self, SamplerError> {
        let n = inputs.len();
        assert_eq!(n, targets.len(), "one target per input");
        let rms = (targets.iter().map(|y| y * y).sum::<f64>() / n.max(1) as f64).sqrt();
        let scale = if rms > 0.0 && rms.is_finite() { rms } else { 1.0 };
        let base = DMatrix::from_fn(n, n, |i, j| se_kernel(&inputs[i], &inputs[j], length_scales));
        let y = DVector::from_iterator(n, targets.iter().map(|t| t / scale));

        let mut j = jitter;
        loop {
            let k = &base + DMatrix::identity(n, n) * j;
            if let Some(chol) = k.cholesky() {
                let alpha = chol.solve(&y);
                return Ok(GaussianProcess {
                    inputs: inputs.to_vec(),
                    length_scales: length_scales.to_vec(),
                    scale,
                    chol,
                    alpha,
                    jitter: j,
                });
            }
            if j >= jitter_cap {
                return Err(SamplerError::SingularKernel(j));
            }
            j = (j * 10.0).min(jitter_cap);
        }
    }

    /// Diagonal jitter that made the kernel matrix factor.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and variance at `x`, in target units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|xi| se_kernel(xi, x, &self.length_scales)),
        );
        let mean = k.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&k).expect("factor has a positive diagonal");
        let var = (1.0 - v.dot(&v)).max(0.0);
        (mean * self.scale, var * self.scale * self.scale)
    }
}

/// Expected improvement below `best` for a Gaussian prediction.
pub fn expected_improvement(mean: f64, stddev: f64, best: f64) -> f64 {
    let gain = best - mean;
    if stddev <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / stddev;
    let cdf = 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    gain * cdf + stddev * pdf
}
