//! Exact Gaussian process regression.
//!
//! [`GpPosterior`] caches the Cholesky factor of `K + diag(noise) + jitter·I`
//! so that predictions, marginal likelihoods, and noiseless "fantasy"
//! conditioning all reuse one factorization.

mod fit;
mod kernel;
mod posterior;

pub use fit::{fit_hyperparameters, log_marginal_likelihood, mll_with_gradient, FitOutcome, HyperBounds};
pub use kernel::{KernelKind, KernelSpec};
pub(crate) use posterior::kernel_matrix;
pub use posterior::{Dataset, GpPosterior};

use nalgebra::DMatrix;

use crate::error::{BaxError, Result};

/// Relative diagonal jitter: `JITTER_REL · outputscale` is added before factorizing.
pub const JITTER_REL: f64 = 1e-8;
const MAX_JITTER_DOUBLINGS: u32 = 3;

/// Cholesky factor of `a + jitter·I`, doubling the jitter up to three times
/// (a zero starting jitter retries from `1e-10·max diag`).
/// Returns the lower factor and the jitter that succeeded.
pub(crate) fn jittered_cholesky(a: &DMatrix<f64>, jitter: f64, context: &'static str) -> Result<(DMatrix<f64>, f64)> {
    let mut jitter = jitter;
    for _ in 0..=MAX_JITTER_DOUBLINGS {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = nalgebra::Cholesky::new(m) {
            return Ok((ch.unpack(), jitter));
        }
        jitter = if jitter > 0.0 {
            2.0 * jitter
        } else {
            1e-10 * a.diagonal().amax().max(f64::MIN_POSITIVE)
        };
    }
    Err(BaxError::Factorization { context })
}

/// Differential entropy of a Gaussian with the given variance.
///
/// A zero (or round-off negative) variance yields `-inf` instead of panicking.
pub fn gaussian_entropy(variance: f64) -> f64 {
    if variance <= 0.0 {
        return f64::NEG_INFINITY;
    }
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln()
}
