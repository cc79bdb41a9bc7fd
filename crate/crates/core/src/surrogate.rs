//! GP posterior plus output standardization, as used by the BAX loop.
//!
//! Inputs are expected in the unit cube already (problems expose their
//! domains that way); responses are standardized before fitting and every
//! value handed to a base algorithm is mapped back to the original units.

use rand::Rng;

use crate::domain::Objective;
use crate::error::Result;
use crate::gp::{fit_hyperparameters, Dataset, GpPosterior, HyperBounds, KernelKind, KernelSpec};

/// Affine map between original and standardized response units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputScaling {
    pub mean: f64,
    pub std: f64,
}

impl OutputScaling {
    pub const IDENTITY: OutputScaling = OutputScaling { mean: 0.0, std: 1.0 };

    /// Sample mean and (n−1) standard deviation; a degenerate spread maps to 1.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::IDENTITY;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let std = var.sqrt();
        OutputScaling {
            mean,
            std: if std > 1e-12 * (1.0 + mean.abs()) { std } else { 1.0 },
        }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        self.mean + self.std * z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitMode {
    /// Keep these hyperparameters (in standardized units) forever.
    Fixed(KernelSpec),
    /// Refit by maximum marginal likelihood whenever data changes.
    Refit { restarts: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: KernelKind,
    pub fit: FitMode,
    pub standardize: bool,
    pub initial_lengthscale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: KernelKind::Matern52,
            fit: FitMode::Refit { restarts: 2 },
            standardize: true,
            initial_lengthscale: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Surrogate {
    posterior: GpPosterior,
    scaling: OutputScaling,
}

impl Surrogate {
    pub fn new(posterior: GpPosterior, scaling: OutputScaling) -> Self {
        Surrogate { posterior, scaling }
    }

    /// Wrap a posterior that already lives in original units.
    pub fn unscaled(posterior: GpPosterior) -> Self {
        Surrogate {
            posterior,
            scaling: OutputScaling::IDENTITY,
        }
    }

    /// Fit to `data` (inputs in model space, responses in original units).
    /// `warm_start` seeds the hyperparameter search. Returns whether the
    /// fit improved on its starting point.
    pub fn fit<R: Rng + ?Sized>(
        data: &Dataset,
        cfg: &ModelConfig,
        warm_start: Option<&KernelSpec>,
        rng: &mut R,
    ) -> Result<(Self, bool)> {
        let scaling = if cfg.standardize {
            OutputScaling::from_values(data.values())
        } else {
            OutputScaling::IDENTITY
        };
        let z: Vec<f64> = data.values().iter().map(|y| scaling.forward(*y)).collect();
        let zdata = Dataset::new(data.points().to_vec(), z)?;
        let (spec, improved) = match &cfg.fit {
            FitMode::Fixed(spec) => (spec.clone(), false),
            FitMode::Refit { restarts } => {
                let cold = KernelSpec::isotropic(cfg.kind, data.dim(), cfg.initial_lengthscale, 1.0, 1e-4)?;
                if zdata.len() < 2 {
                    (warm_start.cloned().unwrap_or(cold), false)
                } else {
                    let bounds = HyperBounds::default();
                    let mut out = fit_hyperparameters(&zdata, &cold, &bounds, *restarts, rng)?;
                    // The previous optimum competes with the fresh starts.
                    if let Some(w) = warm_start {
                        let alt = fit_hyperparameters(&zdata, w, &bounds, 0, rng)?;
                        if alt.log_likelihood > out.log_likelihood {
                            out = alt;
                        }
                    }
                    (out.spec, out.improved)
                }
            }
        };
        let posterior = GpPosterior::fit(&zdata, spec)?;
        Ok((Surrogate { posterior, scaling }, improved))
    }

    pub fn posterior(&self) -> &GpPosterior {
        &self.posterior
    }

    pub fn scaling(&self) -> OutputScaling {
        self.scaling
    }

    pub fn kernel(&self) -> &KernelSpec {
        self.posterior.kernel()
    }

    /// Posterior mean in original units.
    pub fn mean(&self, x: &[f64]) -> f64 {
        self.scaling.inverse(self.posterior.mean(x))
    }

    /// Latent posterior variance in original units.
    pub fn variance(&self, x: &[f64]) -> f64 {
        self.posterior.variance(x) * self.scaling.std * self.scaling.std
    }

    pub fn mean_view(&self) -> ScaledView<crate::domain::PosteriorMean<'_>> {
        ScaledView {
            inner: crate::domain::PosteriorMean(&self.posterior),
            scaling: self.scaling,
        }
    }

    pub fn view<'a, O: Objective>(&self, inner: &'a O) -> ScaledView<&'a O> {
        ScaledView {
            inner,
            scaling: self.scaling,
        }
    }
}

/// A standardized-space function seen in original response units.
pub struct ScaledView<O> {
    inner: O,
    scaling: OutputScaling,
}

impl<O: Objective> Objective for ScaledView<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.scaling.inverse(self.inner.value(x))
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner
            .gradient(x)
            .map(|g| g.into_iter().map(|v| v * self.scaling.std).collect())
    }

    fn values(&self, points: &[Vec<f64>]) -> Vec<f64> {
        self.inner
            .values(points)
            .into_iter()
            .map(|v| self.scaling.inverse(v))
            .collect()
    }
}
