//! Stationary covariance functions with per-dimension lengthscales.

use crate::error::{check_dim, BaxError, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    Rbf,
    #[default]
    Matern52,
}

impl std::str::FromStr for KernelKind {
    type Err = BaxError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" | "se" => Ok(KernelKind::Rbf),
            "matern52" | "matern" => Ok(KernelKind::Matern52),
            other => Err(BaxError::InvalidParameter(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Kernel family plus hyperparameters, including the observation noise
/// variance of the Gaussian likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub lengthscales: Vec<f64>,
    pub outputscale: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, lengthscales: Vec<f64>, outputscale: f64, noise_variance: f64) -> Result<Self> {
        let spec = KernelSpec {
            kind,
            lengthscales,
            outputscale,
            noise_variance,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Isotropic spec: the same lengthscale on every one of `dim` inputs.
    pub fn isotropic(
        kind: KernelKind,
        dim: usize,
        lengthscale: f64,
        outputscale: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        Self::new(kind, vec![lengthscale; dim], outputscale, noise_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(BaxError::InvalidParameter(
                "kernel needs at least one lengthscale".into(),
            ));
        }
        if self.lengthscales.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(BaxError::InvalidParameter("lengthscales must be positive".into()));
        }
        if !(self.outputscale > 0.0 && self.outputscale.is_finite()) {
            return Err(BaxError::InvalidParameter("outputscale must be positive".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(BaxError::InvalidParameter("noise variance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Diagonal jitter added before every factorization.
    pub fn jitter(&self) -> f64 {
        super::JITTER_REL * self.outputscale
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    /// Squared scaled distance `Σ ((x_j - y_j) / ℓ_j)²`.
    pub(crate) fn scaled_sq_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let t = (a - b) / l;
                t * t
            })
            .sum()
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2 = self.scaled_sq_dist(x, y);
        self.outputscale * self.profile(r2)
    }

    /// Unit-variance correlation as a function of the squared scaled distance.
    fn profile(&self, r2: f64) -> f64 {
        match self.kind {
            KernelKind::Rbf => (-0.5 * r2).exp(),
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * (-SQRT5 * r).exp()
            }
        }
    }

    /// `-(∂k/∂r²)·2`, i.e. the factor `g` with `∂k/∂x_j = -g·Δ_j/ℓ_j²` and
    /// `∂k/∂log ℓ_j = g·(Δ_j/ℓ_j)²`.
    fn radial_factor(&self, r2: f64) -> f64 {
        match self.kind {
            KernelKind::Rbf => self.outputscale * (-0.5 * r2).exp(),
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                self.outputscale * 5.0 / 3.0 * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
            }
        }
    }

    /// Gradient of `k(x, y)` with respect to `x`, written into `out`.
    pub(crate) fn grad_x_into(&self, x: &[f64], y: &[f64], scale: f64, out: &mut [f64]) {
        let r2 = self.scaled_sq_dist(x, y);
        let g = self.radial_factor(r2) * scale;
        for (j, o) in out.iter_mut().enumerate() {
            let l = self.lengthscales[j];
            *o -= g * (x[j] - y[j]) / (l * l);
        }
    }

    /// Derivatives of `k(x, y)` with respect to `log ℓ_1..log ℓ_d` followed by
    /// `log outputscale`.
    pub(crate) fn grad_log_params(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let r2 = self.scaled_sq_dist(x, y);
        let g = self.radial_factor(r2);
        let mut out: Vec<f64> = x
            .iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let t = (a - b) / l;
                g * t * t
            })
            .collect();
        out.push(self.outputscale * self.profile(r2));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_returns_outputscale() {
        for kind in [KernelKind::Rbf, KernelKind::Matern52] {
            let k = KernelSpec::new(kind, vec![0.3, 2.0], 1.7, 0.0).unwrap();
            assert_eq!(k.eval(&[0.4, -1.0], &[0.4, -1.0]).unwrap(), 1.7);
        }
    }

    #[test]
    fn rbf_unit_distance() {
        let k = KernelSpec::isotropic(KernelKind::Rbf, 1, 1.0, 1.0, 0.0).unwrap();
        let v = k.eval(&[0.0], &[1.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn symmetric() {
        let k = KernelSpec::new(KernelKind::Matern52, vec![0.5, 1.5], 2.0, 0.1).unwrap();
        let a = [0.1, 0.9];
        let b = [-0.3, 0.2];
        assert_eq!(k.eval(&a, &b).unwrap(), k.eval(&b, &a).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let k = KernelSpec::isotropic(KernelKind::Rbf, 2, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            k.eval(&[0.0], &[0.0, 1.0]),
            Err(BaxError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(KernelSpec::new(KernelKind::Rbf, vec![0.0], 1.0, 0.0).is_err());
        assert!(KernelSpec::new(KernelKind::Rbf, vec![1.0], -1.0, 0.0).is_err());
        assert!(KernelSpec::new(KernelKind::Rbf, vec![1.0], 1.0, -1e-3).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for kind in [KernelKind::Rbf, KernelKind::Matern52] {
            let k = KernelSpec::new(kind, vec![0.7, 1.3], 1.4, 0.0).unwrap();
            let x = [0.2, -0.4];
            let y = [0.9, 0.3];
            let mut g = vec![0.0; 2];
            k.grad_x_into(&x, &y, 1.0, &mut g);
            let h = 1e-6;
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (k.eval_unchecked(&xp, &y) - k.eval_unchecked(&xm, &y)) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-8, "{kind:?} x-grad {j}");
            }
            let gp = k.grad_log_params(&x, &y);
            for j in 0..2 {
                let mut kp = k.clone();
                let mut km = k.clone();
                kp.lengthscales[j] *= h.exp();
                km.lengthscales[j] *= (-h).exp();
                let fd = (kp.eval_unchecked(&x, &y) - km.eval_unchecked(&x, &y)) / (2.0 * h);
                assert!((fd - gp[j]).abs() < 1e-8, "{kind:?} log-ell grad {j}");
            }
        }
    }
}
