//! Approximate posterior function draws via random Fourier features.
//!
//! A [`FeatureMap`] fixes `D` frequencies and phases drawn from the kernel's
//! spectral density; a [`SamplePath`] pairs it with a weight vector drawn from
//! the Bayesian linear-regression posterior over those features. The result is
//! an ordinary deterministic function that can be evaluated (and
//! differentiated) anywhere, as many times as a base algorithm needs.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{check_dim, BaxError, Result};
use crate::gp::{jittered_cholesky, GpPosterior, KernelKind, KernelSpec};

pub const DEFAULT_FEATURES: usize = 1000;

#[derive(Debug, Clone)]
pub struct FeatureMap {
    /// One frequency per row, `D × d`.
    frequencies: DMatrix<f64>,
    phases: DVector<f64>,
    amplitude: f64,
}

impl FeatureMap {
    pub fn feature_count(&self) -> usize {
        self.phases.len()
    }

    pub fn dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn frequencies(&self) -> &DMatrix<f64> {
        &self.frequencies
    }

    pub fn phases(&self) -> &DVector<f64> {
        &self.phases
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Build a map from explicit parts.
    pub fn from_parts(frequencies: DMatrix<f64>, phases: DVector<f64>, amplitude: f64) -> Result<Self> {
        if frequencies.nrows() != phases.len() || phases.is_empty() {
            return Err(BaxError::InvalidParameter("frequencies and phases disagree".into()));
        }
        Ok(FeatureMap {
            frequencies,
            phases,
            amplitude,
        })
    }

    fn projection(&self, i: usize, x: &[f64]) -> f64 {
        let row = self.frequencies.row(i);
        row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.phases[i]
    }

    /// Amplitude-scaled features `φ(x)`.
    pub fn features(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(DVector::from_fn(self.feature_count(), |i, _| {
            self.amplitude * self.projection(i, x).cos()
        }))
    }

    /// `φ(x)ᵀφ(y)`, an unbiased estimate of the kernel.
    pub fn kernel_estimate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.features(x)?.dot(&self.features(y)?))
    }

    /// Feature matrix with one row per point.
    fn design(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(points.len(), self.feature_count(), |r, i| {
            self.amplitude * self.projection(i, &points[r]).cos()
        })
    }
}

/// Draw `count` random Fourier features for a stationary kernel.
///
/// RBF frequencies are Gaussian with per-dimension std `1/ℓ_j`; Matérn-5/2
/// frequencies are multivariate Student-t with 5 degrees of freedom, scaled
/// the same way.
pub fn draw_feature_map<R: Rng + ?Sized>(spec: &KernelSpec, count: usize, rng: &mut R) -> Result<FeatureMap> {
    spec.validate()?;
    if count == 0 {
        return Err(BaxError::InvalidParameter("feature count must be at least 1".into()));
    }
    let d = spec.dim();
    let chi = ChiSquared::<f64>::new(5.0).expect("valid dof");
    let mut frequencies = DMatrix::zeros(count, d);
    for i in 0..count {
        let scale = match spec.kind {
            KernelKind::Rbf => 1.0,
            KernelKind::Matern52 => (5.0 / chi.sample(rng)).sqrt(),
        };
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            frequencies[(i, j)] = z * scale / spec.lengthscales[j];
        }
    }
    let tau = 2.0 * std::f64::consts::PI;
    let phases = DVector::from_fn(count, |_, _| rng.random_range(0.0..tau));
    Ok(FeatureMap {
        frequencies,
        phases,
        amplitude: (2.0 * spec.outputscale / count as f64).sqrt(),
    })
}

/// One approximate posterior draw `x ↦ Σ θ_i φ_i(x)`.
#[derive(Debug, Clone)]
pub struct SamplePath {
    features: Arc<FeatureMap>,
    weights: DVector<f64>,
    seed: u64,
}

impl SamplePath {
    pub fn new(features: Arc<FeatureMap>, weights: DVector<f64>, seed: u64) -> Result<Self> {
        check_dim(features.feature_count(), weights.len())?;
        Ok(SamplePath {
            features,
            weights,
            seed,
        })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn feature_map(&self) -> &Arc<FeatureMap> {
        &self.features
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let fm = &*self.features;
        let s: f64 = (0..fm.feature_count())
            .map(|i| self.weights[i] * fm.projection(i, x).cos())
            .sum();
        fm.amplitude * s
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.grad_unchecked(x))
    }

    pub(crate) fn grad_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let fm = &*self.features;
        let mut g = vec![0.0; fm.dim()];
        for i in 0..fm.feature_count() {
            let c = -fm.amplitude * self.weights[i] * fm.projection(i, x).sin();
            for (gj, w) in g.iter_mut().zip(fm.frequencies.row(i).iter()) {
                *gj += c * w;
            }
        }
        g
    }
}

/// Draw `q` independent weight vectors from the posterior of the Bayesian
/// linear model `y = Φθ + ε`, `θ ~ N(0, I)`, sharing one feature map.
///
/// Each training point uses the posterior's own diagonal term (noise plus
/// jitter) as its observation variance. When `n ≤ D` the draw uses the exact
/// `n × n` dual update `θ = θ₀ + Φᵀ(ΦΦᵀ + Λ)⁻¹(y − Φθ₀ − ε₀)`; otherwise the
/// `D × D` precision form.
pub fn sample_paths<R: Rng + ?Sized>(
    post: &GpPosterior,
    fm: &Arc<FeatureMap>,
    q: usize,
    rng: &mut R,
) -> Result<Vec<SamplePath>> {
    check_dim(post.dim(), fm.dim())?;
    let big_d = fm.feature_count();
    let n = post.num_points();
    let seeds: Vec<u64> = (0..q).map(|_| rng.random()).collect();

    if n == 0 {
        return seeds
            .into_iter()
            .map(|seed| {
                let mut r = StdRng::seed_from_u64(seed);
                let w = DVector::from_fn(big_d, |_, _| r.sample(StandardNormal));
                SamplePath::new(fm.clone(), w, seed)
            })
            .collect();
    }

    let phi = fm.design(post.points());
    let noise = post.diag();
    let y = post.targets();

    if n <= big_d {
        let mut gram = &phi * phi.transpose();
        for i in 0..n {
            gram[(i, i)] += noise[i];
        }
        let (l, _) = jittered_cholesky(&gram, 0.0, "feature-space gram")?;
        seeds
            .into_iter()
            .map(|seed| {
                let mut r = StdRng::seed_from_u64(seed);
                let theta0 = DVector::from_fn(big_d, |_, _| r.sample::<f64, _>(StandardNormal));
                let eps = DVector::from_fn(n, |i, _| noise[i].sqrt() * r.sample::<f64, _>(StandardNormal));
                let mut resid = y - &phi * &theta0 - eps;
                l.solve_lower_triangular_mut(&mut resid);
                l.tr_solve_lower_triangular_mut(&mut resid);
                let w = theta0 + phi.tr_mul(&resid);
                SamplePath::new(fm.clone(), w, seed)
            })
            .collect()
    } else {
        let mut scaled = phi.clone();
        for i in 0..n {
            let s = 1.0 / noise[i];
            scaled.row_mut(i).scale_mut(s);
        }
        let mut precision = phi.tr_mul(&scaled);
        for i in 0..big_d {
            precision[(i, i)] += 1.0;
        }
        let (l, _) = jittered_cholesky(&precision, 0.0, "weight precision")?;
        let mut mean = scaled.tr_mul(y);
        l.solve_lower_triangular_mut(&mut mean);
        l.tr_solve_lower_triangular_mut(&mut mean);
        seeds
            .into_iter()
            .map(|seed| {
                let mut r = StdRng::seed_from_u64(seed);
                let mut z = DVector::from_fn(big_d, |_, _| r.sample::<f64, _>(StandardNormal));
                l.tr_solve_lower_triangular_mut(&mut z);
                SamplePath::new(fm.clone(), &mean + z, seed)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Dataset;

    fn rng(seed: u64) -> StdRng {
        StdRng::seed_from_u64(seed)
    }

    #[test]
    fn single_feature_shape() {
        let spec = KernelSpec::isotropic(KernelKind::Matern52, 1, 0.3, 1.0, 0.0).unwrap();
        let fm = draw_feature_map(&spec, 1, &mut rng(0)).unwrap();
        assert_eq!(fm.feature_count(), 1);
        assert_eq!(fm.dim(), 1);
        let b = fm.phases()[0];
        assert!((0.0..2.0 * std::f64::consts::PI).contains(&b));
    }

    #[test]
    fn rbf_frequency_std() {
        let spec = KernelSpec::isotropic(KernelKind::Rbf, 1, 2.0, 1.0, 0.0).unwrap();
        let fm = draw_feature_map(&spec, 100_000, &mut rng(1)).unwrap();
        let w = fm.frequencies().column(0);
        let mean = w.mean();
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        assert!((var.sqrt() - 0.5).abs() < 0.005, "std {}", var.sqrt());
    }

    #[test]
    fn zero_weights_give_zero_path() {
        let spec = KernelSpec::isotropic(KernelKind::Rbf, 2, 0.5, 1.0, 0.0).unwrap();
        let fm = Arc::new(draw_feature_map(&spec, 16, &mut rng(2)).unwrap());
        let p = SamplePath::new(fm, DVector::zeros(16), 0).unwrap();
        assert_eq!(p.eval(&[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(p.grad(&[0.3, 0.7]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn constant_feature() {
        let fm = FeatureMap::from_parts(DMatrix::zeros(1, 1), DVector::zeros(1), 1.0).unwrap();
        let p = SamplePath::new(Arc::new(fm), DVector::from_element(1, 1.0), 0).unwrap();
        for x in [-3.0, 0.0, 12.5] {
            assert_eq!(p.eval(&[x]).unwrap(), 1.0);
        }
    }

    #[test]
    fn stationary_point_of_cosine() {
        let fm = FeatureMap::from_parts(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1), 1.0).unwrap();
        let p = SamplePath::new(Arc::new(fm), DVector::from_element(1, 1.0), 0).unwrap();
        assert_eq!(p.grad(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = KernelSpec::isotropic(KernelKind::Rbf, 2, 0.5, 1.0, 0.0).unwrap();
        let fm = Arc::new(draw_feature_map(&spec, 4, &mut rng(2)).unwrap());
        let p = SamplePath::new(fm, DVector::zeros(4), 0).unwrap();
        assert!(p.eval(&[0.0]).is_err());
        assert!(p.grad(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn prior_weights_are_standard_normal() {
        let spec = KernelSpec::isotropic(KernelKind::Rbf, 1, 0.5, 1.0, 0.0).unwrap();
        let fm = Arc::new(draw_feature_map(&spec, 4, &mut rng(3)).unwrap());
        let post = GpPosterior::prior(spec);
        let paths = sample_paths(&post, &fm, 10_000, &mut rng(4)).unwrap();
        for i in 0..4 {
            let v: f64 = paths.iter().map(|p| p.weights()[i].powi(2)).sum::<f64>() / paths.len() as f64;
            assert!((v - 1.0).abs() < 0.05, "weight {i} variance {v}");
        }
    }

    #[test]
    fn noiseless_observation_is_reproduced() {
        let spec = KernelSpec::isotropic(KernelKind::Matern52, 1, 0.3, 1.0, 0.0).unwrap();
        let data = Dataset::new(vec![vec![0.4]], vec![1.3]).unwrap();
        let post = GpPosterior::fit(&data, spec.clone()).unwrap();
        let mut r = rng(5);
        for _ in 0..1000 {
            let fm = Arc::new(draw_feature_map(&spec, DEFAULT_FEATURES, &mut r).unwrap());
            let p = sample_paths(&post, &fm, 1, &mut r).unwrap().remove(0);
            // The only residual is the jitter draw, std sqrt(1e-8) = 1e-4.
            assert!((p.eval(&[0.4]).unwrap() - 1.3).abs() < 1e-3);
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let spec = KernelSpec::isotropic(KernelKind::Rbf, 2, 0.4, 1.0, 0.01).unwrap();
        let data = Dataset::new(vec![vec![0.1, 0.2], vec![0.6, 0.9]], vec![0.5, -1.0]).unwrap();
        let post = GpPosterior::fit(&data, spec.clone()).unwrap();
        let fm = Arc::new(draw_feature_map(&spec, 64, &mut rng(6)).unwrap());
        let a = sample_paths(&post, &fm, 3, &mut rng(7)).unwrap();
        let b = sample_paths(&post, &fm, 3, &mut rng(7)).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.weights(), pb.weights());
            assert_eq!(pa.seed(), pb.seed());
        }
    }

    #[test]
    fn precision_form_matches_weight_posterior() {
        // Few features force the primal branch when n > D.
        let spec = KernelSpec::isotropic(KernelKind::Rbf, 1, 0.3, 1.0, 0.05).unwrap();
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| (4.0 * p[0]).sin()).collect();
        let post = GpPosterior::fit(&Dataset::new(pts, ys).unwrap(), spec.clone()).unwrap();
        let fm = Arc::new(draw_feature_map(&spec, 6, &mut rng(8)).unwrap());
        let paths = sample_paths(&post, &fm, 20_000, &mut rng(9)).unwrap();
        // Exact weight-posterior mean via the precision form on the same map.
        let phi = fm.design(post.points());
        let noise = post.diag();
        let mut prec = DMatrix::identity(6, 6);
        let mut rhs = DVector::zeros(6);
        for i in 0..8 {
            let r = phi.row(i).transpose();
            prec += &r * r.transpose() / noise[i];
            rhs += &r * (post.targets()[i] / noise[i]);
        }
        let mean = prec.clone().lu().solve(&rhs).unwrap();
        let cov = prec.try_inverse().unwrap();
        for k in 0..6 {
            let m = paths.iter().map(|p| p.weights()[k]).sum::<f64>() / paths.len() as f64;
            let se = (cov[(k, k)] / paths.len() as f64).sqrt();
            assert!((m - mean[k]).abs() < 4.0 * se + 1e-9, "weight {k}: {m} vs {}", mean[k]);
        }
    }
}
