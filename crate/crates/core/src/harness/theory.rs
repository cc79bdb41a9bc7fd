//! Empirical checks of the posterior-concentration results: a well-specified
//! finite problem where PS-BAX should recover the level set, and the
//! three-point instance where it provably cannot.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::acquisition::{psbax_step, PathSampler};
use crate::algorithms::{levelset_algorithm, BaseAlgorithm};
use crate::domain::{Domain, FiniteDomain};
use crate::error::Result;
use crate::gp::{jittered_cholesky, kernel_matrix, Dataset, GpPosterior, KernelKind, KernelSpec};
use crate::surrogate::Surrogate;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyConfig {
    pub domain_size: usize,
    /// Observation noise variance, also the model's noise variance.
    pub noise_variance: f64,
    pub iterations: usize,
    pub replications: usize,
    pub kernel: KernelKind,
    pub lengthscale: f64,
    pub threshold: f64,
    /// Posterior draws behind the mode estimator.
    pub mode_samples: usize,
    pub features: usize,
    pub seed: u64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            domain_size: 40,
            noise_variance: 1e-4,
            iterations: 30,
            replications: 20,
            kernel: KernelKind::Matern52,
            lengthscale: 0.2,
            threshold: 0.0,
            mode_samples: 256,
            features: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReplication {
    pub truth: Vec<usize>,
    pub mean_estimate: Vec<usize>,
    pub mode_estimate: Vec<usize>,
    /// Posterior-mean estimate after each iteration, 0 included.
    pub exact_by_iteration: Vec<bool>,
}

impl ConsistencyReplication {
    pub fn recovered(&self) -> bool {
        self.mean_estimate == self.truth
    }

    pub fn mode_recovered(&self) -> bool {
        self.mode_estimate == self.truth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub replications: Vec<ConsistencyReplication>,
}

impl ConsistencyReport {
    fn fraction(&self, pred: impl Fn(&ConsistencyReplication) -> bool) -> f64 {
        self.replications.iter().filter(|r| pred(r)).count() as f64 / self.replications.len().max(1) as f64
    }

    /// Share of replications whose final posterior-mean estimate is exact.
    pub fn recovery_fraction(&self) -> f64 {
        self.fraction(ConsistencyReplication::recovered)
    }

    pub fn mode_recovery_fraction(&self) -> f64 {
        self.fraction(ConsistencyReplication::mode_recovered)
    }

    /// Among recovered replications, the share where the mode estimator
    /// agrees with the posterior-mean estimate.
    pub fn agreement_fraction(&self) -> f64 {
        let rec: Vec<_> = self.replications.iter().filter(|r| r.recovered()).collect();
        if rec.is_empty() {
            return 0.0;
        }
        rec.iter().filter(|r| r.mode_estimate == r.mean_estimate).count() as f64 / rec.len() as f64
    }

    /// Exact-recovery share after each iteration.
    pub fn recovery_curve(&self) -> Vec<f64> {
        let len = self.replications.first().map_or(0, |r| r.exact_by_iteration.len());
        (0..len).map(|n| self.fraction(|r| r.exact_by_iteration[n])).collect()
    }
}

fn indices(t: &crate::domain::TargetSet) -> Vec<usize> {
    t.indices().map(<[usize]>::to_vec).unwrap_or_default()
}

/// Most frequent level set among `samples` joint posterior draws on the
/// domain; ties go to the lexicographically smallest set.
pub fn mode_estimate<R: Rng + ?Sized>(
    post: &GpPosterior,
    points: &[Vec<f64>],
    threshold: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let (mean, cov) = post.predict(points)?;
    let (l, _) = jittered_cholesky(&cov, post.kernel().jitter(), "posterior draws")?;
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for _ in 0..samples {
        let z = DVector::from_fn(points.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let f = &mean + &l * z;
        let set = indices(&levelset_algorithm(f.as_slice(), threshold));
        *counts.entry(set).or_default() += 1;
    }
    let mut best: Option<(&Vec<usize>, usize)> = None;
    for (set, c) in &counts {
        if best.is_none_or(|(_, b)| *c > b) {
            best = Some((set, *c));
        }
    }
    Ok(best.map(|(s, _)| s.clone()).unwrap_or_default())
}

/// PS-BAX on a one-dimensional grid with `f` drawn from the model's own
/// prior and fixed, known hyperparameters.
pub fn theory_check_consistency(cfg: &ConsistencyConfig) -> Result<ConsistencyReport> {
    let points: Vec<Vec<f64>> = (0..cfg.domain_size)
        .map(|i| vec![i as f64 / (cfg.domain_size.max(2) - 1) as f64])
        .collect();
    let domain = Domain::Finite(FiniteDomain::new(points.clone())?);
    let spec = KernelSpec::isotropic(cfg.kernel, 1, cfg.lengthscale, 1.0, cfg.noise_variance)?;
    let prior_cov = kernel_matrix(&spec, &points, &points);
    let (prior_l, _) = jittered_cholesky(&prior_cov, spec.jitter(), "prior draw")?;
    let algo = BaseAlgorithm::LevelSet {
        threshold: cfg.threshold,
    };
    let sampler = PathSampler::new(cfg.features)?;
    let noise_sd = cfg.noise_variance.sqrt();

    let mut reps = Vec::with_capacity(cfg.replications);
    for r in 0..cfg.replications {
        let mut rng = StdRng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(r as u64));
        let z = DVector::from_fn(points.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let f = &prior_l * z;
        let truth = indices(&levelset_algorithm(f.as_slice(), cfg.threshold));

        let mut data = Dataset::empty(1);
        for p in domain.sample_uniform(4, &mut rng) {
            let i = p.index.expect("finite domain");
            data.push(p.x, f[i] + noise_sd * rng.sample::<f64, _>(StandardNormal))?;
        }
        let mut post = GpPosterior::fit(&data, spec.clone())?;
        let estimate = |post: &GpPosterior| -> Result<Vec<usize>> {
            let (m, _) = post.predict_marginal(&points)?;
            Ok(indices(&levelset_algorithm(&m, cfg.threshold)))
        };
        let mut exact = vec![estimate(&post)? == truth];
        for _ in 0..cfg.iterations {
            let model = Surrogate::unscaled(post.clone());
            let d = psbax_step(&model, &domain, &sampler, &algo, 1, &mut rng)?;
            for p in d.chosen {
                let i = p.index.expect("finite domain");
                data.push(p.x, f[i] + noise_sd * rng.sample::<f64, _>(StandardNormal))?;
            }
            post = GpPosterior::fit(&data, spec.clone())?;
            exact.push(estimate(&post)? == truth);
        }
        let mean_estimate = estimate(&post)?;
        let mode = mode_estimate(&post, &points, cfg.threshold, cfg.mode_samples, &mut rng)?;
        reps.push(ConsistencyReplication {
            truth,
            mean_estimate,
            mode_estimate: mode,
            exact_by_iteration: exact,
        });
    }
    Ok(ConsistencyReport { replications: reps })
}

/// A Gaussian over a handful of points with an explicit covariance, enough
/// to express priors no stationary kernel can (e.g. zero variance at some
/// points).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl FiniteGaussian {
    /// Condition on `y = f_i + ε`, `ε ~ N(0, noise_variance)`.
    pub fn observe(&mut self, i: usize, y: f64, noise_variance: f64) {
        let k = self.cov.column(i).clone_owned();
        let s = self.cov[(i, i)] + noise_variance;
        if s <= 0.0 {
            return;
        }
        self.mean += &k * ((y - self.mean[i]) / s);
        self.cov -= &k * k.transpose() / s;
    }

    /// One joint draw; handles singular covariances.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let eig = SymmetricEigen::new(self.cov.clone());
        let z = DVector::from_fn(self.mean.len(), |i, _| {
            eig.eigenvalues[i].max(0.0).sqrt() * rng.sample::<f64, _>(StandardNormal)
        });
        &self.mean + eig.eigenvectors * z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    /// Monte Carlo estimate of `P_n(O_A(f) = {1})` for n = 0..=N.
    pub probabilities: Vec<f64>,
    /// Inputs chosen by PS-BAX, one per iteration.
    pub chosen: Vec<f64>,
}

/// PS-BAX on `X = {−1, 0, 1}` with `f(±1) = 0` known and `f(0) ~ N(0, 1)`;
/// the algorithm returns `{−1}` when `f(0) < 0` and `{1}` otherwise. Its
/// target sets never contain 0, so the posterior on `f(0)` never moves and
/// the probability of `{1}` stays at 1/2.
pub fn theory_check_counterexample(iterations: usize, mc_samples: usize, seed: u64) -> CounterexampleReport {
    const NOISE: f64 = 1e-2;
    let xs = [-1.0, 0.0, 1.0];
    let algo = |f: &DVector<f64>| if f[1] < 0.0 { 0 } else { 2 };
    let truth = FiniteGaussian {
        mean: DVector::zeros(3),
        cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 0.0])),
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let f_true = truth.sample(&mut rng);
    let mut post = truth;
    let estimate = |post: &FiniteGaussian, rng: &mut StdRng| {
        (0..mc_samples).filter(|_| algo(&post.sample(rng)) == 2).count() as f64 / mc_samples.max(1) as f64
    };
    let mut probabilities = vec![estimate(&post, &mut rng)];
    let mut chosen = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        // Each sampled target set is a singleton, so it is the pick.
        let i = algo(&post.sample(&mut rng));
        let y = f_true[i] + NOISE.sqrt() * rng.sample::<f64, _>(StandardNormal);
        post.observe(i, y, NOISE);
        chosen.push(xs[i]);
        probabilities.push(estimate(&post, &mut rng));
    }
    CounterexampleReport { probabilities, chosen }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_gaussian_observation_matches_scalar_update() {
        let mut g = FiniteGaussian {
            mean: DVector::zeros(2),
            cov: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
        };
        g.observe(0, 1.0, 1.0);
        assert!((g.mean[0] - 0.5).abs() < 1e-15);
        assert!((g.mean[1] - 0.25).abs() < 1e-15);
        assert!((g.cov[(1, 1)] - 0.875).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_points_are_uninformative() {
        let mut g = FiniteGaussian {
            mean: DVector::zeros(3),
            cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 0.0])),
        };
        let before = g.clone();
        g.observe(0, 3.0, 0.01);
        g.observe(2, -3.0, 0.01);
        assert_eq!(g, before);
    }

    #[test]
    fn counterexample_never_picks_zero() {
        let r = theory_check_counterexample(20, 200, 3);
        assert_eq!(r.probabilities.len(), 21);
        assert!(r.chosen.iter().all(|x| *x != 0.0));
    }

    #[test]
    fn no_iterations_report_initial_estimate_only() {
        let cfg = ConsistencyConfig {
            iterations: 0,
            replications: 2,
            features: 100,
            mode_samples: 16,
            ..Default::default()
        };
        let r = theory_check_consistency(&cfg).unwrap();
        assert_eq!(r.recovery_curve().len(), 1);
    }
}
