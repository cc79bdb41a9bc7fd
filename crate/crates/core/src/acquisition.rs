//! Point-selection rules: PS-BAX, INFO-BAX (expected information gain),
//! expected improvement, and uniform random sampling.
//!
//! Every rule draws one `u64` from the caller's generator and derives all of
//! its internal randomness from it, so a decision is reproducible from
//! `(posterior, seed, domain)` alone.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::algorithms::BaseAlgorithm;
use crate::domain::{BoxDomain, Domain, DomainPoint, TargetSet};
use crate::error::{check_dim, BaxError, Result};
use crate::gp::{gaussian_entropy, jittered_cholesky, GpPosterior};
use crate::paths::{draw_feature_map, sample_paths, SamplePath, DEFAULT_FEATURES};
use crate::surrogate::Surrogate;

/// Number of posterior samples used by INFO-BAX.
pub const DEFAULT_EIG_SAMPLES: usize = 30;
/// Box-domain candidates per input dimension when maximizing an acquisition.
pub const BOX_CANDIDATES_PER_DIM: usize = 512;
const REFINE_TOP: usize = 5;
const GOLDEN_ITERS: usize = 30;
const REFINE_SWEEPS: usize = 2;
const REFINE_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionDecision {
    pub chosen: Vec<DomainPoint>,
    pub sampled_target_sets: Vec<TargetSet>,
    /// Score of every finite-domain candidate for the first pick, when computed.
    pub acq_values: Option<Vec<f64>>,
    pub seed: u64,
    /// Set when some picks did not come from the sampled target sets.
    pub fallback: bool,
}

/// Draws posterior sample paths with random Fourier features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSampler {
    pub features: usize,
}

impl Default for PathSampler {
    fn default() -> Self {
        PathSampler {
            features: DEFAULT_FEATURES,
        }
    }
}

impl PathSampler {
    pub fn new(features: usize) -> Result<Self> {
        if features == 0 {
            return Err(BaxError::InvalidParameter("feature count must be positive".into()));
        }
        Ok(PathSampler { features })
    }

    /// `count` paths sharing one freshly drawn feature map.
    pub fn draw<R: Rng + ?Sized>(&self, post: &GpPosterior, count: usize, rng: &mut R) -> Result<Vec<SamplePath>> {
        let fm = Arc::new(draw_feature_map(post.kernel(), self.features, rng)?);
        sample_paths(post, &fm, count, rng)
    }
}

/// Fantasy pairs from running a base algorithm on one sample path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecutionPath {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl ExecutionPath {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        check_dim(points.len(), values.len())?;
        Ok(ExecutionPath { points, values })
    }

    /// Target-set members of `path` paired with the path's values there
    /// (in the posterior's own units).
    pub fn from_target(target: &TargetSet, domain: &Domain, path: &SamplePath) -> Self {
        let points: Vec<Vec<f64>> = target.members(domain).into_iter().map(|p| p.x).collect();
        let values = points.iter().map(|p| path.eval_unchecked(p)).collect();
        ExecutionPath { points, values }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn union_of(targets: &[TargetSet], domain: &Domain) -> Vec<DomainPoint> {
    match domain {
        Domain::Finite(f) => {
            let ix: BTreeSet<usize> = targets.iter().flat_map(|t| t.index_set()).collect();
            ix.into_iter()
                .map(|i| DomainPoint::indexed(i, f.points()[i].clone()))
                .collect()
        }
        Domain::Box(_) => {
            let mut out: Vec<DomainPoint> = Vec::new();
            for t in targets {
                for p in t.members(domain) {
                    if !out.iter().any(|o| o.x == p.x) {
                        out.push(p);
                    }
                }
            }
            out
        }
    }
}

/// Greedy maximum-variance batch over `candidates`: each pick maximizes the
/// latent variance conditioned (noiselessly) on the earlier picks. Returns up
/// to `q` distinct candidate positions; ties go to the lowest position.
pub fn greedy_max_variance(post: &GpPosterior, candidates: &[Vec<f64>], q: usize) -> Result<Vec<usize>> {
    let (_, mut cov) = post.predict(candidates)?;
    let m = candidates.len();
    let mut picked: Vec<usize> = Vec::with_capacity(q.min(m));
    let mut taken = vec![false; m];
    while picked.len() < q.min(m) {
        let mut best: Option<usize> = None;
        for j in 0..m {
            if taken[j] {
                continue;
            }
            if best.is_none_or(|b| cov[(j, j)] > cov[(b, b)]) {
                best = Some(j);
            }
        }
        let Some(b) = best else { break };
        taken[b] = true;
        picked.push(b);
        let pivot = cov[(b, b)] + post.kernel().jitter();
        if pivot > 0.0 {
            let col = cov.column(b).clone_owned();
            cov -= &col * col.transpose() / pivot;
        }
    }
    Ok(picked)
}

fn fallback_points<R: Rng + ?Sized>(
    post: &GpPosterior,
    domain: &Domain,
    already: &[DomainPoint],
    count: usize,
    rng: &mut R,
) -> Result<Vec<DomainPoint>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    match domain {
        Domain::Finite(f) => {
            let cond = if already.is_empty() {
                post.clone()
            } else {
                let xs: Vec<Vec<f64>> = already.iter().map(|p| p.x.clone()).collect();
                let means: Vec<f64> = xs.iter().map(|x| post.mean(x)).collect();
                post.condition_noiseless(&xs, &means)?
            };
            let used: BTreeSet<usize> = already.iter().filter_map(|p| p.index).collect();
            let free: Vec<usize> = (0..f.len()).filter(|i| !used.contains(i)).collect();
            let pts: Vec<Vec<f64>> = free.iter().map(|&i| f.points()[i].clone()).collect();
            Ok(greedy_max_variance(&cond, &pts, count)?
                .into_iter()
                .map(|j| DomainPoint::indexed(free[j], pts[j].clone()))
                .collect())
        }
        Domain::Box(b) => Ok((0..count).map(|_| DomainPoint::free(b.sample(rng))).collect()),
    }
}

/// One PS-BAX step: draw `q` posterior paths, run the base algorithm on each
/// (in original response units), and pick `q` points from the union of the
/// target sets by greedy maximum posterior variance.
///
/// If the union is empty, or smaller than `q`, the missing picks come from
/// the maximum-variance points of a finite domain or uniform draws in a box,
/// and the decision is flagged.
pub fn psbax_step<R: Rng + ?Sized>(
    model: &Surrogate,
    domain: &Domain,
    sampler: &PathSampler,
    algo: &BaseAlgorithm,
    q: usize,
    rng: &mut R,
) -> Result<AcquisitionDecision> {
    if q == 0 {
        return Err(BaxError::InvalidParameter("q must be at least 1".into()));
    }
    check_dim(model.posterior().dim(), domain.dim())?;
    let seed: u64 = rng.random();
    let mut r = StdRng::seed_from_u64(seed);
    let post = model.posterior();
    let paths = sampler.draw(post, q, &mut r)?;
    let targets = paths
        .iter()
        .map(|p| algo.run(&model.view(p), domain, &mut r))
        .collect::<Result<Vec<_>>>()?;

    let union = union_of(&targets, domain);
    let mut chosen: Vec<DomainPoint> = if union.is_empty() {
        Vec::new()
    } else {
        let xs: Vec<Vec<f64>> = union.iter().map(|p| p.x.clone()).collect();
        greedy_max_variance(post, &xs, q)?
            .into_iter()
            .map(|j| union[j].clone())
            .collect()
    };
    let fallback = chosen.len() < q;
    if fallback {
        let extra = fallback_points(post, domain, &chosen, q - chosen.len(), &mut r)?;
        chosen.extend(extra);
    }
    Ok(AcquisitionDecision {
        chosen,
        sampled_target_sets: targets,
        acq_values: None,
        seed,
        fallback,
    })
}

struct PathTerm {
    points: Vec<Vec<f64>>,
    /// `L⁻¹ K(train, F)` for the fantasy points `F`.
    whitened: DMatrix<f64>,
    /// Cholesky factor of the posterior covariance among `F`.
    chol: DMatrix<f64>,
}

/// Vectorized Monte Carlo estimate of the information gain about the target
/// set: `H[y_x | D] − (1/L) Σ_ℓ H[y_x | D ∪ F_ℓ]`, with entropies of the noisy
/// observation. Only fantasy locations matter; values never change a Gaussian
/// conditional variance.
pub struct EigScorer<'a> {
    post: &'a GpPosterior,
    terms: Vec<Option<PathTerm>>,
    noise: f64,
}

impl<'a> EigScorer<'a> {
    pub fn new(post: &'a GpPosterior, paths: &[ExecutionPath]) -> Result<Self> {
        if paths.is_empty() {
            return Err(BaxError::EmptyInput("execution paths"));
        }
        let mut terms = Vec::with_capacity(paths.len());
        let mut failures = 0;
        for p in paths {
            for x in &p.points {
                check_dim(post.dim(), x.len())?;
            }
            let mut pts: Vec<Vec<f64>> = Vec::with_capacity(p.len());
            for x in &p.points {
                if !pts.iter().any(|y| y == x) {
                    pts.push(x.clone());
                }
            }
            if pts.is_empty() {
                terms.push(None);
                continue;
            }
            let whitened = post.whitened_cross(&pts);
            let cov = crate::gp::kernel_matrix(post.kernel(), &pts, &pts) - whitened.tr_mul(&whitened);
            let jitter = post.kernel().jitter();
            let factor = jittered_cholesky(&cov, jitter, "execution path")
                .or_else(|_| jittered_cholesky(&cov, 1e4 * jitter, "execution path"));
            match factor {
                Ok((chol, _)) => terms.push(Some(PathTerm {
                    points: pts,
                    whitened,
                    chol,
                })),
                Err(_) => failures += 1,
            }
        }
        if failures == paths.len() {
            return Err(BaxError::Factorization {
                context: "every execution path",
            });
        }
        Ok(EigScorer {
            post,
            terms,
            noise: post.noise_variance(),
        })
    }

    pub fn num_paths(&self) -> usize {
        self.terms.len()
    }

    /// Scores for every query point.
    pub fn score(&self, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.path_entropies(queries)?.0)
    }

    /// Scores plus the per-path conditional entropies, row `ℓ` for path `ℓ`.
    pub fn path_entropies(&self, queries: &[Vec<f64>]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (_, base_var) = self.post.predict_marginal(queries)?;
        let m = queries.len();
        let vx = self.post.whitened_cross(queries);
        let mut cond = DMatrix::zeros(self.terms.len(), m);
        for (l, term) in self.terms.iter().enumerate() {
            let reduction: Vec<f64> = match term {
                None => vec![0.0; m],
                Some(t) => {
                    let mut c =
                        crate::gp::kernel_matrix(self.post.kernel(), &t.points, queries) - t.whitened.tr_mul(&vx);
                    t.chol.solve_lower_triangular_mut(&mut c);
                    c.column_iter().map(|col| col.norm_squared()).collect()
                }
            };
            for j in 0..m {
                let v = (base_var[j] - reduction[j]).max(0.0);
                cond[(l, j)] = gaussian_entropy(v + self.noise);
            }
        }
        let scores = (0..m)
            .map(|j| gaussian_entropy(base_var[j] + self.noise) - cond.column(j).mean())
            .collect();
        Ok((scores, cond))
    }
}

/// Information gain at `x` from `paths` (see [`EigScorer`]).
pub fn eig_v(post: &GpPosterior, x: &[f64], paths: &[ExecutionPath]) -> Result<f64> {
    check_dim(post.dim(), x.len())?;
    Ok(EigScorer::new(post, paths)?.score(&[x.to_vec()])?[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoBaxConfig {
    pub samples: usize,
    pub box_candidates_per_dim: usize,
}

impl Default for InfoBaxConfig {
    fn default() -> Self {
        InfoBaxConfig {
            samples: DEFAULT_EIG_SAMPLES,
            box_candidates_per_dim: BOX_CANDIDATES_PER_DIM,
        }
    }
}

/// Execution paths of `algo` on `count` fresh posterior samples.
pub fn draw_execution_paths<R: Rng + ?Sized>(
    model: &Surrogate,
    domain: &Domain,
    sampler: &PathSampler,
    algo: &BaseAlgorithm,
    count: usize,
    rng: &mut R,
) -> Result<(Vec<ExecutionPath>, Vec<TargetSet>)> {
    let paths = sampler.draw(model.posterior(), count, rng)?;
    let mut exec = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for p in &paths {
        let t = algo.run(&model.view(p), domain, rng)?;
        exec.push(ExecutionPath::from_target(&t, domain, p));
        targets.push(t);
    }
    Ok((exec, targets))
}

/// Greedy batch maximization of EIG over a fixed candidate list. Each pick
/// conditions the base posterior on the earlier picks (noiseless, at the
/// posterior mean). Returns candidate positions and first-pick scores.
pub fn infobax_select(
    post: &GpPosterior,
    paths: &[ExecutionPath],
    candidates: &[Vec<f64>],
    q: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(BaxError::EmptyInput("candidates"));
    }
    let mut picked: Vec<usize> = Vec::with_capacity(q);
    let mut first_scores = Vec::new();
    let mut current = post.clone();
    for step in 0..q {
        let scores = EigScorer::new(&current, paths)?.score(candidates)?;
        let best = argmax_excluding(&scores, &picked);
        if step == 0 {
            first_scores = scores;
        }
        let Some(b) = best else { break };
        picked.push(b);
        if step + 1 < q {
            let x = candidates[b].clone();
            let mu = current.mean(&x);
            current = current.condition_noiseless(&[x], &[mu])?;
        }
    }
    Ok((picked, first_scores))
}

fn argmax_excluding(scores: &[f64], excluded: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, s) in scores.iter().enumerate() {
        if excluded.contains(&j) || s.is_nan() {
            continue;
        }
        if best.is_none_or(|b| *s > scores[b]) {
            best = Some(j);
        }
    }
    best
}

/// One INFO-BAX step. Paths are drawn once and shared by all `q` picks.
/// Finite domains are scored exhaustively; boxes go through
/// [`optimize_acq_over_box`].
pub fn infobax_step<R: Rng + ?Sized>(
    model: &Surrogate,
    domain: &Domain,
    sampler: &PathSampler,
    algo: &BaseAlgorithm,
    cfg: &InfoBaxConfig,
    q: usize,
    rng: &mut R,
) -> Result<AcquisitionDecision> {
    if q == 0 || cfg.samples == 0 {
        return Err(BaxError::InvalidParameter(
            "q and the sample count must be at least 1".into(),
        ));
    }
    check_dim(model.posterior().dim(), domain.dim())?;
    let seed: u64 = rng.random();
    let mut r = StdRng::seed_from_u64(seed);
    let (exec, targets) = draw_execution_paths(model, domain, sampler, algo, cfg.samples, &mut r)?;
    let post = model.posterior();
    match domain {
        Domain::Finite(f) => {
            let (picked, scores) = infobax_select(post, &exec, f.points(), q)?;
            let mut chosen: Vec<DomainPoint> = picked
                .into_iter()
                .map(|i| DomainPoint::indexed(i, f.points()[i].clone()))
                .collect();
            let fallback = chosen.len() < q;
            if fallback {
                let extra = fallback_points(post, domain, &chosen, q - chosen.len(), &mut r)?;
                chosen.extend(extra);
            }
            Ok(AcquisitionDecision {
                chosen,
                sampled_target_sets: targets,
                acq_values: Some(scores),
                seed,
                fallback,
            })
        }
        Domain::Box(b) => {
            let n_cand = cfg.box_candidates_per_dim.max(1) * b.dim();
            let mut current = post.clone();
            let mut chosen = Vec::with_capacity(q);
            for step in 0..q {
                let scorer = EigScorer::new(&current, &exec)?;
                let x = optimize_acq_batched(|xs| scorer.score(xs), b, n_cand, &mut r)?;
                if step + 1 < q {
                    let mu = current.mean(&x);
                    current = current.condition_noiseless(std::slice::from_ref(&x), &[mu])?;
                }
                chosen.push(DomainPoint::free(x));
            }
            Ok(AcquisitionDecision {
                chosen,
                sampled_target_sets: targets,
                acq_values: None,
                seed,
                fallback: false,
            })
        }
    }
}

/// Closed-form expected improvement over `incumbent` for a Gaussian with
/// mean `mu` and standard deviation `sd`.
pub fn expected_improvement(mu: f64, sd: f64, incumbent: f64) -> f64 {
    if !(sd > 0.0) {
        return (mu - incumbent).max(0.0);
    }
    let n = Normal::standard();
    let z = (mu - incumbent) / sd;
    (sd * (z * n.cdf(z) + n.pdf(z))).max(0.0)
}

/// Expected improvement of the latent function at `x`.
pub fn ei(post: &GpPosterior, x: &[f64], incumbent: f64) -> Result<f64> {
    check_dim(post.dim(), x.len())?;
    Ok(expected_improvement(post.mean(x), post.variance(x).sqrt(), incumbent))
}

/// Largest posterior mean over the observed inputs.
pub fn ei_incumbent(post: &GpPosterior) -> f64 {
    post.points()
        .iter()
        .map(|p| post.mean(p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One EI step. Batches repeat the single-point rule after conditioning on
/// each pick at its posterior mean.
pub fn ei_step<R: Rng + ?Sized>(
    model: &Surrogate,
    domain: &Domain,
    q: usize,
    box_candidates_per_dim: usize,
    rng: &mut R,
) -> Result<AcquisitionDecision> {
    if q == 0 {
        return Err(BaxError::InvalidParameter("q must be at least 1".into()));
    }
    check_dim(model.posterior().dim(), domain.dim())?;
    let seed: u64 = rng.random();
    let mut r = StdRng::seed_from_u64(seed);
    let mut current = model.posterior().clone();
    let mut chosen: Vec<DomainPoint> = Vec::with_capacity(q);
    let mut first_scores = None;
    let inc = if current.num_points() == 0 {
        0.0
    } else {
        ei_incumbent(&current)
    };
    for step in 0..q {
        let score = |xs: &[Vec<f64>]| -> Result<Vec<f64>> {
            let (m, v) = current.predict_marginal(xs)?;
            Ok(m.iter()
                .zip(&v)
                .map(|(m, v)| expected_improvement(*m, v.sqrt(), inc))
                .collect())
        };
        let pick = match domain {
            Domain::Finite(f) => {
                let scores = score(f.points())?;
                let taken: Vec<usize> = chosen.iter().filter_map(|p| p.index).collect();
                let b = argmax_excluding(&scores, &taken).ok_or(BaxError::EmptyInput("candidates"))?;
                if step == 0 {
                    first_scores = Some(scores);
                }
                DomainPoint::indexed(b, f.points()[b].clone())
            }
            Domain::Box(b) => {
                let n = box_candidates_per_dim.max(1) * b.dim();
                DomainPoint::free(optimize_acq_batched(score, b, n, &mut r)?)
            }
        };
        if step + 1 < q {
            let mu = current.mean(&pick.x);
            current = current.condition_noiseless(std::slice::from_ref(&pick.x), &[mu])?;
        }
        chosen.push(pick);
    }
    Ok(AcquisitionDecision {
        chosen,
        sampled_target_sets: Vec::new(),
        acq_values: first_scores,
        seed,
        fallback: false,
    })
}

/// `q` independent uniform draws from the domain.
pub fn random_step<R: Rng + ?Sized>(domain: &Domain, q: usize, rng: &mut R) -> Result<AcquisitionDecision> {
    if q == 0 {
        return Err(BaxError::InvalidParameter("q must be at least 1".into()));
    }
    let seed: u64 = rng.random();
    let mut r = StdRng::seed_from_u64(seed);
    let chosen = match domain {
        Domain::Finite(f) => (0..q)
            .map(|_| {
                let i = r.random_range(0..f.len());
                DomainPoint::indexed(i, f.points()[i].clone())
            })
            .collect(),
        Domain::Box(b) => (0..q).map(|_| DomainPoint::free(b.sample(&mut r))).collect(),
    };
    Ok(AcquisitionDecision {
        chosen,
        sampled_target_sets: Vec::new(),
        acq_values: None,
        seed,
        fallback: false,
    })
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|p| *p * *p <= c)
            .all(|p| !c.is_multiple_of(*p))
        {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// `count` Halton points in the box, randomly shifted modulo 1 per dimension.
pub fn shifted_halton<R: Rng + ?Sized>(b: &BoxDomain, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let primes = first_primes(b.dim());
    let shift: Vec<f64> = (0..b.dim()).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..b.dim())
                .map(|j| {
                    let u = (radical_inverse(i, primes[j]) + shift[j]).fract();
                    b.lower()[j] + u * (b.upper()[j] - b.lower()[j])
                })
                .collect()
        })
        .collect()
}

/// Maximize a pointwise score over a box: score `n_candidates` shifted Halton
/// points, then polish the best few with coordinate-wise golden-section
/// search. Only strict improvements move a point, so a constant score
/// returns the first candidate.
pub fn optimize_acq_over_box<F, R>(score: F, dom: &BoxDomain, n_candidates: usize, rng: &mut R) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let batched = |xs: &[Vec<f64>]| -> Result<Vec<f64>> { Ok(xs.iter().map(|x| score(x)).collect()) };
    optimize_acq_batched(batched, dom, n_candidates, rng).expect("pointwise scoring cannot fail")
}

fn optimize_acq_batched<F, R>(score: F, dom: &BoxDomain, n_candidates: usize, rng: &mut R) -> Result<Vec<f64>>
where
    F: Fn(&[Vec<f64>]) -> Result<Vec<f64>>,
    R: Rng + ?Sized,
{
    let cands = shifted_halton(dom, n_candidates.max(1), rng);
    let scores = score(&cands)?;
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (nan_low(scores[a]), nan_low(scores[b]));
        sb.total_cmp(&sa).then(a.cmp(&b))
    });
    let eval = |x: &[f64]| -> Result<f64> { Ok(nan_low(score(&[x.to_vec()])?[0])) };

    let mut best_x = cands[order[0]].clone();
    let mut best_s = nan_low(scores[order[0]]);
    for &start in order.iter().take(REFINE_TOP) {
        let mut x = cands[start].clone();
        let mut s = nan_low(scores[start]);
        for _ in 0..REFINE_SWEEPS {
            for j in 0..dom.dim() {
                let width = REFINE_RADIUS * (dom.upper()[j] - dom.lower()[j]);
                let lo = (x[j] - width).max(dom.lower()[j]);
                let hi = (x[j] + width).min(dom.upper()[j]);
                let (t, st) = golden_section(
                    |t| {
                        let mut y = x.clone();
                        y[j] = t;
                        eval(&y)
                    },
                    lo,
                    hi,
                )?;
                if st > s {
                    x[j] = t;
                    s = st;
                }
            }
        }
        if s > best_s {
            best_s = s;
            best_x = x;
        }
    }
    Ok(best_x)
}

fn nan_low(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}
