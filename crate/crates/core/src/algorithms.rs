//! Base algorithms: each maps a function view to a target set.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::{BoxDomain, Domain, Objective, TargetSet};
use crate::error::{BaxError, Result};
use crate::gp::{jittered_cholesky, KernelSpec};

pub const DEFAULT_ETA_SAMPLES: usize = 64;

/// Knobs for projected gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOptConfig {
    pub restarts: usize,
    pub max_steps: usize,
    /// Initial step length as a fraction of the box diagonal.
    pub initial_step: f64,
    pub max_backtracks: usize,
}

impl Default for LocalOptConfig {
    fn default() -> Self {
        LocalOptConfig {
            restarts: 10,
            max_steps: 200,
            initial_step: 0.1,
            max_backtracks: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub enum BaseAlgorithm {
    /// `{x : f(x) > τ}` over a finite domain.
    LevelSet { threshold: f64 },
    /// The `k` points with the largest values.
    TopK { k: usize },
    /// Greedy maximization of `E_η[max_{x∈S} f(x) + η(x)]` over `|S| = k`.
    DiscoBax { k: usize, eta: Arc<DMatrix<f64>> },
    /// Multi-start gradient ascent over a box; returns one point.
    LocalOpt(LocalOptConfig),
}

impl BaseAlgorithm {
    /// Run on any function view. Finite-domain algorithms evaluate the view
    /// on every domain point; local optimization needs a gradient.
    pub fn run<R: Rng + ?Sized>(&self, f: &dyn Objective, domain: &Domain, rng: &mut R) -> Result<TargetSet> {
        match self {
            BaseAlgorithm::LocalOpt(cfg) => local_opt_algorithm(f, domain.as_box()?, cfg, rng),
            _ => {
                let dom = domain.as_finite()?;
                self.run_on_values(&f.values(dom.points()))
            }
        }
    }

    /// Run a finite-domain algorithm on precomputed values (one per point).
    pub fn run_on_values(&self, values: &[f64]) -> Result<TargetSet> {
        match self {
            BaseAlgorithm::LevelSet { threshold } => Ok(levelset_algorithm(values, *threshold)),
            BaseAlgorithm::TopK { k } => topk_algorithm(values, *k),
            BaseAlgorithm::DiscoBax { k, eta } => discobax_greedy(values, *k, eta),
            BaseAlgorithm::LocalOpt(_) => Err(BaxError::InvalidParameter(
                "local optimization needs a function, not a value table".into(),
            )),
        }
    }

    pub fn needs_gradient(&self) -> bool {
        matches!(self, BaseAlgorithm::LocalOpt(_))
    }
}

/// Indices with value strictly above `threshold`, in domain order.
pub fn levelset_algorithm(values: &[f64], threshold: f64) -> TargetSet {
    TargetSet::Indices(
        values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > threshold)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// The `k` largest values, ties to the lowest index, ordered by decreasing value.
pub fn topk_algorithm(values: &[f64], k: usize) -> Result<TargetSet> {
    if k == 0 || k > values.len() {
        return Err(BaxError::InvalidParameter(format!(
            "top-k needs 1 ≤ k ≤ {}, got {k}",
            values.len()
        )));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(TargetSet::Indices(order))
}

/// Monte Carlo estimate of `E_η[max_{x∈S} f(x) + η(x)]` for `eta` of shape
/// `E × N`.
pub fn discobax_value(values: &[f64], eta: &DMatrix<f64>, set: &[usize]) -> f64 {
    if set.is_empty() || eta.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let total: f64 = (0..eta.nrows())
        .map(|e| {
            set.iter()
                .map(|&i| values[i] + eta[(e, i)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / eta.nrows() as f64
}

/// Plain greedy submodular maximization; returns indices in selection order.
pub fn discobax_greedy(values: &[f64], k: usize, eta: &DMatrix<f64>) -> Result<TargetSet> {
    let n = values.len();
    if eta.nrows() == 0 {
        return Err(BaxError::EmptyInput("eta samples"));
    }
    if eta.ncols() != n {
        return Err(BaxError::DimensionMismatch {
            expected: n,
            found: eta.ncols(),
        });
    }
    if k == 0 || k > n {
        return Err(BaxError::InvalidParameter(format!(
            "DiscoBAX needs 1 ≤ k ≤ {n}, got {k}"
        )));
    }
    let draws = eta.nrows();
    let mut best = vec![f64::NEG_INFINITY; draws];
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    for _ in 0..k {
        let mut arg = usize::MAX;
        let mut arg_val = f64::NEG_INFINITY;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let v: f64 = (0..draws).map(|e| best[e].max(values[i] + eta[(e, i)])).sum();
            if arg == usize::MAX || v > arg_val {
                arg = i;
                arg_val = v;
            }
        }
        taken[arg] = true;
        chosen.push(arg);
        for (e, b) in best.iter_mut().enumerate() {
            *b = b.max(values[arg] + eta[(e, arg)]);
        }
    }
    Ok(TargetSet::Indices(chosen))
}

/// `draws` i.i.d. zero-mean RBF-GP samples of η over `points`, one per row.
pub fn sample_eta<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    lengthscales: &[f64],
    variance: f64,
    draws: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = points.len();
    if variance < 0.0 {
        return Err(BaxError::InvalidParameter("eta variance must be non-negative".into()));
    }
    if variance == 0.0 {
        return Ok(DMatrix::zeros(draws, n));
    }
    let spec = KernelSpec::new(crate::gp::KernelKind::Rbf, lengthscales.to_vec(), variance, 0.0)?;
    let k = DMatrix::from_fn(n, n, |i, j| spec.eval_unchecked(&points[i], &points[j]));
    let (l, _) = jittered_cholesky(&k, spec.jitter() * 100.0, "eta prior")?;
    let z = DMatrix::from_fn(n, draws, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok((l * z).transpose())
}

/// Multi-start projected gradient ascent; returns the best terminal point.
pub fn local_opt_algorithm<R: Rng + ?Sized>(
    f: &dyn Objective,
    dom: &BoxDomain,
    cfg: &LocalOptConfig,
    rng: &mut R,
) -> Result<TargetSet> {
    if f.gradient(dom.lower()).is_none() {
        return Err(BaxError::InvalidParameter("local optimization needs a gradient".into()));
    }
    let t0 = cfg.initial_step * dom.diameter();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let start = dom.sample(rng);
        let (x, fx) = ascend(f, dom, start, t0, cfg);
        if best.as_ref().is_none_or(|(_, b)| fx > *b) {
            best = Some((x, fx));
        }
    }
    let (x, _) = best.expect("at least one restart");
    Ok(TargetSet::Points(vec![x]))
}

fn ascend(f: &dyn Objective, dom: &BoxDomain, mut x: Vec<f64>, t0: f64, cfg: &LocalOptConfig) -> (Vec<f64>, f64) {
    let mut fx = f.value(&x);
    let mut t = t0;
    for _ in 0..cfg.max_steps {
        let g = f.gradient(&x).unwrap_or_default();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            break;
        }
        let mut moved = false;
        for _ in 0..=cfg.max_backtracks {
            let mut cand: Vec<f64> = x.iter().zip(&g).map(|(v, gj)| v + t * gj / norm).collect();
            dom.clip(&mut cand);
            let fc = f.value(&cand);
            if fc > fx {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
        t = (2.0 * t).min(t0);
    }
    (x, fx)
}
