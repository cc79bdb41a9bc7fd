//! Type-II maximum likelihood for kernel hyperparameters.
//!
//! The optimizer works on `θ = (log ℓ_1..log ℓ_d, log s, log σ²)` and uses the
//! closed-form gradient `½ tr((ααᵀ − K⁻¹) ∂K/∂θ)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::posterior::kernel_matrix;
use super::{jittered_cholesky, Dataset, KernelSpec};
use crate::error::{check_dim, BaxError, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Box constraints on the hyperparameters (natural scale, not log).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub outputscale: (f64, f64),
    pub noise_variance: (f64, f64),
}

impl HyperBounds {
    /// Bounds relative to the input scale and the response variance.
    pub fn scaled(input_scale: f64, response_variance: f64) -> Self {
        let v = if response_variance > 0.0 {
            response_variance
        } else {
            1.0
        };
        HyperBounds {
            lengthscale: (1e-3 * input_scale, 1e3 * input_scale),
            outputscale: (1e-4 * v, 1e4 * v),
            noise_variance: (1e-6 * v, v),
        }
    }

    fn log_box(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.lengthscale.0.ln(); dim];
        let mut hi = vec![self.lengthscale.1.ln(); dim];
        lo.push(self.outputscale.0.ln());
        hi.push(self.outputscale.1.ln());
        lo.push(self.noise_variance.0.ln());
        hi.push(self.noise_variance.1.ln());
        (lo, hi)
    }
}

impl Default for HyperBounds {
    fn default() -> Self {
        HyperBounds::scaled(1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub spec: KernelSpec,
    pub log_likelihood: f64,
    /// False when no trajectory improved on the initial spec.
    pub improved: bool,
}

fn check_data(data: &Dataset, spec: &KernelSpec) -> Result<()> {
    spec.validate()?;
    if data.is_empty() {
        return Err(BaxError::EmptyInput("dataset"));
    }
    check_dim(spec.dim(), data.dim())
}

struct Factored {
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

fn factor(data: &Dataset, spec: &KernelSpec) -> Result<Factored> {
    let mut k = kernel_matrix(spec, data.points(), data.points());
    for i in 0..data.len() {
        k[(i, i)] += spec.noise_variance;
    }
    let (chol, jitter) = jittered_cholesky(&k, spec.jitter(), "marginal likelihood")?;
    let mut alpha = DVector::from_column_slice(data.values());
    chol.solve_lower_triangular_mut(&mut alpha);
    chol.tr_solve_lower_triangular_mut(&mut alpha);
    Ok(Factored { chol, alpha, jitter })
}

fn mll_from(data: &Dataset, f: &Factored) -> f64 {
    let y = DVector::from_column_slice(data.values());
    let n = data.len() as f64;
    let logdet: f64 = f.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * y.dot(&f.alpha) - logdet - 0.5 * n * LN_2PI
}

/// `-½ yᵀK_y⁻¹y − ½ log|K_y| − (n/2) log 2π` with `K_y = K + σ²I + jitter·I`.
pub fn log_marginal_likelihood(data: &Dataset, spec: &KernelSpec) -> Result<f64> {
    check_data(data, spec)?;
    Ok(mll_from(data, &factor(data, spec)?))
}

/// Marginal likelihood and its gradient in log-parameter space, ordered
/// `(log ℓ_1, …, log ℓ_d, log outputscale, log noise_variance)`.
pub fn mll_with_gradient(data: &Dataset, spec: &KernelSpec) -> Result<(f64, Vec<f64>)> {
    check_data(data, spec)?;
    let f = factor(data, spec)?;
    let value = mll_from(data, &f);
    let n = data.len();
    let d = spec.dim();

    let mut kinv = DMatrix::identity(n, n);
    f.chol.solve_lower_triangular_mut(&mut kinv);
    f.chol.tr_solve_lower_triangular_mut(&mut kinv);
    let a = &f.alpha * f.alpha.transpose() - kinv;

    let pts = data.points();
    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        for j in 0..=i {
            let w = if i == j { 0.5 } else { 1.0 } * a[(i, j)];
            let g = spec.grad_log_params(&pts[i], &pts[j]);
            for (acc, gk) in grad.iter_mut().zip(&g) {
                *acc += w * gk;
            }
        }
    }
    // The jitter scales with the outputscale, so it belongs to ∂K/∂log s.
    let trace_a: f64 = a.diagonal().sum();
    grad[d] += 0.5 * f.jitter * trace_a;
    grad[d + 1] = 0.5 * spec.noise_variance * trace_a;
    Ok((value, grad))
}

fn to_log(spec: &KernelSpec) -> Vec<f64> {
    let mut t: Vec<f64> = spec.lengthscales.iter().map(|l| l.ln()).collect();
    t.push(spec.outputscale.ln());
    t.push(spec.noise_variance.max(f64::MIN_POSITIVE).ln());
    t
}

fn from_log(template: &KernelSpec, t: &[f64]) -> KernelSpec {
    let d = template.dim();
    KernelSpec {
        kind: template.kind,
        lengthscales: t[..d].iter().map(|v| v.exp()).collect(),
        outputscale: t[d].exp(),
        noise_variance: t[d + 1].exp(),
    }
}

fn clip(t: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in t.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Projected gradient ascent with Barzilai–Borwein trial steps and
/// backtracking.
fn ascend(
    data: &Dataset,
    template: &KernelSpec,
    start: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    max_iter: usize,
) -> Option<(Vec<f64>, f64)> {
    let eval = |t: &[f64]| mll_with_gradient(data, &from_log(template, t)).ok();
    let mut x = start;
    clip(&mut x, lo, hi);
    let (mut fx, mut gx) = eval(&x)?;
    let gnorm = gx.iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut step = 1.0 / gnorm.max(1.0);
    let mut stalls = 0;

    for _ in 0..max_iter {
        let mut accepted = None;
        let mut t = step;
        for _ in 0..40 {
            let mut cand: Vec<f64> = x.iter().zip(&gx).map(|(v, g)| v + t * g).collect();
            clip(&mut cand, lo, hi);
            let dir: f64 = cand.iter().zip(&x).zip(&gx).map(|((c, v), g)| (c - v) * g).sum();
            if dir <= 0.0 {
                break;
            }
            if let Some((fc, gc)) = eval(&cand) {
                if fc >= fx + 1e-4 * dir {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gnew.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum::<f64>().abs();
        step = if sy > 1e-300 {
            (ss / sy).clamp(1e-8, 1e3)
        } else {
            t * 2.0
        };
        let gain = fnew - fx;
        x = xn;
        fx = fnew;
        gx = gnew;
        if gain < 1e-9 * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Some((x, fx))
}

/// Maximize the marginal likelihood from `initial` and from `restarts`
/// perturbed starting points; returns the best spec found.
pub fn fit_hyperparameters<R: Rng + ?Sized>(
    data: &Dataset,
    initial: &KernelSpec,
    bounds: &HyperBounds,
    restarts: usize,
    rng: &mut R,
) -> Result<FitOutcome> {
    check_data(data, initial)?;
    if data.len() < 2 {
        return Err(BaxError::InvalidParameter(
            "fitting needs at least two observations".into(),
        ));
    }
    let (lo, hi) = bounds.log_box(initial.dim());
    let raw = to_log(initial);
    let mut start = raw.clone();
    clip(&mut start, &lo, &hi);
    let initial_spec = if start == raw {
        initial.clone()
    } else {
        from_log(initial, &start)
    };
    let initial_ll = log_marginal_likelihood(data, &initial_spec).unwrap_or(f64::NEG_INFINITY);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..=restarts {
        let x0 = if r == 0 {
            start.clone()
        } else {
            let mut x: Vec<f64> = start.iter().map(|v| v + rng.sample::<f64, _>(StandardNormal)).collect();
            clip(&mut x, &lo, &hi);
            x
        };
        if let Some((x, fx)) = ascend(data, initial, x0, &lo, &hi, 200) {
            if best.as_ref().is_none_or(|(_, fb)| fx > *fb) {
                best = Some((x, fx));
            }
        }
    }
    match best {
        Some((x, fx)) if fx > initial_ll => Ok(FitOutcome {
            spec: from_log(initial, &x),
            log_likelihood: fx,
            improved: true,
        }),
        _ => Ok(FitOutcome {
            spec: initial_spec,
            log_likelihood: initial_ll,
            improved: false,
        }),
    }
}
