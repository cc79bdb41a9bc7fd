//! Search domains, target sets, and the function views base algorithms consume.

use std::collections::BTreeSet;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{check_dim, BaxError, Result};
use crate::gp::GpPosterior;
use crate::paths::SamplePath;

/// A finite table of candidate points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDomain {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl FiniteDomain {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().ok_or(BaxError::EmptyInput("finite domain"))?.len();
        for p in &points {
            check_dim(dim, p.len())?;
        }
        Ok(FiniteDomain { points, dim })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-dimension (min, max) over the table.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.points {
            for j in 0..self.dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        (lo, hi)
    }
}

/// An axis-aligned box `[lo_j, hi_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(BaxError::EmptyInput("box bounds"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(BaxError::InvalidParameter(
                "box needs lo < hi in every dimension".into(),
            ));
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        BoxDomain {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn clip(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, l), u)| *l <= *v && *v <= *u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Finite(FiniteDomain),
    Box(BoxDomain),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Finite(f) => f.dim(),
            Domain::Box(b) => b.dim(),
        }
    }

    pub fn as_finite(&self) -> Result<&FiniteDomain> {
        match self {
            Domain::Finite(f) => Ok(f),
            Domain::Box(_) => Err(BaxError::InvalidParameter("expected a finite domain".into())),
        }
    }

    pub fn as_box(&self) -> Result<&BoxDomain> {
        match self {
            Domain::Box(b) => Ok(b),
            Domain::Finite(_) => Err(BaxError::InvalidParameter("expected a box domain".into())),
        }
    }

    /// `count` uniform draws; finite domains sample distinct indices when
    /// possible.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<DomainPoint> {
        match self {
            Domain::Finite(f) => {
                if count <= f.len() {
                    sample_indices(rng, f.len(), count)
                        .into_iter()
                        .map(|i| DomainPoint::indexed(i, f.points[i].clone()))
                        .collect()
                } else {
                    (0..count)
                        .map(|_| {
                            let i = rng.random_range(0..f.len());
                            DomainPoint::indexed(i, f.points[i].clone())
                        })
                        .collect()
                }
            }
            Domain::Box(b) => (0..count).map(|_| DomainPoint::free(b.sample(rng))).collect(),
        }
    }
}

/// A point, tagged with its table index when it comes from a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPoint {
    pub index: Option<usize>,
    pub x: Vec<f64>,
}

impl DomainPoint {
    pub fn indexed(index: usize, x: Vec<f64>) -> Self {
        DomainPoint { index: Some(index), x }
    }

    pub fn free(x: Vec<f64>) -> Self {
        DomainPoint { index: None, x }
    }
}

/// Output of a base algorithm.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSet {
    /// Indices into a finite domain, in the algorithm's output order.
    Indices(Vec<usize>),
    /// Points of a continuous domain.
    Points(Vec<Vec<f64>>),
}

impl TargetSet {
    pub fn len(&self) -> usize {
        match self {
            TargetSet::Indices(v) => v.len(),
            TargetSet::Points(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> Option<&[usize]> {
        match self {
            TargetSet::Indices(v) => Some(v),
            TargetSet::Points(_) => None,
        }
    }

    pub fn index_set(&self) -> BTreeSet<usize> {
        self.indices().map(|v| v.iter().copied().collect()).unwrap_or_default()
    }

    /// Members as domain points.
    pub fn members(&self, domain: &Domain) -> Vec<DomainPoint> {
        match (self, domain) {
            (TargetSet::Indices(ix), Domain::Finite(f)) => ix
                .iter()
                .map(|&i| DomainPoint::indexed(i, f.points()[i].clone()))
                .collect(),
            (TargetSet::Points(ps), _) => ps.iter().cloned().map(DomainPoint::free).collect(),
            (TargetSet::Indices(_), Domain::Box(_)) => Vec::new(),
        }
    }
}

/// A function that base algorithms can query: the true objective, a posterior
/// sample path, or the posterior mean.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn values(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|p| self.value(p)).collect()
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }

    fn values(&self, points: &[Vec<f64>]) -> Vec<f64> {
        (**self).values(points)
    }
}

impl Objective for SamplePath {
    fn dim(&self) -> usize {
        SamplePath::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.grad_unchecked(x))
    }
}

/// The posterior mean `μ_n` as a function view.
pub struct PosteriorMean<'a>(pub &'a GpPosterior);

impl Objective for PosteriorMean<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.mean(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.0.mean_grad(x))
    }

    fn values(&self, points: &[Vec<f64>]) -> Vec<f64> {
        self.0
            .predict_marginal(points)
            .map(|(m, _)| m)
            .unwrap_or_else(|_| points.iter().map(|p| self.0.mean(p)).collect())
    }
}

/// Closure-backed view, with an optional analytic gradient.
pub struct FnObjective<F, G = fn(&[f64]) -> Vec<f64>> {
    dim: usize,
    f: F,
    grad: Option<G>,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f, grad: None }
    }
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn with_gradient(dim: usize, f: F, grad: G) -> Self {
        FnObjective {
            dim,
            f,
            grad: Some(grad),
        }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }
}
