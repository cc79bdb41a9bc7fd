use nalgebra::{DMatrix, DVector};

use super::{jittered_cholesky, KernelSpec};
use crate::error::{check_dim, BaxError, Result};

/// Observation history: input points and their (noisy) responses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn empty(dim: usize) -> Self {
        Dataset {
            points: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(BaxError::DimensionMismatch {
                expected: points.len(),
                found: values.len(),
            });
        }
        let dim = points.first().map_or(0, Vec::len);
        for p in &points {
            check_dim(dim, p.len())?;
        }
        Ok(Dataset { points, values, dim })
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if self.points.is_empty() && self.dim == 0 {
            self.dim = x.len();
        }
        check_dim(self.dim, x.len())?;
        self.points.push(x);
        self.values.push(y);
        Ok(())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
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
}

pub(crate) fn kernel_matrix(kernel: &KernelSpec, a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| kernel.eval_unchecked(&a[i], &b[j]))
}

fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = b.clone();
    if l.nrows() > 0 {
        l.solve_lower_triangular_mut(&mut x);
    }
    x
}

/// Posterior of a zero-mean GP given observations.
///
/// Each training point carries its own diagonal term (observation noise plus
/// jitter), so noisy observations and noiseless fantasies can coexist in one
/// factorization. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: KernelSpec,
    points: Vec<Vec<f64>>,
    targets: DVector<f64>,
    diag: DVector<f64>,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    dim: usize,
}

impl GpPosterior {
    /// Prior process with no observations.
    pub fn prior(kernel: KernelSpec) -> Self {
        let dim = kernel.dim();
        GpPosterior {
            kernel,
            points: Vec::new(),
            targets: DVector::zeros(0),
            diag: DVector::zeros(0),
            chol: DMatrix::zeros(0, 0),
            alpha: DVector::zeros(0),
            dim,
        }
    }

    pub fn fit(data: &Dataset, kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        if !data.is_empty() {
            check_dim(kernel.dim(), data.dim())?;
        }
        let dim = kernel.dim();
        let n = data.len();
        let mut k = kernel_matrix(&kernel, data.points(), data.points());
        for i in 0..n {
            k[(i, i)] += kernel.noise_variance;
        }
        let (chol, jitter) = jittered_cholesky(&k, kernel.jitter(), "posterior covariance")?;
        let targets = DVector::from_column_slice(data.values());
        let alpha = Self::solve_alpha(&chol, &targets);
        Ok(GpPosterior {
            diag: DVector::from_element(n, kernel.noise_variance + jitter),
            kernel,
            points: data.points().to_vec(),
            targets,
            chol,
            alpha,
            dim,
        })
    }

    fn solve_alpha(chol: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        if y.is_empty() {
            return DVector::zeros(0);
        }
        let mut a = y.clone();
        chol.solve_lower_triangular_mut(&mut a);
        chol.tr_solve_lower_triangular_mut(&mut a);
        a
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// Diagonal added to the training kernel matrix (noise plus jitter) per point.
    pub fn diag(&self) -> &DVector<f64> {
        &self.diag
    }

    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn noise_variance(&self) -> f64 {
        self.kernel.noise_variance
    }

    fn check_queries(&self, queries: &[Vec<f64>]) -> Result<()> {
        for q in queries {
            check_dim(self.dim, q.len())?;
        }
        Ok(())
    }

    /// `L⁻¹ K(train, queries)`, shape `n × m`.
    pub(crate) fn whitened_cross(&self, queries: &[Vec<f64>]) -> DMatrix<f64> {
        let kx = kernel_matrix(&self.kernel, &self.points, queries);
        solve_lower(&self.chol, &kx)
    }

    /// Latent posterior mean and full covariance at `queries`.
    pub fn predict(&self, queries: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_queries(queries)?;
        let kx = kernel_matrix(&self.kernel, &self.points, queries);
        let mean = kx.tr_mul(&self.alpha);
        let v = solve_lower(&self.chol, &kx);
        let mut cov = kernel_matrix(&self.kernel, queries, queries) - v.tr_mul(&v);
        cov = (&cov + cov.transpose()) * 0.5;
        Ok((mean, cov))
    }

    /// Latent posterior mean and marginal variances (no cross-covariances).
    pub fn predict_marginal(&self, queries: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_queries(queries)?;
        let kx = kernel_matrix(&self.kernel, &self.points, queries);
        let mean = kx.tr_mul(&self.alpha);
        let v = solve_lower(&self.chol, &kx);
        let prior = self.kernel.outputscale;
        let var = (0..queries.len())
            .map(|j| {
                let c = v.column(j);
                (prior - c.dot(&c)).max(0.0)
            })
            .collect();
        Ok((mean.iter().copied().collect(), var))
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(self.alpha.iter())
            .map(|(p, a)| a * self.kernel.eval_unchecked(x, p))
            .sum()
    }

    pub fn mean_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (p, a) in self.points.iter().zip(self.alpha.iter()) {
            self.kernel.grad_x_into(x, p, *a, &mut g);
        }
        g
    }

    pub fn variance(&self, x: &[f64]) -> f64 {
        if self.points.is_empty() {
            return self.kernel.outputscale;
        }
        let kx = DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|p| self.kernel.eval_unchecked(x, p)),
        );
        let mut v = kx;
        self.chol.solve_lower_triangular_mut(&mut v);
        (self.kernel.outputscale - v.dot(&v)).max(0.0)
    }

    /// Posterior covariance between two point sets.
    pub fn covariance(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
        let va = self.whitened_cross(a);
        let vb = self.whitened_cross(b);
        kernel_matrix(&self.kernel, a, b) - va.tr_mul(&vb)
    }

    /// Condition on exact function values at `new_points` (plus jitter).
    ///
    /// Duplicate points within `new_points` are dropped, keeping the first.
    /// The factorization is extended blockwise, so the cost is
    /// `O(n²m + m³)` for `m` new points.
    pub fn condition_noiseless(&self, new_points: &[Vec<f64>], new_values: &[f64]) -> Result<Self> {
        if new_points.len() != new_values.len() {
            return Err(BaxError::DimensionMismatch {
                expected: new_points.len(),
                found: new_values.len(),
            });
        }
        self.check_queries(new_points)?;
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(new_points.len());
        let mut vals: Vec<f64> = Vec::with_capacity(new_points.len());
        for (p, v) in new_points.iter().zip(new_values) {
            if !pts.iter().any(|q| q == p) {
                pts.push(p.clone());
                vals.push(*v);
            }
        }
        if pts.is_empty() {
            return Ok(self.clone());
        }
        let n = self.points.len();
        let m = pts.len();
        let v = self.whitened_cross(&pts);
        let schur = kernel_matrix(&self.kernel, &pts, &pts) - v.tr_mul(&v);
        let (l22, jitter) = jittered_cholesky(&schur, self.kernel.jitter(), "fantasy conditioning")?;

        let mut chol = DMatrix::zeros(n + m, n + m);
        chol.view_mut((0, 0), (n, n)).copy_from(&self.chol);
        chol.view_mut((n, 0), (m, n)).copy_from(&v.transpose());
        chol.view_mut((n, n), (m, m)).copy_from(&l22);

        let mut points = self.points.clone();
        points.extend(pts);
        let targets = DVector::from_iterator(n + m, self.targets.iter().copied().chain(vals.iter().copied()));
        let diag = DVector::from_iterator(n + m, self.diag.iter().copied().chain(std::iter::repeat_n(jitter, m)));
        let alpha = Self::solve_alpha(&chol, &targets);
        Ok(GpPosterior {
            kernel: self.kernel.clone(),
            points,
            targets,
            diag,
            chol,
            alpha,
            dim: self.dim,
        })
    }
}
