//! Principal component analysis by eigendecomposition of the sample
//! covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{BaxError, Result};
use crate::problems::data::TabularDataset;

pub const DEFAULT_COMPONENTS: usize = 20;
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: DVector<f64>,
    /// `d × m` orthonormal directions, by decreasing eigenvalue.
    pub components: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Sum of all covariance eigenvalues.
    pub total_variance: f64,
}

impl Pca {
    /// Fit up to `n_components` directions. Directions whose eigenvalue is
    /// numerically zero are dropped, so fewer may be kept.
    pub fn fit(data: &DMatrix<f64>, n_components: usize) -> Result<Self> {
        let (n, d) = data.shape();
        if n < 2 || d == 0 {
            return Err(BaxError::EmptyInput("PCA needs at least two rows"));
        }
        if n_components == 0 || n_components > n.min(d) {
            return Err(BaxError::InvalidParameter(format!(
                "PCA components must lie in 1..={}, got {n_components}",
                n.min(d)
            )));
        }
        let mean = data.row_mean().transpose();
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let cov = centered.tr_mul(&centered) / (n - 1) as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let total_variance: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let top = eig.eigenvalues[order[0]].max(0.0);
        let keep: Vec<usize> = order
            .into_iter()
            .take(n_components)
            .filter(|&i| eig.eigenvalues[i] > RANK_TOL * top.max(f64::MIN_POSITIVE))
            .collect();
        let components = eig.eigenvectors.select_columns(&keep);
        let eigenvalues = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
        Ok(Pca {
            mean,
            components,
            eigenvalues,
            total_variance,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn explained_variance_ratio(&self) -> f64 {
        if self.total_variance > 0.0 {
            self.eigenvalues.iter().sum::<f64>() / self.total_variance
        } else {
            1.0
        }
    }

    /// Scores of each row on the kept directions.
    pub fn transform(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        centered * &self.components
    }

    pub fn inverse_transform(&self, scores: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = scores * self.components.transpose();
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        out
    }
}

/// The dataset with its embedding replaced by PCA scores.
pub fn pca_reduce(td: &TabularDataset, n_components: usize) -> Result<TabularDataset> {
    let pca = Pca::fit(&td.embedding, n_components)?;
    TabularDataset::new(td.ids.clone(), pca.transform(&td.embedding), td.values.clone())
}
