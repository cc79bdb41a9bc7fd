//! Benchmark problems. Every problem lives in model space: inputs are scaled
//! to the unit cube and the objective is to be maximized, so minimization
//! test functions are negated here.

pub mod data;
pub mod functions;
pub mod pca;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::algorithms::{discobax_greedy, sample_eta, BaseAlgorithm, LocalOptConfig, DEFAULT_ETA_SAMPLES};
use crate::domain::{BoxDomain, Domain, DomainPoint, FiniteDomain, TargetSet};
use crate::error::{BaxError, Result};
use crate::metrics::{discobax_regret, f1_score, inference_regret_log10, jaccard_distance};

pub use data::{
    grid_to_finite_domain, load_grid, load_tabular, normalize_points, quantile_threshold, read_grid, read_tabular,
    synthetic_tabular, synthetic_volcano, write_grid, write_tabular, GridDataset, TabularDataset,
};
pub use pca::{pca_reduce, Pca, DEFAULT_COMPONENTS};

/// Level-set threshold quantile used by the level-set problems.
pub const LEVEL_SET_QUANTILE: f64 = 0.55;
/// Relative observation noise (standard deviation over the objective's
/// spread) for synthetic test functions.
pub const SYNTHETIC_NOISE_REL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    F1,
    Jaccard,
    LogRegret,
    DiscoRegret,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::F1 => "f1",
            MetricKind::Jaccard => "jaccard",
            MetricKind::LogRegret => "log10_regret",
            MetricKind::DiscoRegret => "discobax_regret",
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        matches!(self, MetricKind::F1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Target(TargetSet),
    Optimum(f64),
}

type BoxFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Table(Vec<f64>),
    Function(BoxFn),
}

#[derive(Clone)]
pub struct Problem {
    name: String,
    domain: Domain,
    algorithm: BaseAlgorithm,
    metric: MetricKind,
    truth: GroundTruth,
    source: Source,
    noise_std: f64,
    default_q: usize,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.domain.dim())
            .field("metric", &self.metric)
            .field("noise_std", &self.noise_std)
            .finish_non_exhaustive()
    }
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

fn grid_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Uniform `n × n` grid over `[lo, hi]²`, row-major in the first coordinate.
pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    let axis = grid_axis(lo, hi, n);
    cartesian(&[axis.clone(), axis])
}

/// The 10 × 10 × 10 grid over `[−2, 2]³`.
pub fn make_rosenbrock_grid() -> FiniteDomain {
    let axis = grid_axis(-2.0, 2.0, 10);
    FiniteDomain::new(cartesian(&[axis.clone(), axis.clone(), axis])).expect("non-empty grid")
}

impl Problem {
    fn finite(
        name: &str,
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
        algorithm: BaseAlgorithm,
        metric: MetricKind,
        noise_std: f64,
    ) -> Result<Self> {
        let domain = FiniteDomain::new(normalize_points(&points))?;
        let truth = GroundTruth::Target(algorithm.run_on_values(&values)?);
        Ok(Problem {
            name: name.to_string(),
            domain: Domain::Finite(domain),
            algorithm,
            metric,
            truth,
            source: Source::Table(values),
            noise_std,
            default_q: 1,
        })
    }

    fn boxed(name: &str, dim: usize, f: BoxFn, f_star: f64, default_q: usize) -> Self {
        let mut rng = StdRng::seed_from_u64(0);
        let b = BoxDomain::unit(dim);
        let sample: Vec<f64> = (0..1024).map(|_| f(&b.sample(&mut rng))).collect();
        Problem {
            name: name.to_string(),
            domain: Domain::Box(b),
            algorithm: BaseAlgorithm::LocalOpt(LocalOptConfig::default()),
            metric: MetricKind::LogRegret,
            truth: GroundTruth::Optimum(f_star),
            source: Source::Function(f),
            noise_std: SYNTHETIC_NOISE_REL * std_dev(&sample),
            default_q,
        }
    }

    /// Negated Hartmann-6 on `[0, 1]⁶` with local optimization.
    pub fn hartmann6() -> Self {
        let f: BoxFn = Arc::new(|x: &[f64]| -functions::hartmann6(x).expect("six inputs"));
        Self::boxed("hartmann6", 6, f, -functions::HARTMANN6_MIN, 1)
    }

    /// Negated Ackley on `[−32.768, 32.768]^dim`, seen through the unit cube.
    pub fn ackley(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(BaxError::InvalidParameter("ackley needs dim ≥ 1".into()));
        }
        let b = functions::ACKLEY_BOUND;
        let f: BoxFn = Arc::new(move |x: &[f64]| {
            let z: Vec<f64> = x.iter().map(|u| -b + 2.0 * b * u).collect();
            -functions::ackley(&z).expect("non-empty input")
        });
        Ok(Self::boxed(&format!("ackley{dim}"), dim, f, 0.0, 2))
    }

    /// Negated Himmelblau on an `n × n` grid over `[−6, 6]²`, level set above
    /// the 0.55 quantile.
    pub fn himmelblau(grid: usize) -> Result<Self> {
        if grid < 2 {
            return Err(BaxError::InvalidParameter(
                "grid needs at least 2 points per axis".into(),
            ));
        }
        let points = square_grid(-6.0, 6.0, grid);
        let values: Vec<f64> = points
            .iter()
            .map(|p| -functions::himmelblau(p).expect("two inputs"))
            .collect();
        let tau = quantile_threshold(&values, LEVEL_SET_QUANTILE)?;
        let noise = SYNTHETIC_NOISE_REL * std_dev(&values);
        Self::finite(
            "himmelblau",
            points,
            values,
            BaseAlgorithm::LevelSet { threshold: tau },
            MetricKind::F1,
            noise,
        )
    }

    /// Level set of a height grid above its 0.55 quantile.
    pub fn level_set_grid(name: &str, grid: &GridDataset) -> Result<Self> {
        let (dom, values) = grid_to_finite_domain(grid)?;
        let tau = quantile_threshold(&values, LEVEL_SET_QUANTILE)?;
        Self::finite(
            name,
            dom.points().to_vec(),
            values,
            BaseAlgorithm::LevelSet { threshold: tau },
            MetricKind::F1,
            0.0,
        )
    }

    /// Top-`k` of negated Rosenbrock on the 1000-point grid.
    pub fn rosenbrock(k: usize) -> Result<Self> {
        let dom = make_rosenbrock_grid();
        let values: Vec<f64> = dom
            .points()
            .iter()
            .map(|p| -functions::rosenbrock(p).expect("three inputs"))
            .collect();
        let noise = SYNTHETIC_NOISE_REL * std_dev(&values);
        Self::finite(
            "rosenbrock",
            dom.points().to_vec(),
            values,
            BaseAlgorithm::TopK { k },
            MetricKind::Jaccard,
            noise,
        )
    }

    /// DiscoBAX selection of `k` records. The embedding is reduced to
    /// `components` principal directions; η is an RBF GP on the normalized
    /// embedding with lengthscale `eta.lengthscale` and variance
    /// `eta.variance_ratio` times the value variance.
    pub fn discobax(name: &str, td: &TabularDataset, k: usize, components: usize, eta: &EtaConfig) -> Result<Self> {
        let reduced = pca_reduce(td, components.min(td.len().min(td.width())))?;
        let points = normalize_points(&reduced.rows());
        let values = td.values.clone();
        let var = std_dev(&values).powi(2);
        let dim = points[0].len();
        let mut rng = StdRng::seed_from_u64(eta.seed);
        let eta_m = sample_eta(
            &points,
            &vec![eta.lengthscale; dim],
            eta.variance_ratio * var,
            eta.draws,
            &mut rng,
        )?;
        let eta_m = Arc::new(eta_m);
        let truth = GroundTruth::Target(discobax_greedy(&values, k, &eta_m)?);
        Ok(Problem {
            name: name.to_string(),
            domain: Domain::Finite(FiniteDomain::new(points)?),
            algorithm: BaseAlgorithm::DiscoBax { k, eta: eta_m },
            metric: MetricKind::DiscoRegret,
            truth,
            source: Source::Table(values),
            noise_std: 0.0,
            default_q: 1,
        })
    }

    /// Build a problem from its name and `key=value` parameters.
    ///
    /// | name | parameters |
    /// |---|---|
    /// | `hartmann6` | |
    /// | `ackley` | `dim` (10) |
    /// | `himmelblau` | `grid` (25) |
    /// | `volcano` | `file` (synthetic stand-in when absent), `seed` |
    /// | `rosenbrock` | `k` (4) |
    /// | `discobax` | `file`, `records` (400), `width` (40), `top`, `k` (5), `components` (20), `eta_lengthscale`, `eta_variance`, `eta_draws`, `seed` |
    pub fn from_name(name: &str, params: &BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str| params.get(key).map(String::as_str);
        let num = |key: &str, default: usize| -> Result<usize> {
            get(key).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| BaxError::Config(format!("{name}: {key} must be a non-negative integer, got {v:?}")))
            })
        };
        let real = |key: &str, default: f64| -> Result<f64> {
            get(key).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| BaxError::Config(format!("{name}: {key} must be a number, got {v:?}")))
            })
        };
        let allowed: &[&str] = match name {
            "hartmann6" => &[],
            "ackley" => &["dim"],
            "himmelblau" => &["grid"],
            "volcano" => &["file", "seed"],
            "rosenbrock" => &["k"],
            "discobax" => &[
                "file",
                "records",
                "width",
                "top",
                "k",
                "components",
                "eta_lengthscale",
                "eta_variance",
                "eta_draws",
                "seed",
            ],
            other => return Err(BaxError::Config(format!("unknown problem {other:?}"))),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(BaxError::Config(format!("{name}: unknown parameter {bad:?}")));
        }
        match name {
            "hartmann6" => Ok(Self::hartmann6()),
            "ackley" => Self::ackley(num("dim", 10)?),
            "himmelblau" => Self::himmelblau(num("grid", 25)?),
            "volcano" => {
                let grid = match get("file") {
                    Some(path) => load_grid(path)?,
                    None => synthetic_volcano(num("seed", 0)? as u64),
                };
                Self::level_set_grid("volcano", &grid)
            }
            "rosenbrock" => Self::rosenbrock(num("k", 4)?),
            _ => {
                let seed = num("seed", 0)? as u64;
                let mut td = match get("file") {
                    Some(path) => load_tabular(path)?,
                    None => synthetic_tabular(num("records", 400)?, num("width", 40)?, seed)?,
                };
                if let Some(top) = get("top") {
                    let top: usize = top
                        .parse()
                        .map_err(|_| BaxError::Config(format!("discobax: top must be an integer, got {top:?}")))?;
                    td = td.top_by_value(top);
                }
                let eta = EtaConfig {
                    lengthscale: real("eta_lengthscale", EtaConfig::default().lengthscale)?,
                    variance_ratio: real("eta_variance", EtaConfig::default().variance_ratio)?,
                    draws: num("eta_draws", DEFAULT_ETA_SAMPLES)?,
                    seed,
                };
                Self::discobax(
                    "discobax",
                    &td,
                    num("k", 5)?,
                    num("components", DEFAULT_COMPONENTS)?,
                    &eta,
                )
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn algorithm(&self) -> &BaseAlgorithm {
        &self.algorithm
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Default observation noise standard deviation, in original units.
    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn with_noise_std(mut self, noise_std: f64) -> Result<Self> {
        if !(noise_std >= 0.0) {
            return Err(BaxError::InvalidParameter("noise_std must be non-negative".into()));
        }
        self.noise_std = noise_std;
        Ok(self)
    }

    /// Batch size the problem is usually run with.
    pub fn default_q(&self) -> usize {
        self.default_q
    }

    /// True objective values over a finite domain.
    pub fn true_values(&self) -> Option<&[f64]> {
        match &self.source {
            Source::Table(v) => Some(v),
            Source::Function(_) => None,
        }
    }

    pub fn true_value(&self, p: &DomainPoint) -> Result<f64> {
        match (&self.source, p.index) {
            (Source::Table(v), Some(i)) => v
                .get(i)
                .copied()
                .ok_or_else(|| BaxError::InvalidParameter(format!("index {i} outside the domain"))),
            (Source::Table(_), None) => Err(BaxError::InvalidParameter(
                "finite problems are observed by index".into(),
            )),
            (Source::Function(f), _) => {
                crate::error::check_dim(self.dim(), p.x.len())?;
                Ok(f(&p.x))
            }
        }
    }

    /// A noisy observation at `p`.
    pub fn observe<R: Rng + ?Sized>(&self, p: &DomainPoint, rng: &mut R) -> Result<f64> {
        let y = self.true_value(p)?;
        Ok(if self.noise_std > 0.0 {
            y + self.noise_std * rng.sample::<f64, _>(StandardNormal)
        } else {
            y
        })
    }

    /// The problem's metric for an estimated target set.
    pub fn score(&self, estimate: &TargetSet) -> Result<f64> {
        match (&self.truth, self.metric) {
            (GroundTruth::Target(t), MetricKind::F1) => Ok(f1_score(estimate, t)),
            (GroundTruth::Target(t), MetricKind::Jaccard) => Ok(jaccard_distance(estimate, t)),
            (GroundTruth::Target(t), MetricKind::DiscoRegret) => {
                let BaseAlgorithm::DiscoBax { eta, .. } = &self.algorithm else {
                    return Err(BaxError::InvalidParameter("DiscoBAX regret needs η draws".into()));
                };
                let values = self.true_values().ok_or(BaxError::EmptyInput("true values"))?;
                Ok(discobax_regret(values, eta, t, estimate))
            }
            (GroundTruth::Optimum(f_star), MetricKind::LogRegret) => {
                let TargetSet::Points(ps) = estimate else {
                    return Err(BaxError::InvalidParameter("regret needs a point estimate".into()));
                };
                let x = ps.first().ok_or(BaxError::EmptyInput("estimate"))?;
                let fx = self.true_value(&DomainPoint::free(x.clone()))?;
                Ok(inference_regret_log10(*f_star, fx))
            }
            _ => Err(BaxError::InvalidParameter(
                "metric does not match the ground truth".into(),
            )),
        }
    }

    /// Whether the stored ground truth equals the base algorithm re-run on
    /// the true values (always true for box problems, which store f*).
    pub fn truth_is_consistent(&self) -> Result<bool> {
        match (&self.truth, &self.source) {
            (GroundTruth::Target(t), Source::Table(v)) => Ok(self.algorithm.run_on_values(v)? == *t),
            _ => Ok(true),
        }
    }

    /// η draws used by a DiscoBAX problem.
    pub fn eta(&self) -> Option<&DMatrix<f64>> {
        match &self.algorithm {
            BaseAlgorithm::DiscoBax { eta, .. } => Some(eta),
            _ => None,
        }
    }
}

/// η prior for DiscoBAX problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaConfig {
    pub lengthscale: f64,
    /// η variance as a multiple of the value variance.
    pub variance_ratio: f64,
    pub draws: usize,
    pub seed: u64,
}

impl Default for EtaConfig {
    fn default() -> Self {
        EtaConfig {
            lengthscale: 1.0,
            variance_ratio: 0.25,
            draws: DEFAULT_ETA_SAMPLES,
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_grid_layout() {
        let g = make_rosenbrock_grid();
        assert_eq!(g.len(), 1000);
        assert!(g.points().contains(&vec![-2.0, -2.0, -2.0]));
        let spacing = g.points()[1][2] - g.points()[0][2];
        assert!((spacing - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn stored_truths_are_consistent() {
        for p in [
            Problem::himmelblau(25).unwrap(),
            Problem::rosenbrock(4).unwrap(),
            Problem::level_set_grid("volcano", &synthetic_volcano(0)).unwrap(),
        ] {
            assert!(p.truth_is_consistent().unwrap(), "{}", p.name());
        }
    }

    #[test]
    fn level_set_fraction_matches_quantile() {
        let p = Problem::level_set_grid("volcano", &synthetic_volcano(0)).unwrap();
        let n = p.true_values().unwrap().len() as f64;
        let GroundTruth::Target(t) = p.truth() else { panic!() };
        assert!(t.len() as f64 / n <= 1.0 - LEVEL_SET_QUANTILE + 1.0 / n);
    }

    #[test]
    fn himmelblau_grid_is_large_enough() {
        let p = Problem::himmelblau(25).unwrap();
        assert!(p.true_values().unwrap().len() >= 500);
        assert_eq!(p.dim(), 2);
    }

    #[test]
    fn hartmann_regret_at_optimum() {
        let p = Problem::hartmann6();
        let est = TargetSet::Points(vec![functions::HARTMANN6_ARGMIN.to_vec()]);
        assert!(p.score(&est).unwrap() < -4.0);
    }

    #[test]
    fn ackley_optimum_is_cube_center() {
        let p = Problem::ackley(3).unwrap();
        assert!(p.true_value(&DomainPoint::free(vec![0.5; 3])).unwrap().abs() < 1e-12);
    }

    #[test]
    fn unknown_names_and_params_are_rejected() {
        assert!(Problem::from_name("nope", &BTreeMap::new()).is_err());
        let params: BTreeMap<String, String> = [("q".to_string(), "3".to_string())].into();
        assert!(Problem::from_name("himmelblau", &params).is_err());
    }

    #[test]
    fn small_discobax_instance() {
        let params: BTreeMap<String, String> = [
            ("records".to_string(), "60".to_string()),
            ("width".to_string(), "8".to_string()),
            ("components".to_string(), "4".to_string()),
            ("k".to_string(), "3".to_string()),
        ]
        .into();
        let p = Problem::from_name("discobax", &params).unwrap();
        assert_eq!(p.dim(), 4);
        assert!(p.truth_is_consistent().unwrap());
        let GroundTruth::Target(t) = p.truth().clone() else {
            panic!()
        };
        assert_eq!(p.score(&t).unwrap(), 0.0);
    }
}
