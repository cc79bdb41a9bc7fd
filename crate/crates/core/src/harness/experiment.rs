//! The BAX loop over replications, and result files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::acquisition::{
    ei_step, infobax_step, psbax_step, random_step, AcquisitionDecision, InfoBaxConfig, PathSampler,
    BOX_CANDIDATES_PER_DIM,
};
use crate::domain::{DomainPoint, TargetSet};
use crate::error::{BaxError, Result};
use crate::gp::{Dataset, KernelSpec};
use crate::harness::config::{AcquisitionKind, ExperimentConfig};
use crate::problems::Problem;
use crate::surrogate::{ModelConfig, Surrogate};

pub const RESULTS_HEADER: &str = "replication,iteration,metric,value,acq_seconds";
pub const FAILURE_METRIC: &str = "failure";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub replication: usize,
    pub iteration: usize,
    pub metric: String,
    pub value: f64,
    pub acq_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub replication: usize,
    /// 0 for the initial design.
    pub iteration: usize,
    pub point: DomainPoint,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub replication: usize,
    pub records: Vec<MetricRecord>,
    pub observations: Vec<ObservationRecord>,
    pub final_estimate: Option<TargetSet>,
    pub failure: Option<String>,
    /// Acquisition steps whose decision was flagged as a fallback.
    pub fallbacks: usize,
}

impl ReplicationResult {
    /// Metric value after the last completed iteration.
    pub fn final_value(&self) -> Option<f64> {
        self.records
            .iter()
            .rev()
            .find(|r| r.metric != FAILURE_METRIC)
            .map(|r| r.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub config: ExperimentConfig,
    pub replications: Vec<ReplicationResult>,
}

impl ResultsTable {
    pub fn records(&self) -> impl Iterator<Item = &MetricRecord> {
        self.replications.iter().flat_map(|r| r.records.iter())
    }

    /// Final metric of every replication that completed.
    pub fn final_values(&self) -> Vec<f64> {
        self.replications
            .iter()
            .filter(|r| r.failure.is_none())
            .filter_map(ReplicationResult::final_value)
            .collect()
    }

    pub fn mean_final(&self) -> f64 {
        let v = self.final_values();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Mean acquisition wall-clock per iteration across all replications.
    pub fn mean_acq_seconds(&self) -> f64 {
        let t: Vec<f64> = self
            .records()
            .filter(|r| r.iteration > 0 && r.metric != FAILURE_METRIC)
            .map(|r| r.acq_seconds)
            .collect();
        if t.is_empty() {
            0.0
        } else {
            t.iter().sum::<f64>() / t.len() as f64
        }
    }

    pub fn results_csv(&self) -> String {
        let mut s = String::from(RESULTS_HEADER);
        s.push('\n');
        for r in self.records() {
            let _ = writeln!(
                s,
                "{},{},{},{:?},{:?}",
                r.replication, r.iteration, r.metric, r.value, r.acq_seconds
            );
        }
        s
    }

    fn estimates_csv(&self) -> String {
        let mut s = String::from("replication,member,index,x\n");
        for rep in &self.replications {
            let Some(est) = &rep.final_estimate else { continue };
            match est {
                TargetSet::Indices(ix) => {
                    for (m, i) in ix.iter().enumerate() {
                        let _ = writeln!(s, "{},{m},{i},", rep.replication);
                    }
                }
                TargetSet::Points(ps) => {
                    for (m, p) in ps.iter().enumerate() {
                        let _ = writeln!(s, "{},{m},,{}", rep.replication, join_point(p));
                    }
                }
            }
        }
        s
    }

    fn observations_csv(&self) -> String {
        let mut s = String::from("replication,iteration,index,x,y\n");
        for rep in &self.replications {
            for o in &rep.observations {
                let idx = o.point.index.map(|i| i.to_string()).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{idx},{},{:?}",
                    o.replication,
                    o.iteration,
                    join_point(&o.point.x),
                    o.y
                );
            }
        }
        s
    }

    /// Write `results.csv`, `config.txt`, `estimates.csv` and
    /// `observations.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("results.csv"), self.results_csv())?;
        fs::write(dir.join("config.txt"), self.config.to_text())?;
        fs::write(dir.join("estimates.csv"), self.estimates_csv())?;
        fs::write(dir.join("observations.csv"), self.observations_csv())?;
        Ok(())
    }
}

fn join_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Design = 0,
    Noise = 1,
    Acquisition = 2,
    Estimate = 3,
    Fit = 4,
}

/// Independent generator for one (seed, replication, purpose) triple. The
/// design, noise, estimate and fit streams do not depend on the method, so
/// runs that share a seed are paired.
fn stream_rng(seed: u64, replication: usize, stream: Stream) -> StdRng {
    let key = splitmix64(seed) ^ splitmix64((replication as u64) << 8 | stream as u64);
    StdRng::seed_from_u64(splitmix64(key))
}

/// Number of worker threads: `BAX_THREADS` when set, else all cores.
pub fn thread_count() -> usize {
    std::env::var("BAX_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Run all replications (in parallel, up to [`thread_count`] at a time) and
/// return their rows ordered by replication.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    run_experiment_on(&problem, cfg)
}

/// Like [`run_experiment`] but with a prepared problem.
pub fn run_experiment_on(problem: &Problem, cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| BaxError::Config(format!("thread pool: {e}")))?;
    let replications = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| run_replication(problem, cfg, r))
            .collect::<Vec<_>>()
    });
    Ok(ResultsTable {
        config: cfg.clone(),
        replications,
    })
}

/// Size of the uniform initial design.
pub fn initial_design_size(dim: usize) -> usize {
    2 * (dim + 1)
}

/// The initial design of one replication; it depends only on the seed, the
/// replication and the problem.
pub fn initial_design(problem: &Problem, seed: u64, replication: usize) -> Vec<DomainPoint> {
    let mut rng = stream_rng(seed, replication, Stream::Design);
    problem
        .domain()
        .sample_uniform(initial_design_size(problem.dim()), &mut rng)
}

/// The estimate `O_A(μ_n)`: the base algorithm applied to the posterior mean
/// in original units.
pub fn estimate(problem: &Problem, model: &Surrogate, rng: &mut StdRng) -> Result<TargetSet> {
    problem.algorithm().run(&model.mean_view(), problem.domain(), rng)
}

fn acquire(
    problem: &Problem,
    model: &Surrogate,
    cfg: &ExperimentConfig,
    rng: &mut StdRng,
) -> Result<AcquisitionDecision> {
    let sampler = PathSampler::new(cfg.features)?;
    match cfg.acquisition {
        AcquisitionKind::PsBax => psbax_step(model, problem.domain(), &sampler, problem.algorithm(), cfg.q, rng),
        AcquisitionKind::InfoBax => {
            let icfg = InfoBaxConfig {
                samples: cfg.samples,
                ..InfoBaxConfig::default()
            };
            infobax_step(
                model,
                problem.domain(),
                &sampler,
                problem.algorithm(),
                &icfg,
                cfg.q,
                rng,
            )
        }
        AcquisitionKind::Ei => ei_step(model, problem.domain(), cfg.q, BOX_CANDIDATES_PER_DIM, rng),
        AcquisitionKind::Random => random_step(problem.domain(), cfg.q, rng),
    }
}

/// One replication. A numerical failure ends the replication with a
/// `failure` row instead of an error.
pub fn run_replication(problem: &Problem, cfg: &ExperimentConfig, replication: usize) -> ReplicationResult {
    let mut out = ReplicationResult {
        replication,
        records: Vec::new(),
        observations: Vec::new(),
        final_estimate: None,
        failure: None,
        fallbacks: 0,
    };
    let mut iteration = 0;
    if let Err(e) = replication_loop(problem, cfg, replication, &mut out, &mut iteration) {
        out.records.push(MetricRecord {
            replication,
            iteration,
            metric: FAILURE_METRIC.to_string(),
            value: f64::NAN,
            acq_seconds: 0.0,
        });
        out.failure = Some(e.to_string());
    }
    out
}

fn replication_loop(
    problem: &Problem,
    cfg: &ExperimentConfig,
    replication: usize,
    out: &mut ReplicationResult,
    iteration: &mut usize,
) -> Result<()> {
    let mut noise_rng = stream_rng(cfg.seed, replication, Stream::Noise);
    let mut acq_rng = stream_rng(cfg.seed, replication, Stream::Acquisition);
    let mut est_rng = stream_rng(cfg.seed, replication, Stream::Estimate);
    let mut fit_rng = stream_rng(cfg.seed, replication, Stream::Fit);
    let model_cfg = ModelConfig::default();
    let metric = problem.metric().name();

    let mut data = Dataset::empty(problem.dim());
    for p in initial_design(problem, cfg.seed, replication) {
        let y = problem.observe(&p, &mut noise_rng)?;
        data.push(p.x.clone(), y)?;
        out.observations.push(ObservationRecord {
            replication,
            iteration: 0,
            point: p,
            y,
        });
    }
    let (mut model, _) = Surrogate::fit(&data, &model_cfg, None, &mut fit_rng)?;
    let mut warm: KernelSpec = model.kernel().clone();
    let est = estimate(problem, &model, &mut est_rng)?;
    out.records.push(MetricRecord {
        replication,
        iteration: 0,
        metric: metric.to_string(),
        value: problem.score(&est)?,
        acq_seconds: 0.0,
    });
    out.final_estimate = Some(est);

    for n in 1..=cfg.iterations {
        *iteration = n;
        let start = Instant::now();
        let decision = acquire(problem, &model, cfg, &mut acq_rng)?;
        let acq_seconds = start.elapsed().as_secs_f64();
        if decision.fallback {
            out.fallbacks += 1;
        }
        for p in decision.chosen {
            let y = problem.observe(&p, &mut noise_rng)?;
            data.push(p.x.clone(), y)?;
            out.observations.push(ObservationRecord {
                replication,
                iteration: n,
                point: p,
                y,
            });
        }
        model = Surrogate::fit(&data, &model_cfg, Some(&warm), &mut fit_rng)?.0;
        warm = model.kernel().clone();
        let est = estimate(problem, &model, &mut est_rng)?;
        out.records.push(MetricRecord {
            replication,
            iteration: n,
            metric: metric.to_string(),
            value: problem.score(&est)?,
            acq_seconds,
        });
        out.final_estimate = Some(est);
    }
    Ok(())
}
