//! Per-iteration acquisition cost of PS-BAX against INFO-BAX.

use crate::error::Result;
use crate::harness::config::{AcquisitionKind, ExperimentConfig};
use crate::harness::experiment::{run_replication, ReplicationResult};
use crate::problems::Problem;

pub const L_GRID: [usize; 3] = [5, 15, 30];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub problem: String,
    pub iterations: usize,
    pub samples: usize,
    pub psbax_seconds: f64,
    pub infobax_seconds: f64,
    /// INFO-BAX mean seconds per iteration for each L in [`L_GRID`].
    pub infobax_by_samples: Vec<(usize, f64)>,
}

impl BenchReport {
    pub fn ratio(&self) -> f64 {
        self.infobax_seconds / self.psbax_seconds
    }

    /// `time(L = b) / time(L = a)` from the L sweep.
    pub fn l_scaling(&self, a: usize, b: usize) -> Option<f64> {
        let t = |l| self.infobax_by_samples.iter().find(|(s, _)| *s == l).map(|(_, t)| *t);
        Some(t(b)? / t(a)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "problem = {}\niterations = {}\npsbax_seconds = {:.6}\ninfobax_seconds (L={}) = {:.6}\nratio = {:.2}\n",
            self.problem,
            self.iterations,
            self.psbax_seconds,
            self.samples,
            self.infobax_seconds,
            self.ratio()
        );
        for (l, t) in &self.infobax_by_samples {
            s.push_str(&format!("infobax_seconds (L={l}) = {t:.6}\n"));
        }
        if let Some(r) = self.l_scaling(15, 30) {
            s.push_str(&format!("time(L=30) / time(L=15) = {r:.3}\n"));
        }
        s
    }
}

fn mean_seconds(rep: &ReplicationResult) -> f64 {
    let t: Vec<f64> = rep
        .records
        .iter()
        .filter(|r| r.iteration > 0)
        .map(|r| r.acq_seconds)
        .collect();
    t.iter().sum::<f64>() / t.len().max(1) as f64
}

/// Time one replication of each method on the same seed (single-threaded,
/// sequentially), then sweep INFO-BAX over [`L_GRID`].
pub fn benchmark_runtime(
    problem: &Problem,
    samples: usize,
    iterations: usize,
    features: usize,
    seed: u64,
) -> Result<BenchReport> {
    let run = |acq: AcquisitionKind, l: usize| -> Result<f64> {
        let mut cfg = ExperimentConfig::new(problem.name(), acq);
        cfg.samples = l;
        cfg.iterations = iterations;
        cfg.replications = 1;
        cfg.features = features;
        cfg.seed = seed;
        cfg.validate()?;
        let rep = run_replication(problem, &cfg, 0);
        if let Some(msg) = &rep.failure {
            return Err(crate::error::BaxError::Config(format!("{acq} benchmark failed: {msg}")));
        }
        Ok(mean_seconds(&rep))
    };
    let psbax_seconds = run(AcquisitionKind::PsBax, samples)?;
    let infobax_seconds = run(AcquisitionKind::InfoBax, samples)?;
    let infobax_by_samples = L_GRID
        .iter()
        .map(|&l| {
            Ok((
                l,
                if l == samples {
                    infobax_seconds
                } else {
                    run(AcquisitionKind::InfoBax, l)?
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        problem: problem.name().to_string(),
        iterations,
        samples,
        psbax_seconds,
        infobax_seconds,
        infobax_by_samples,
    })
}
