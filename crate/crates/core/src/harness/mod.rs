//! Experiment orchestration: the BAX loop, theory checks, runtime
//! benchmarks, and result aggregation.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod report;
pub mod theory;

pub use bench::{benchmark_runtime, BenchReport};
pub use config::{AcquisitionKind, ExperimentConfig};
pub use experiment::{run_experiment, run_experiment_on, run_replication, MetricRecord, ResultsTable};
pub use report::{report, summarize, SummaryRow};
pub use theory::{
    theory_check_consistency, theory_check_counterexample, ConsistencyConfig, ConsistencyReport, CounterexampleReport,
};
