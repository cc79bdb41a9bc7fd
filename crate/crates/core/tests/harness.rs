use std::collections::BTreeMap;

use bax_core::harness::experiment::{MetricRecord, ResultsTable};
use bax_core::harness::report::{read_results, LabelledResults};
use bax_core::harness::{run_experiment, summarize, AcquisitionKind, ExperimentConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::statistics::Statistics;

fn small(acq: AcquisitionKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("himmelblau", acq);
    cfg.problem_params = BTreeMap::from([("grid".to_string(), "10".to_string())]);
    cfg.iterations = 3;
    cfg.replications = 2;
    cfg.samples = 4;
    cfg.features = 200;
    cfg.seed = 5;
    cfg
}

fn without_timing(t: &ResultsTable) -> Vec<(usize, usize, String, f64)> {
    t.records()
        .map(|r| (r.replication, r.iteration, r.metric.clone(), r.value))
        .collect()
}

#[test]
fn report_stderr_is_sample_sd_over_root_n() {
    let mut rng = StdRng::seed_from_u64(1);
    let values: Vec<f64> = (0..10).map(|_| rng.random::<f64>() * 3.0).collect();
    let records = values
        .iter()
        .enumerate()
        .map(|(rep, v)| MetricRecord {
            replication: rep,
            iteration: 4,
            metric: "f1".into(),
            value: *v,
            acq_seconds: 0.0,
        })
        .collect();
    let run = LabelledResults {
        problem: "p".into(),
        method: "m".into(),
        records,
    };
    let rows = summarize(&[run]);
    assert_eq!(rows.len(), 1);
    let sd = values.iter().std_dev();
    assert!((rows[0].stderr - sd / 10f64.sqrt()).abs() < 1e-12);
    assert!((rows[0].mean - values.iter().mean()).abs() < 1e-12);
    assert_eq!(rows[0].count, 10);
}

#[test]
fn experiments_are_deterministic_apart_from_timing() {
    for acq in [
        AcquisitionKind::PsBax,
        AcquisitionKind::InfoBax,
        AcquisitionKind::Random,
    ] {
        let cfg = small(acq);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(without_timing(&a), without_timing(&b), "{acq}");
        let obs = |t: &ResultsTable| {
            t.replications
                .iter()
                .map(|r| r.observations.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(obs(&a), obs(&b));
        assert!(a.replications.iter().all(|r| r.failure.is_none()));
        assert_eq!(a.final_values().len(), 2);
    }
}

#[test]
fn config_text_round_trip() {
    let mut cfg = small(AcquisitionKind::InfoBax);
    cfg.q = 3;
    cfg.noise_std = Some(0.25);
    cfg.output = Some("out/dir".into());
    assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
}

#[test]
fn config_rejects_bad_input() {
    assert!(ExperimentConfig::parse("acquisition = psbax\n").is_err());
    assert!(ExperimentConfig::parse("problem = himmelblau\nacquisition = nope\n").is_err());
    assert!(ExperimentConfig::parse("problem = himmelblau\nacquisition = psbax\nq = 0\n").is_err());
    assert!(ExperimentConfig::parse("problem = himmelblau\nacquisition = psbax\nbogus = 1\n").is_err());
}

#[test]
fn written_results_read_back_with_labels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(AcquisitionKind::Random);
    let table = run_experiment(&cfg).unwrap();
    table.write(dir.path()).unwrap();
    let back = read_results(dir.path().join("results.csv")).unwrap();
    assert_eq!(back.method, "random");
    assert_eq!(back.problem, "himmelblau grid=10");
    assert_eq!(back.records, table.records().cloned().collect::<Vec<_>>());
}
