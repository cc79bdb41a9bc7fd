//! Aggregate result tables into mean ± standard-error curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use crate::error::{BaxError, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::{MetricRecord, FAILURE_METRIC, RESULTS_HEADER};

pub const SUMMARY_HEADER: &str = "problem,method,iteration,mean,stderr";

/// Metric rows of one run, labelled with its problem and method.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledResults {
    pub problem: String,
    pub method: String,
    pub records: Vec<MetricRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub method: String,
    pub iteration: usize,
    pub mean: f64,
    /// Sample standard deviation over √n; 0 for a single value.
    pub stderr: f64,
    pub count: usize,
}

/// Method label: the acquisition name, with the batch size when it is not 1.
pub fn method_label(cfg: &ExperimentConfig) -> String {
    if cfg.q == 1 {
        cfg.acquisition.name().to_string()
    } else {
        format!("{}_q{}", cfg.acquisition, cfg.q)
    }
}

pub fn parse_results<R: std::io::Read>(reader: R) -> Result<Vec<MetricRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| BaxError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != RESULTS_HEADER {
        return Err(BaxError::Parse {
            line: 1,
            message: format!("expected header {RESULTS_HEADER}"),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| BaxError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| {
            rec.get(i).ok_or(BaxError::Parse {
                line,
                message: "missing field".into(),
            })
        };
        let bad = |what: &str| BaxError::Parse {
            line,
            message: format!("bad {what}"),
        };
        out.push(MetricRecord {
            replication: field(0)?.parse().map_err(|_| bad("replication"))?,
            iteration: field(1)?.parse().map_err(|_| bad("iteration"))?,
            metric: field(2)?.to_string(),
            value: field(3)?.parse().map_err(|_| bad("value"))?,
            acq_seconds: field(4)?.parse().map_err(|_| bad("acq_seconds"))?,
        });
    }
    Ok(out)
}

/// Read a `results.csv`, labelling it from the `config.txt` next to it (or
/// the parent directory name when there is none).
pub fn read_results(path: impl AsRef<Path>) -> Result<LabelledResults> {
    let path = path.as_ref();
    let records = parse_results(File::open(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let cfg_path = dir.join("config.txt");
    let (problem, method) = if cfg_path.exists() {
        let cfg = ExperimentConfig::load(&cfg_path)?;
        (cfg.problem_label(), method_label(&cfg))
    } else {
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".into());
        (name, "unknown".into())
    };
    Ok(LabelledResults {
        problem,
        method,
        records,
    })
}

/// Mean and standard error per (problem, method, iteration). Failure rows
/// and non-finite values are skipped.
pub fn summarize(runs: &[LabelledResults]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for run in runs {
        for r in &run.records {
            if r.metric == FAILURE_METRIC || !r.value.is_finite() {
                continue;
            }
            groups
                .entry((run.problem.clone(), run.method.clone(), r.iteration))
                .or_default()
                .push(r.value);
        }
    }
    groups
        .into_iter()
        .map(|((problem, method, iteration), v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let stderr = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            };
            SummaryRow {
                problem,
                method,
                iteration,
                mean,
                stderr,
                count: v.len(),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:?},{:?}",
            r.problem, r.method, r.iteration, r.mean, r.stderr
        );
    }
    s
}

/// Summary CSV for a list of `results.csv` files.
pub fn report<P: AsRef<Path>>(paths: &[P]) -> Result<String> {
    let runs = paths.iter().map(read_results).collect::<Result<Vec<_>>>()?;
    Ok(summary_csv(&summarize(&runs)))
}
