//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::acquisition::DEFAULT_EIG_SAMPLES;
use crate::error::{BaxError, Result};
use crate::paths::DEFAULT_FEATURES;
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AcquisitionKind {
    PsBax,
    InfoBax,
    Ei,
    Random,
}

impl AcquisitionKind {
    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::PsBax => "psbax",
            AcquisitionKind::InfoBax => "infobax",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Random => "random",
        }
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = BaxError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psbax" | "ps-bax" => Ok(AcquisitionKind::PsBax),
            "infobax" | "info-bax" => Ok(AcquisitionKind::InfoBax),
            "ei" => Ok(AcquisitionKind::Ei),
            "random" => Ok(AcquisitionKind::Random),
            other => Err(BaxError::Config(format!("unknown acquisition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub problem_params: BTreeMap<String, String>,
    pub acquisition: AcquisitionKind,
    pub q: usize,
    /// Posterior samples per INFO-BAX step.
    pub samples: usize,
    /// Random Fourier features per sample path.
    pub features: usize,
    pub iterations: usize,
    pub replications: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Observation noise standard deviation; the problem default when unset.
    pub noise_std: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(problem: &str, acquisition: AcquisitionKind) -> Self {
        ExperimentConfig {
            problem: problem.to_string(),
            problem_params: BTreeMap::new(),
            acquisition,
            q: 1,
            samples: DEFAULT_EIG_SAMPLES,
            features: DEFAULT_FEATURES,
            iterations: 50,
            replications: 10,
            seed: 0,
            output: None,
            noise_std: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(BaxError::Config("q must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(BaxError::Config("replications must be at least 1".into()));
        }
        if self.features == 0 {
            return Err(BaxError::Config("D must be at least 1".into()));
        }
        if self.acquisition == AcquisitionKind::InfoBax && self.samples == 0 {
            return Err(BaxError::Config("L must be at least 1 for infobax".into()));
        }
        if let Some(s) = self.noise_std {
            if !(s >= 0.0) {
                return Err(BaxError::Config("noise_std must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let p = Problem::from_name(&self.problem, &self.problem_params)?;
        match self.noise_std {
            Some(s) => p.with_noise_std(s),
            None => Ok(p),
        }
    }

    /// Problem name with its parameters, as written in the `problem` key.
    pub fn problem_label(&self) -> String {
        let mut s = self.problem.clone();
        for (k, v) in &self.problem_params {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::new("", AcquisitionKind::PsBax);
        let mut seen_problem = false;
        let mut seen_acq = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BaxError::Parse {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| BaxError::Parse {
                line: line_no,
                message: format!("{key}: {what}, got {value:?}"),
            };
            match key {
                "problem" => {
                    let mut parts = value.split_whitespace();
                    cfg.problem = parts.next().ok_or_else(|| bad("missing problem name"))?.to_string();
                    cfg.problem_params.clear();
                    for p in parts {
                        let (k, v) = p
                            .split_once('=')
                            .ok_or_else(|| bad("problem parameters are name=value"))?;
                        cfg.problem_params.insert(k.to_string(), v.to_string());
                    }
                    seen_problem = true;
                }
                "acquisition" => {
                    cfg.acquisition = value
                        .parse()
                        .map_err(|_| bad("expected psbax, infobax, ei or random"))?;
                    seen_acq = true;
                }
                "q" => cfg.q = value.parse().map_err(|_| bad("expected an integer"))?,
                "L" => cfg.samples = value.parse().map_err(|_| bad("expected an integer"))?,
                "D" => cfg.features = value.parse().map_err(|_| bad("expected an integer"))?,
                "iterations" => cfg.iterations = value.parse().map_err(|_| bad("expected an integer"))?,
                "replications" => cfg.replications = value.parse().map_err(|_| bad("expected an integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("expected an integer"))?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                "noise_std" => cfg.noise_std = Some(value.parse().map_err(|_| bad("expected a number"))?),
                other => {
                    return Err(BaxError::Parse {
                        line: line_no,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        if !seen_problem {
            return Err(BaxError::Config("missing key: problem".into()));
        }
        if !seen_acq {
            return Err(BaxError::Config("missing key: acquisition".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The config in the file format accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "problem = {}\nacquisition = {}\nq = {}\nL = {}\nD = {}\niterations = {}\nreplications = {}\nseed = {}\n",
            self.problem_label(),
            self.acquisition,
            self.q,
            self.samples,
            self.features,
            self.iterations,
            self.replications,
            self.seed
        );
        if let Some(o) = &self.output {
            s.push_str(&format!("output = {}\n", o.display()));
        }
        if let Some(n) = self.noise_std {
            s.push_str(&format!("noise_std = {n:?}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# demo\nproblem = rosenbrock k=4\nacquisition = psbax\nq = 2\nL = 5\nD = 100\n\
                    iterations = 3\nreplications = 2\nseed = 7\noutput = out/run  # trailing\nnoise_std = 0.01\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.problem, "rosenbrock");
        assert_eq!(cfg.problem_params["k"], "4");
        assert_eq!(cfg.q, 2);
        assert_eq!(cfg.samples, 5);
        assert_eq!(cfg.noise_std, Some(0.01));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match ExperimentConfig::parse("problem = himmelblau\nacquisition = psbax\nq = two\n") {
            Err(BaxError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match ExperimentConfig::parse("problem = himmelblau\nbogus = 1\n") {
            Err(BaxError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = "problem = himmelblau\nacquisition = infobax\n";
        assert!(ExperimentConfig::parse(&format!("{base}q = 0\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{base}L = 0\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{base}replications = 0\n")).is_err());
        assert!(ExperimentConfig::parse("acquisition = psbax\n").is_err());
    }
}
