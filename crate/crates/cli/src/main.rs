use std::path::PathBuf;
use std::process::ExitCode;

use bax_core::harness::{
    benchmark_runtime, report, run_experiment, theory_check_consistency, theory_check_counterexample,
    ConsistencyConfig, ExperimentConfig,
};
use bax_core::problems::Problem;
use bax_core::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bax", version, about = "Bayesian algorithm execution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the `output` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical checks of the concentration results.
    TheoryCheck {
        #[command(subcommand)]
        check: TheoryCheck,
    },
    /// Per-iteration acquisition time of PS-BAX against INFO-BAX.
    Bench {
        #[arg(long, default_value = "himmelblau")]
        problem: String,
        /// INFO-BAX posterior samples.
        #[arg(long = "L", default_value_t = 30)]
        samples: usize,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long = "D", default_value_t = 1000)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Mean and standard error curves from `results.csv` files.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TheoryCheck {
    /// PS-BAX on a small level-set problem drawn from the prior.
    Consistency {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        replications: usize,
        #[arg(long, default_value_t = 40)]
        domain_size: usize,
        #[arg(long, default_value_t = 1e-4)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The three-point instance where PS-BAX never learns the target.
    Counterexample {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let table = run_experiment(&cfg)?;
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            table.write(&dir)?;
            let failures = table.replications.iter().filter(|r| r.failure.is_some()).count();
            println!("problem = {}", cfg.problem_label());
            println!("acquisition = {} (q = {})", cfg.acquisition, cfg.q);
            println!("mean final metric = {:.6}", table.mean_final());
            println!("mean acquisition seconds = {:.6}", table.mean_acq_seconds());
            if failures > 0 {
                println!("failed replications = {failures}");
            }
            println!("wrote {}", dir.display());
        }
        Command::TheoryCheck { check } => match check {
            TheoryCheck::Consistency {
                n,
                replications,
                domain_size,
                noise,
                seed,
            } => {
                let cfg = ConsistencyConfig {
                    iterations: n,
                    replications,
                    domain_size,
                    noise_variance: noise,
                    seed,
                    ..ConsistencyConfig::default()
                };
                let rep = theory_check_consistency(&cfg)?;
                println!("recovery fraction = {:.3}", rep.recovery_fraction());
                println!("mode recovery fraction = {:.3}", rep.mode_recovery_fraction());
                println!("mean/mode agreement = {:.3}", rep.agreement_fraction());
                println!("iteration,recovery");
                for (i, r) in rep.recovery_curve().iter().enumerate() {
                    println!("{i},{r:.3}");
                }
            }
            TheoryCheck::Counterexample { n, mc, seed } => {
                let rep = theory_check_counterexample(n, mc, seed);
                println!("iteration,probability,chosen");
                for (i, p) in rep.probabilities.iter().enumerate() {
                    let chosen = if i == 0 {
                        String::new()
                    } else {
                        format!("{}", rep.chosen[i - 1])
                    };
                    println!("{i},{p:.4},{chosen}");
                }
            }
        },
        Command::Bench {
            problem,
            samples,
            iterations,
            features,
            seed,
        } => {
            let p = Problem::from_name(&problem, &Default::default())?;
            let rep = benchmark_runtime(&p, samples, iterations, features, seed)?;
            print!("{}", rep.to_text());
        }
        Command::Report { results, out } => {
            let summary = report(&results)?;
            match out {
                Some(path) => std::fs::write(path, summary)?,
                None => print!("{summary}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
