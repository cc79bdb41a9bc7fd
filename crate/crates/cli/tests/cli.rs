use std::process::{Command, Output};

fn bax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bax"))
        .args(args)
        .env("BAX_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.txt");
    std::fs::write(
        &cfg,
        "problem = himmelblau grid=8\nacquisition = psbax\niterations = 2\nreplications = 2\nD = 100\n",
    )
    .unwrap();
    let out = dir.path().join("res");
    let o = bax(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mean final metric"));
    for f in ["results.csv", "config.txt", "estimates.csv", "observations.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let o = bax(&["report", out.join("results.csv").to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("problem,method,iteration,mean,stderr"));
    assert_eq!(lines.count(), 3);
    assert!(text.contains("himmelblau grid=8,psbax,2,"));
}

#[test]
fn counterexample_prints_a_curve() {
    let o = bax(&["theory-check", "counterexample", "--n", "4", "--mc", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("iteration,probability,chosen\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn bad_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "problem = nowhere\nacquisition = psbax\n").unwrap();
    let o = bax(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
}
