use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_budgeted-bandit"))
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn default_run_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin().args(["run", "--out"]).arg(dir.path()).status().unwrap();
    assert!(status.success());
    let names = files_in(dir.path());
    assert_eq!(names.iter().filter(|n| n.starts_with("trace_")).count(), 25);
    for f in ["violations.csv", "objective.csv", "regret.csv", "manifest.txt"] {
        assert!(names.contains(&f.to_string()), "{f} missing");
    }
    assert_eq!(names.len(), 29);

    let trace = fs::read_to_string(dir.path().join("trace_budgeted_ucb_seed1.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,threshold,arm,reward,cost,violated,mode,budget,empirical_rate"
    );
    assert_eq!(trace.lines().count(), 2001);
    assert!(trace.ends_with('\n'));

    let header = fs::read_to_string(dir.path().join("objective.csv")).unwrap();
    assert!(header.starts_with(
        "t,budgeted_ucb_mean,budgeted_ucb_std,ucb1_mean,ucb1_std,thompson_mean,thompson_std,\
         epsilon_greedy_mean,epsilon_greedy_std,virtual_queue_mean,virtual_queue_std\n"
    ));
}

#[test]
fn trace_rows_respect_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--seeds", "1", "--horizon", "400", "--schedule", "linear", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for name in files_in(dir.path()).iter().filter(|n| n.starts_with("trace_")) {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let mut past_violations = 0u64;
        for (i, line) in text.lines().skip(1).enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let t: u64 = f[0].parse().unwrap();
            assert_eq!(t, i as u64 + 1);
            let threshold: f64 = f[1].parse().unwrap();
            let cost: f64 = f[4].parse().unwrap();
            let violated = f[5] == "1";
            assert_eq!(violated, cost > threshold, "{name} row {t}");
            let rate: f64 = f[8].parse().unwrap();
            let expected = if t == 1 { 0.0 } else { past_violations as f64 / (t - 1) as f64 };
            assert_eq!(rate, expected, "{name} row {t}");
            past_violations += u64::from(violated);
        }
    }
}

#[test]
fn manifest_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let ok = bin()
        .args(["run", "--seeds", "2", "--horizon", "200", "--policies", "budgeted_ucb,thompson", "--out"])
        .arg(first.path())
        .status()
        .unwrap();
    assert!(ok.success());
    let ok = bin()
        .args(["run", "--config"])
        .arg(first.path().join("manifest.txt"))
        .arg("--out")
        .arg(second.path())
        .status()
        .unwrap();
    assert!(ok.success());
    let names = files_in(first.path());
    assert_eq!(names, files_in(second.path()));
    for n in names {
        assert_eq!(
            fs::read(first.path().join(&n)).unwrap(),
            fs::read(second.path().join(&n)).unwrap(),
            "{n} differs"
        );
    }
}

#[test]
fn empty_policy_list_writes_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--policies=", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(files_in(dir.path()), vec!["manifest.txt".to_string()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no policies"));
}

#[test]
fn sweep_writes_scalability_table() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["sweep", "--arms", "2,11", "--seeds", "2", "--horizon", "300", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(dir.path().join("scalability.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "K,budgeted_ucb_mean,ucb1_mean,thompson_mean,epsilon_greedy_mean,virtual_queue_mean"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,") && lines[2].starts_with("11,"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "horizon = 100\nepsilon = 3\n").unwrap();
    let out = bin().args(["validate-config", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));

    let out = bin().args(["run", "--policies", "nope", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let good = dir.path().join("good.cfg");
    fs::write(&good, "# experiment 2\nschedule = linear   # V-ramp\n").unwrap();
    let out = bin().args(["validate-config", "--config"]).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("schedule = linear"));
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = bin()
        .args(["run", "--seeds", "1", "--horizon", "10", "--out"])
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
