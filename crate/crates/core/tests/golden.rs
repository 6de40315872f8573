//! Golden files for a short, fully deterministic run. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test -p budgeted-bandit --test golden` after an
//! intentional behaviour change.

use std::path::PathBuf;

use budgeted_bandit::experiment::{run_single, SeedContext};
use budgeted_bandit::output::trace_csv;
use budgeted_bandit::{BudgetedUcb, ExperimentConfig, ScheduleKind};

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{} is stale", path.display());
}

fn short_run(schedule: ScheduleKind) -> (String, String) {
    let cfg = ExperimentConfig {
        horizon: 40,
        budget_horizon: Some(20),
        schedule,
        ..Default::default()
    };
    let env = cfg.environment().unwrap();
    let ctx = SeedContext::new(&env, 1).unwrap();
    let mut policy = BudgetedUcb::new(cfg.num_arms, cfg.budget_schedule().unwrap()).unwrap();
    let trace = run_single(&cfg, &env, &ctx, &mut policy).unwrap();
    (trace_csv(&trace), policy.snapshot())
}

#[test]
fn budgeted_ucb_random_schedule() {
    let (trace, snapshot) = short_run(ScheduleKind::UniformRandom);
    golden("budgeted_ucb_random_trace.csv", &trace);
    golden("budgeted_ucb_random_state.txt", &snapshot);
}

#[test]
fn budgeted_ucb_linear_schedule() {
    let (trace, snapshot) = short_run(ScheduleKind::LinearVShape);
    golden("budgeted_ucb_linear_trace.csv", &trace);
    golden("budgeted_ucb_linear_state.txt", &snapshot);
}
