//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use spinfield_harness::convergence::run_convergence;
use spinfield_harness::crosscheck::run_crosscheck;
use spinfield_harness::photon::run_photon_rate;
use spinfield_harness::plan::ExperimentPlan;
use spinfield_harness::pool::WORKERS_ENV;
use spinfield_harness::report::{csv_string, Check, CheckList};
use spinfield_harness::selftest::run_calculus_selftest;
use std::process::ExitCode;
use std::time::{Duration, Instant};

fn plan() -> ExperimentPlan {
    ExperimentPlan::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/plans/standard.toml")).expect("standard plan")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn runtime_check(name: &str, criterion: u8, took: Duration, limit_s: f64) -> Check {
    Check::at_most(format!("{name} runtime (s)"), Some(criterion), took.as_secs_f64(), limit_s)
}

/// Serialized outputs of the plan-driven runs, for the determinism comparison.
fn outputs(plan: &ExperimentPlan) -> Vec<String> {
    let conv = run_convergence(plan).expect("convergence");
    let ph = run_photon_rate(plan).expect("photon");
    let cross = run_crosscheck(plan).expect("crosscheck");
    vec![
        serde_json::to_string(&conv).unwrap(),
        csv_string(&conv.rows()).unwrap(),
        serde_json::to_string(&ph).unwrap(),
        csv_string(&ph.rows()).unwrap(),
        serde_json::to_string(&cross).unwrap(),
    ]
}

fn main() -> ExitCode {
    let plan = plan();
    let mut all = CheckList::default();

    let (self_rep, took) = timed(|| run_calculus_selftest().expect("self-test"));
    all.extend(self_rep.checks.clone());
    all.push(runtime_check("calculus self-test", 1, took, 120.0));

    let (cross, took) = timed(|| run_crosscheck(&plan).expect("crosscheck"));
    all.extend(cross.checks.clone());
    all.push(runtime_check("dual-path crosscheck", 4, took, 180.0));

    let (conv, took) = timed(|| run_convergence(&plan).expect("convergence"));
    all.extend(conv.checks.clone());
    all.push(runtime_check("convergence sweep", 5, took, 600.0));

    let (photon, _) = timed(|| run_photon_rate(&plan).expect("photon rate"));
    all.extend(photon.checks.clone());

    // same plan and seed, different worker count: identical bytes
    let first = vec![
        serde_json::to_string(&conv).unwrap(),
        csv_string(&conv.rows()).unwrap(),
        serde_json::to_string(&photon).unwrap(),
        csv_string(&photon.rows()).unwrap(),
        serde_json::to_string(&cross).unwrap(),
    ];
    std::env::set_var(WORKERS_ENV, "1");
    let second = outputs(&plan);
    std::env::remove_var(WORKERS_ENV);
    let differing = first.iter().zip(&second).filter(|(a, b)| a != b).count();
    all.push(Check::at_most("outputs identical across reruns and worker counts (differing files)", Some(7), differing as f64, 0.0));
    let self_again = run_calculus_selftest().expect("self-test");
    let same_self = serde_json::to_string(&self_again).unwrap() == serde_json::to_string(&self_rep).unwrap();
    all.push(Check::at_least("self-test deterministic", Some(7), same_self as u8 as f64, 1.0));
    all.sort();

    for c in all.iter() {
        println!("  {}", c.line());
    }
    let names = [
        "calculus identities",
        "coherent-state overlap and displacement",
        "structural identities of the discrete model",
        "dual-path equivalence",
        "convergence rates of the expansion",
        "photon-rate law",
        "numerical hygiene and determinism",
    ];
    let mut ok = true;
    for (k, name) in (1u8..=7).zip(names) {
        let pass = all.criterion_pass(k).unwrap_or(false);
        ok &= pass;
        println!("criterion {k} ({name}): {}", if pass { "PASS" } else { "FAIL" });
    }
    if let Some(s) = photon.sign {
        println!("recorded photon-rate sign: {s:+}");
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
