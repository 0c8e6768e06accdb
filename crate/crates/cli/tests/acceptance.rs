//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dscfq_cli::config::{default_alpha_grid, default_config, DEFAULT_WINDOWS};
use dscfq_cli::experiments::{
    adaptive_run, adaptive_setup, compare, run_experiment, sweep_alpha, AdaptiveParams,
};
use dscfq_core::analysis::{
    derive_beta, mean_collision_size, optimal_attempt_rate, pairwise_fairness_bound,
    poisson_tv_distance, slot_probabilities, CrpCost, ModelShape, NbarFormula, DEFAULT_G_HI,
};
use dscfq_core::batch::{map_runs, run_many, run_many_seq, run_many_with};
use dscfq_core::engine::{run_simulation, Scenario, MEAN_MESSAGE_BYTES};
use dscfq_core::metrics::{validate_trace, CheckKind, ViolationReport};
use dscfq_core::sched::SchedulerKind;
use sha2::{Digest, Sha256};

const SEEDS: u64 = 20;
const ALPHAS: [f64; 4] = [0.005, 0.01, 0.04, 0.1];
const DEPARTURES: u64 = 20_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn base() -> Scenario {
    default_config().scenario.with_departures(DEPARTURES)
}

fn fixed(alpha: f64, seed: u64) -> Scenario {
    Scenario::default_network(SchedulerKind::Dscfq, alpha, seed).with_departures(DEPARTURES)
}

struct SuiteRun {
    alpha: f64,
    report: ViolationReport,
    wall: Duration,
}

/// The 80 DSCFQ runs shared by the first three criteria.
fn lemma_suite() -> Vec<SuiteRun> {
    let cases: Vec<(f64, u64)> = ALPHAS
        .iter()
        .flat_map(|&a| (1..=SEEDS).map(move |s| (a, s)))
        .collect();
    map_runs(&cases, |&(alpha, seed)| {
        let t0 = Instant::now();
        let scenario = fixed(alpha, seed);
        let trace = run_simulation(&scenario).expect("simulation");
        let report = validate_trace(&trace, &scenario).expect("validation");
        SuiteRun {
            alpha,
            report,
            wall: t0.elapsed(),
        }
    })
}

fn c1(runs: &[SuiteRun]) -> Outcome {
    let violations: u64 = runs.iter().map(|r| r.report.count(CheckKind::Lemma1)).sum();
    let departures: u64 = runs.iter().map(|r| r.report.departures_checked).sum();
    let slowest = runs.iter().map(|r| r.wall).max().unwrap_or_default();
    let lo = runs
        .iter()
        .map(|r| r.report.min_departure_delta_alpha)
        .fold(f64::INFINITY, f64::min);
    let hi = runs
        .iter()
        .map(|r| r.report.max_departure_delta_alpha)
        .fold(f64::NEG_INFINITY, f64::max)
        + 0.0;
    outcome(
        violations == 0 && slowest < Duration::from_secs(60),
        format!(
            "{} runs, {departures} departures, {violations} violations, alpha*delta in [{lo:.6}, {hi:.6}], slowest run {:.2}s",
            runs.len(),
            slowest.as_secs_f64()
        ),
    )
}

fn c2(runs: &[SuiteRun]) -> Outcome {
    let violations: u64 = runs
        .iter()
        .map(|r| r.report.count(CheckKind::EpsilonIdentity))
        .sum();
    let other: u64 = runs.iter().map(|r| r.report.total()).sum::<u64>() - violations;
    outcome(
        violations == 0 && other == 0,
        format!("{violations} identity exceptions, {other} other violations across the suite"),
    )
}

fn c3(runs: &[SuiteRun]) -> Outcome {
    let violations: u64 = runs.iter().map(|r| r.report.count(CheckKind::Theorem1)).sum();
    let best = runs
        .iter()
        .max_by(|a, b| a.report.max_theorem1_ratio.total_cmp(&b.report.max_theorem1_ratio))
        .expect("non-empty suite");
    let ratio = best.report.max_theorem1_ratio;
    outcome(
        violations == 0 && ratio >= 0.3,
        format!(
            "{violations} violations, max gap/bound {ratio:.4} (alpha {}, pair {:?})",
            best.alpha, best.report.max_theorem1_pair
        ),
    )
}

struct SweepOut {
    result: dscfq_cli::experiments::SweepResult,
    wall: Duration,
}

fn sweep() -> SweepOut {
    let t0 = Instant::now();
    let seeds: Vec<u64> = (1..=3).collect();
    let result = sweep_alpha(&base(), &default_alpha_grid(), &seeds, NbarFormula::Exact, DEFAULT_G_HI)
        .expect("sweep");
    SweepOut {
        result,
        wall: t0.elapsed(),
    }
}

fn c4(s: &SweepOut) -> Outcome {
    let worst = s
        .result
        .points
        .iter()
        .flat_map(|p| p.s_emp_runs.iter().map(move |e| (p.alpha, (e - p.s_model).abs())))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty sweep");
    outcome(
        worst.1 <= 0.05 && s.wall < Duration::from_secs(600),
        format!(
            "max |S_emp - S_model| {:.4} at alpha {} over {} points x 3 seeds, {:.1}s",
            worst.1,
            worst.0,
            s.result.points.len(),
            s.wall.as_secs_f64()
        ),
    )
}

fn c5(s: &SweepOut) -> Outcome {
    let r = &s.result;
    outcome(
        (0.02..=0.08).contains(&r.alpha_hat) && (0.70..=0.90).contains(&r.s_max),
        format!(
            "argmax alpha {} (want [0.02, 0.08]), max S_emp {:.4} (want [0.70, 0.90]); model optimum G* {:.4}, alpha* {:.4}",
            r.alpha_hat, r.s_max, r.g_star, r.alpha_star
        ),
    )
}

fn c6(alpha_hat: f64) -> Outcome {
    let base = base();
    let setup = adaptive_setup(&base, &AdaptiveParams::default(), NbarFormula::Exact, DEFAULT_G_HI)
        .expect("adaptive setup");
    let seeds: Vec<u64> = (1..=5).collect();
    let runs = map_runs(&seeds, |&s| adaptive_run(&base, &setup, s).expect("adaptive run"));
    let mut pass = true;
    let mut parts = Vec::new();
    let band = 1000.0 * setup.beta.max(setup.gamma);
    for r in &runs {
        let ratio = r.final_quarter_alpha / alpha_hat;
        let outside: Vec<_> = r
            .blocks
            .iter()
            .filter(|b| (b.alpha - setup.alpha_star).abs() > band)
            .collect();
        let sign_ok = outside.iter().filter(|b| b.drift_matches).count();
        pass &= (0.5..=2.0).contains(&ratio)
            && r.final_fairness >= 0.98
            && r.drift_match_fraction >= 0.95
            && r.violations.is_empty();
        parts.push(format!(
            "seed {}: alpha {:.4} ({ratio:.2}x), J {:.4}, drift {:.3} ({sign_ok}/{} off-target blocks by sign)",
            r.seed,
            r.final_quarter_alpha,
            r.final_fairness,
            r.drift_match_fraction,
            outside.len()
        ));
    }
    outcome(
        pass,
        format!("alpha_hat {alpha_hat}, alpha* {:.4}; {}", setup.alpha_star, parts.join("; ")),
    )
}

fn c7() -> Outcome {
    let alphas = [0.001, 0.005, 0.02];
    let seeds: Vec<u64> = (1..=10).collect();
    let r = compare(&base(), &SchedulerKind::ALL, &alphas, &DEFAULT_WINDOWS, &seeds).expect("compare");
    let mut pass = true;
    let mut worst_gap = f64::INFINITY;
    let mut failures = Vec::new();
    for &a in &alphas {
        for &w in &DEFAULT_WINDOWS {
            let d = r.mean(SchedulerKind::Dscfq, a, w).expect("cell");
            let t2 = r.mean(SchedulerKind::TypeII, a, w).expect("cell");
            let t1 = r.mean(SchedulerKind::TypeI, a, w).expect("cell");
            let ok = d >= t2 && t2 >= t1 && (a != alphas[0] || d - t1 >= 0.02);
            worst_gap = worst_gap.min(d - t2);
            if !ok {
                pass = false;
                failures.push(format!("alpha {a} w {w}: {d:.4}/{t2:.4}/{t1:.4}"));
            }
        }
    }
    let small = alphas[0];
    let sep = DEFAULT_WINDOWS
        .iter()
        .map(|&w| r.mean(SchedulerKind::Dscfq, small, w).unwrap() - r.mean(SchedulerKind::TypeI, small, w).unwrap())
        .fold(f64::INFINITY, f64::min);
    outcome(
        pass,
        format!(
            "12 cells, min DSCFQ-TypeII {worst_gap:.4}, min DSCFQ-TypeI at alpha {small} {sep:.4}{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; out of order: {}", failures.join(", "))
            }
        ),
    )
}

fn c8() -> Outcome {
    let alpha = 0.04;
    let s = base();
    let probs: Vec<f64> = s
        .agents
        .iter()
        .map(|a| a.weight / (alpha * a.packet_length.mean_bytes()))
        .collect();
    let tv = poisson_tv_distance(&probs).expect("tv");
    outcome(
        tv <= 0.05,
        format!("G {:.4}, TV distance {tv:.5}", probs.iter().sum::<f64>()),
    )
}

fn c9() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, want: f64, tol: f64| {
        if got.is_nan() || (got - want).abs() > tol {
            failures.push(format!("{name}: {got} vs {want}"));
        }
    };
    let e1 = (-1.0f64).exp();
    let p = slot_probabilities(1.0).unwrap();
    check("p_idle(1)", p.p_idle, 0.36788, 1e-5);
    check("p_succ(1)", p.p_succ, 0.36788, 1e-5);
    check("p_coll(1)", p.p_coll, 0.26424, 1e-5);
    let p0 = slot_probabilities(0.0).unwrap();
    check("p_idle(0)", p0.p_idle, 1.0, 1e-12);
    check("nbar(0+)", mean_collision_size(1e-9).unwrap(), 2.0, 1e-5);
    check("nbar(1)", mean_collision_size(1.0).unwrap(), (1.0 - e1) / (1.0 - 2.0 * e1), 1e-5);
    check("nbar(1) approx", mean_collision_size(1.0).unwrap(), 2.3922, 1e-4);
    let e3 = (-3.0f64).exp();
    let nbar3 = 3.0 * (1.0 - e3) / (1.0 - e3 - 3.0 * e3);
    check("nbar(3)", mean_collision_size(3.0).unwrap(), nbar3, 1e-5);
    check(
        "fairness bound",
        pairwise_fairness_bound(2016.0, 8.0, 2016.0, 2.0, 0.04).unwrap().bound,
        1310.0,
        1e-5,
    );
    check("beta(G*=1)", derive_beta(0.001, 1.0).unwrap(), 0.001 * (1.0 - 2.0 * e1) / e1, 1e-9);
    check("beta(G*=1) approx", derive_beta(0.001, 1.0).unwrap(), 7.183e-4, 1e-5);
    check("beta(gamma=0)", derive_beta(0.0, 1.0).unwrap(), 0.0, 0.0);

    // Brute-force argmax oracle for the optimizer.
    let timing = base().timing;
    let shapes = [
        ModelShape::from_timing(&timing, MEAN_MESSAGE_BYTES as f64, CrpCost::PerPacket { seconds: 1.57e-3 }),
        ModelShape::from_timing(&timing, MEAN_MESSAGE_BYTES as f64, CrpCost::Fixed { seconds: 3e-3 }),
        ModelShape {
            t_succ: 9e-6,
            t_c: 0.0,
            gap: 0.0,
            crp: CrpCost::Fixed { seconds: 9e-6 },
            ..ModelShape::from_timing(&timing, MEAN_MESSAGE_BYTES as f64, CrpCost::Fixed { seconds: 0.0 })
        },
    ];
    let mut worst = 0.0f64;
    for shape in &shapes {
        let g_hi = DEFAULT_G_HI;
        let got = optimal_attempt_rate(shape, g_hi).unwrap();
        let n = 10_000;
        let oracle = (1..=n)
            .map(|i| g_hi * i as f64 / n as f64)
            .max_by(|a, b| shape.throughput(*a).unwrap().total_cmp(&shape.throughput(*b).unwrap()))
            .unwrap();
        worst = worst.max((got - oracle).abs());
        check("optimal_attempt_rate", got, oracle, 1e-3);
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("12 analytic examples within 1e-5, optimizer vs grid max error {worst:.2e}")
        } else {
            failures.join("; ")
        },
    )
}

fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn c10() -> Outcome {
    let mut problems = Vec::new();
    let scenarios: Vec<Scenario> = [SchedulerKind::Dscfq, SchedulerKind::TypeI, SchedulerKind::TypeII]
        .iter()
        .enumerate()
        .map(|(i, &k)| Scenario::default_network(k, 0.04, 7 + i as u64).with_departures(5000))
        .collect();
    let csv = |ts: Vec<dscfq_core::engine::Trace>| -> Vec<String> {
        ts.iter().map(|t| digest(&t.to_csv_bytes().unwrap())).collect()
    };
    let a = csv(run_many(&scenarios).unwrap());
    let b = csv(run_many(&scenarios).unwrap());
    let c = csv(run_many_seq(&scenarios).unwrap());
    if a != b {
        problems.push("repeat run differs".to_string());
    }
    if a != c {
        problems.push("parallel and sequential runs differ".to_string());
    }
    let adaptive = {
        let mut s = fixed(0.04, 3).with_departures(5000);
        s.alpha_policy = dscfq_core::analysis::adaptive_policy(0.2, 2e-5, 0.3, 1e-4, 1.0).unwrap();
        s
    };
    let d = run_many_with(&[adaptive.clone(), adaptive], |_, t| Ok(digest(&t.to_csv_bytes()?))).unwrap();
    if d[0] != d[1] {
        problems.push("adaptive repeat differs".to_string());
    }

    let mut cfg = default_config();
    cfg.seeds = vec![1, 2];
    cfg.scenario.max_departures = Some(3000);
    let dir = tempfile::tempdir().unwrap();
    let m1 = run_experiment(&cfg, &dir.path().join("a")).unwrap().manifest;
    let m2 = run_experiment(&cfg, &dir.path().join("b")).unwrap().manifest;
    if m1 != m2 {
        problems.push("bundle manifests differ".to_string());
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} trace digests stable across repeats and execution modes; bundle manifest of {} files identical",
                a.len() + 1,
                m1.files.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let mut results = Vec::new();
    let suite = lemma_suite();
    results.push(("C1", c1(&suite)));
    results.push(("C2", c2(&suite)));
    results.push(("C3", c3(&suite)));
    let sw = sweep();
    results.push(("C4", c4(&sw)));
    results.push(("C5", c5(&sw)));
    results.push(("C6", c6(sw.result.alpha_hat)));
    results.push(("C7", c7()));
    results.push(("C8", c8()));
    results.push(("C9", c9()));
    results.push(("C10", c10()));

    let mut failed = 0;
    for (id, o) in &results {
        println!("{id} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        t0.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
