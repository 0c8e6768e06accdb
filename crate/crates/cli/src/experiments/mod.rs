//! Experiment drivers. Each returns plain data; [`run_experiment`] writes it
//! into a result bundle.

pub mod adaptive;
pub mod analyze;
pub mod compare;
pub mod sweep;

use std::path::Path;

use dscfq_core::batch::run_many_with;
use dscfq_core::engine::{read_events_csv, RunSummary, Scenario, Trace, TraceMetadata};
use dscfq_core::metrics::{sliding_window_fairness, validate_trace, ViolationReport};
use serde_json::json;

use crate::bundle::{Manifest, ResultBundle};
use crate::config::{Experiment, ExperimentConfig, DEFAULT_WINDOWS};
use crate::error::{CliError, Result};

pub use adaptive::{adaptive_run, adaptive_setup, AdaptiveParams, AdaptiveRun, AdaptiveSetup};
pub use analyze::{analyze, calibrate_crp, AnalyzeResult};
pub use compare::{compare, CompareResult};
pub use sweep::{sweep_alpha, SweepResult};

#[derive(Debug)]
pub struct Outcome {
    pub manifest: Manifest,
    /// Violations on DSCFQ runs, which are the only ones with guarantees.
    pub enforced_violations: u64,
}

fn f(x: f64) -> String {
    x.to_string()
}

fn enforced(r: &ViolationReport) -> u64 {
    if r.enforced {
        r.total()
    } else {
        0
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let base = &cfg.scenario;
    let mut bundle = ResultBundle::create(out, cfg)?;
    bundle.write_json("config.json", cfg)?;
    let mut enforced_violations = 0;

    match &cfg.experiment {
        Experiment::Run => {
            let scenarios: Vec<Scenario> = seeds
                .iter()
                .map(|&seed| Scenario {
                    seed,
                    ..base.clone()
                })
                .collect();
            struct RunOut {
                csv: Vec<u8>,
                summary: RunSummary,
                report: ViolationReport,
                swm: Vec<(usize, Vec<f64>)>,
            }
            let outs = run_many_with(&scenarios, |s, t| {
                let swm = DEFAULT_WINDOWS
                    .iter()
                    .filter(|&&w| t.departure_count() >= w)
                    .map(|&w| Ok((w, sliding_window_fairness(&t, w, &s.weights())?.indices)))
                    .collect::<dscfq_core::Result<Vec<_>>>()?;
                Ok(RunOut {
                    csv: t.to_csv_bytes()?,
                    summary: RunSummary::from_trace(&t),
                    report: validate_trace(&t, s)?,
                    swm,
                })
            })?;
            let mut summaries = Vec::new();
            for (seed, o) in seeds.iter().zip(outs) {
                bundle.write(&format!("trace_seed{seed}.csv"), &o.csv)?;
                bundle.write_json(&format!("violations_seed{seed}.json"), &o.report)?;
                for (w, idx) in &o.swm {
                    bundle.write_csv(
                        &format!("swm_w{w}_seed{seed}.csv"),
                        &["window_start_idx", "index"],
                        idx.iter().enumerate().map(|(i, x)| [i.to_string(), f(*x)]),
                    )?;
                }
                enforced_violations += enforced(&o.report);
                summaries.push(json!({
                    "summary": o.summary,
                    "swm_mean": o.swm.iter().map(|(w, idx)| json!({
                        "w": w,
                        "mean": idx.iter().sum::<f64>() / idx.len() as f64,
                    })).collect::<Vec<_>>(),
                    "violations": o.report.total(),
                }));
            }
            bundle.write_json("summary.json", &json!({ "runs": summaries }))?;
        }
        Experiment::SweepAlpha { grid } => {
            let r = sweep_alpha(base, grid, &seeds, cfg.nbar_formula, cfg.g_hi)?;
            bundle.write_csv(
                "sweep_alpha.csv",
                &["alpha", "g", "s_emp", "s_model", "crp_per_packet_us"],
                r.points
                    .iter()
                    .map(|p| [f(p.alpha), f(p.g), f(p.s_emp), f(p.s_model), f(p.crp_per_packet_us)]),
            )?;
            bundle.write_json("summary.json", &r)?;
        }
        Experiment::Adaptive {
            alpha0,
            gamma,
            alpha_min,
            alpha_max,
            calibration_departures,
        } => {
            let params = AdaptiveParams {
                alpha0: *alpha0,
                gamma: *gamma,
                alpha_min: *alpha_min,
                alpha_max: *alpha_max,
                calibration_departures: *calibration_departures,
            };
            let setup = adaptive_setup(base, &params, cfg.nbar_formula, cfg.g_hi)?;
            let runs = dscfq_core::batch::map_runs(&seeds, |&s| adaptive_run(base, &setup, s))
                .into_iter()
                .collect::<Result<Vec<AdaptiveRun>>>()?;
            let n = base.agents.len();
            for run in &runs {
                let seed = run.seed;
                bundle.write_csv(
                    &format!("adaptive_seed{seed}.csv"),
                    &["block", "start_slot", "t_s", "alpha", "fairness", "s", "expected_drift", "drift_matches"],
                    run.blocks.iter().map(|b| {
                        [
                            b.block.to_string(),
                            b.start_slot.to_string(),
                            f(b.tick_s),
                            f(b.alpha),
                            b.fairness.map(f).unwrap_or_default(),
                            f(b.s_block),
                            f(b.expected_drift),
                            b.drift_matches.to_string(),
                        ]
                    }),
                )?;
                let mut header = vec!["t_s".to_string()];
                header.extend((0..n).map(|k| format!("agent{k}")));
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                bundle.write_csv(
                    &format!("normalized_throughput_seed{seed}.csv"),
                    &header,
                    run.blocks.iter().map(|b| {
                        std::iter::once(f(b.tick_s))
                            .chain(b.normalized_throughput.iter().map(|x| f(*x)))
                            .collect::<Vec<_>>()
                    }),
                )?;
                bundle.write_json(&format!("violations_seed{seed}.json"), &run.violations)?;
                enforced_violations += enforced(&run.violations);
            }
            bundle.write_json(
                "summary.json",
                &json!({
                    "setup": setup,
                    "runs": runs.iter().map(|r| json!({
                        "seed": r.seed,
                        "summary": r.summary,
                        "final_quarter_alpha": r.final_quarter_alpha,
                        "final_fairness": r.final_fairness,
                        "drift_match_fraction": r.drift_match_fraction,
                        "violations": r.violations.total(),
                    })).collect::<Vec<_>>(),
                }),
            )?;
        }
        Experiment::Compare {
            schedulers,
            alphas,
            windows,
        } => {
            let r = compare(base, schedulers, alphas, windows, &seeds)?;
            bundle.write_csv(
                "compare.csv",
                &["scheduler", "alpha", "w", "mean_fairness"],
                r.cells
                    .iter()
                    .map(|c| [c.scheduler.to_string(), f(c.alpha), c.w.to_string(), f(c.mean)]),
            )?;
            bundle.write_json("summary.json", &r)?;
        }
        Experiment::Analyze {
            g_max,
            points,
            alphas,
            crp_per_packet_us,
        } => {
            let crp = match crp_per_packet_us {
                Some(us) => us * 1e-6,
                None => calibrate_crp(base, base.alpha_policy.initial_alpha(), 5000)?,
            };
            let gamma = 1e-4 * AdaptiveParams::default().alpha0;
            let r = analyze(base, *g_max, *points, alphas, crp, cfg.nbar_formula, cfg.g_hi, gamma)?;
            bundle.write_csv(
                "model_g.csv",
                &["g", "p_idle", "p_succ", "p_coll", "n_bar", "s"],
                r.g_curve
                    .iter()
                    .map(|x| [f(x.g), f(x.p_idle), f(x.p_succ), f(x.p_coll), f(x.n_bar), f(x.s)]),
            )?;
            bundle.write_csv(
                "model_alpha.csv",
                &["alpha", "g", "s", "d"],
                r.alpha_curve.iter().map(|x| [f(x.alpha), f(x.g), f(x.s), f(x.d)]),
            )?;
            bundle.write_json(
                "summary.json",
                &json!({
                    "g_star": r.g_star,
                    "alpha_star": r.alpha_star,
                    "beta": r.beta,
                    "gamma": r.gamma,
                    "crp_per_packet_us": r.crp_per_packet_us,
                    "nbar_formula": r.nbar_formula,
                }),
            )?;
        }
        Experiment::Validate { trace } => {
            let file = std::fs::File::open(trace)
                .map_err(|e| CliError::io(format!("opening {}", trace.display()), e))?;
            let events = read_events_csv(std::io::BufReader::new(file), base.alpha_policy.initial_alpha())?;
            let end = events.last().map(|e| e.tick).unwrap_or_default();
            let t = Trace {
                metadata: TraceMetadata {
                    seed: base.seed,
                    scheduler: base.scheduler,
                    alpha_policy: base.alpha_policy,
                    duration: base.duration,
                    end,
                    scenario: base.clone(),
                },
                events,
                slots: Vec::new(),
            };
            let report = validate_trace(&t, base)?;
            enforced_violations += enforced(&report);
            bundle.write_json("violations.json", &report)?;
        }
    }
    Ok(Outcome {
        manifest: bundle.finish()?,
        enforced_violations,
    })
}
