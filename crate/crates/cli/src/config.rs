//! Experiment configuration files.
//!
//! A config is one JSON object:
//!
//! ```json
//! {
//!   "scenario": { "agents": [...], "scheduler": "dscfq", ... },
//!   "experiment": { "kind": "sweep_alpha", "grid": [0.01, 0.04] },
//!   "seeds": [1, 2, 3],
//!   "output_dir": "out"
//! }
//! ```
//!
//! Omitted timing fields take the standard defaults, omitted `m` is 2 and the
//! BEB window spans 15..1023.

use std::path::{Path, PathBuf};

use dscfq_core::analysis::{NbarFormula, DEFAULT_G_HI};
use dscfq_core::engine::{AlphaPolicy, Scenario};
use dscfq_core::sched::SchedulerKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// The bundled ten-agent evaluation config.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

pub const DEFAULT_WINDOWS: [usize; 4] = [30, 50, 100, 1000];

/// Ten points, log-spaced over `[0.005, 0.2]`.
pub fn default_alpha_grid() -> Vec<f64> {
    let (lo, hi) = (0.005f64, 0.2f64);
    (0..10)
        .map(|i| {
            let x = lo * (hi / lo).powf(i as f64 / 9.0);
            (x * 1e6).round() / 1e6
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Run,
    SweepAlpha {
        #[serde(default = "default_alpha_grid")]
        grid: Vec<f64>,
    },
    Adaptive {
        #[serde(default = "default_alpha0")]
        alpha0: f64,
        /// Collision step; defaults to `1e-4 * alpha0`.
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default = "default_alpha_min")]
        alpha_min: f64,
        #[serde(default = "default_alpha_max")]
        alpha_max: f64,
        /// Length of the run that measures the resolution cost.
        #[serde(default = "default_calibration_departures")]
        calibration_departures: u64,
    },
    Compare {
        #[serde(default = "default_schedulers")]
        schedulers: Vec<SchedulerKind>,
        #[serde(default = "default_compare_alphas")]
        alphas: Vec<f64>,
        #[serde(default = "default_windows")]
        windows: Vec<usize>,
    },
    Analyze {
        #[serde(default = "default_g_max")]
        g_max: f64,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_alpha_grid")]
        alphas: Vec<f64>,
        /// Per-packet resolution cost; measured by a short run when absent.
        #[serde(default)]
        crp_per_packet_us: Option<f64>,
    },
    Validate {
        trace: PathBuf,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::SweepAlpha { .. } => "sweep_alpha",
            Experiment::Adaptive { .. } => "adaptive",
            Experiment::Compare { .. } => "compare",
            Experiment::Analyze { .. } => "analyze",
            Experiment::Validate { .. } => "validate",
        }
    }

    /// The experiment `name` with every parameter at its default.
    pub fn default_for(name: &str, trace: Option<PathBuf>) -> Result<Self> {
        let exp = match name {
            "run" => Experiment::Run,
            "sweep_alpha" | "sweep-alpha" => Experiment::SweepAlpha {
                grid: default_alpha_grid(),
            },
            "adaptive" => Experiment::Adaptive {
                alpha0: default_alpha0(),
                gamma: None,
                alpha_min: default_alpha_min(),
                alpha_max: default_alpha_max(),
                calibration_departures: default_calibration_departures(),
            },
            "compare" => Experiment::Compare {
                schedulers: default_schedulers(),
                alphas: default_compare_alphas(),
                windows: default_windows(),
            },
            "analyze" => Experiment::Analyze {
                g_max: default_g_max(),
                points: default_points(),
                alphas: default_alpha_grid(),
                crp_per_packet_us: None,
            },
            "validate" => Experiment::Validate {
                trace: trace.ok_or_else(|| CliError::config("experiment.trace", "validate needs a trace path"))?,
            },
            other => return Err(CliError::config("experiment.kind", format!("unknown experiment `{other}`"))),
        };
        Ok(exp)
    }
}

fn default_alpha0() -> f64 {
    0.2
}
fn default_alpha_min() -> f64 {
    1e-4
}
fn default_alpha_max() -> f64 {
    1.0
}
fn default_calibration_departures() -> u64 {
    5000
}
fn default_schedulers() -> Vec<SchedulerKind> {
    SchedulerKind::ALL.to_vec()
}
fn default_compare_alphas() -> Vec<f64> {
    vec![0.001, 0.005, 0.02]
}
fn default_windows() -> Vec<usize> {
    DEFAULT_WINDOWS.to_vec()
}
fn default_g_max() -> f64 {
    3.0
}
fn default_points() -> usize {
    301
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_g_hi() -> f64 {
    DEFAULT_G_HI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub experiment: Experiment,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub nbar_formula: NbarFormula,
    /// Upper end of the optimal attempt-rate search.
    #[serde(default = "default_g_hi")]
    pub g_hi: f64,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("<file>", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })?;
    validate_config(&cfg)?;
    Ok(cfg)
}

pub fn default_config() -> ExperimentConfig {
    parse_config(DEFAULT_CONFIG).expect("bundled config is valid")
}

fn positive(path: impl Into<String>, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be positive, got {v}")))
    }
}

fn sorted_positive(path: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CliError::config(path, "must not be empty"));
    }
    for (i, &a) in grid.iter().enumerate() {
        positive(format!("{path}[{i}]"), a)?;
        if i > 0 && a <= grid[i - 1] {
            return Err(CliError::config(format!("{path}[{i}]"), "grid must be strictly increasing"));
        }
    }
    Ok(())
}

/// Checks everything the engine would reject, reporting field paths.
pub fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    let sc = &cfg.scenario;
    if sc.agents.is_empty() {
        return Err(CliError::config("scenario.agents", "at least one agent is required"));
    }
    for (i, a) in sc.agents.iter().enumerate() {
        if a.id.index() != i {
            return Err(CliError::config(
                format!("scenario.agents[{i}].id"),
                format!("expected {i}, got {}", a.id),
            ));
        }
        positive(format!("scenario.agents[{i}].weight"), a.weight)
            .map_err(|e| match e {
                CliError::Config { path, message } => {
                    CliError::config(path, format!("agent {i}: {message}"))
                }
                other => other,
            })?;
        a.packet_length
            .validate()
            .map_err(|e| CliError::config(format!("scenario.agents[{i}].packet_length"), e.to_string()))?;
        if !a.always_backlogged {
            positive(format!("scenario.agents[{i}].arrival_rate"), a.arrival_rate.unwrap_or(0.0))?;
        }
    }
    if sc.duration.0 == 0 {
        return Err(CliError::config("scenario.duration", "must be positive"));
    }
    if let AlphaPolicy::Fixed { alpha } = sc.alpha_policy {
        positive("scenario.alpha_policy.alpha", alpha)?;
    }
    sc.alpha_policy
        .validate()
        .map_err(|e| CliError::config("scenario.alpha_policy", e.to_string()))?;
    sc.timing
        .validate()
        .map_err(|e| CliError::config("scenario.timing", e.to_string()))?;
    sc.validate().map_err(|e| CliError::config("scenario", e.to_string()))?;
    if cfg.seeds.is_empty() {
        return Err(CliError::config("seeds", "at least one seed is required"));
    }
    positive("g_hi", cfg.g_hi)?;
    match &cfg.experiment {
        Experiment::SweepAlpha { grid } => sorted_positive("experiment.grid", grid)?,
        Experiment::Compare {
            schedulers,
            alphas,
            windows,
        } => {
            if schedulers.is_empty() {
                return Err(CliError::config("experiment.schedulers", "must not be empty"));
            }
            sorted_positive("experiment.alphas", alphas)?;
            if let Some(i) = windows.iter().position(|&w| w == 0) {
                return Err(CliError::config(format!("experiment.windows[{i}]"), "must be positive"));
            }
        }
        Experiment::Adaptive {
            alpha0,
            gamma,
            alpha_min,
            alpha_max,
            calibration_departures,
        } => {
            positive("experiment.alpha0", *alpha0)?;
            positive("experiment.alpha_min", *alpha_min)?;
            positive("experiment.alpha_max", *alpha_max)?;
            if let Some(g) = gamma {
                positive("experiment.gamma", *g)?;
            }
            if !(alpha_min <= alpha0 && alpha0 <= alpha_max) {
                return Err(CliError::config("experiment.alpha0", "must lie in [alpha_min, alpha_max]"));
            }
            if *calibration_departures == 0 {
                return Err(CliError::config("experiment.calibration_departures", "must be positive"));
            }
        }
        Experiment::Analyze {
            g_max,
            points,
            alphas,
            crp_per_packet_us,
        } => {
            positive("experiment.g_max", *g_max)?;
            if *points < 2 {
                return Err(CliError::config("experiment.points", "need at least 2"));
            }
            sorted_positive("experiment.alphas", alphas)?;
            if let Some(c) = crp_per_packet_us {
                positive("experiment.crp_per_packet_us", *c)?;
            }
        }
        Experiment::Run | Experiment::Validate { .. } => {}
    }
    Ok(())
}
