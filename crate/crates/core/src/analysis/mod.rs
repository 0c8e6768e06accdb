//! Closed-form throughput model, operating-point search, the adaptive
//! controller, and the pairwise fairness bound.

mod adaptive;
mod bounds;
mod optimize;
mod poisson;
mod throughput;

pub use adaptive::{
    adaptive_policy, alpha_from_attempt_rate, attempt_rate_from_alpha, derive_beta,
    expected_drift, weight_length_ratio, AdaptiveAlphaController,
};
pub use bounds::{pairwise_fairness_bound, FairnessBound};
pub use optimize::{golden_section_max, optimal_attempt_rate, DEFAULT_G_HI};
pub use poisson::{poisson_binomial_pmf, poisson_pmf, poisson_tv_distance};
pub use throughput::{
    mean_collision_size, mean_collision_size_with, saturation_throughput, slot_probabilities,
    CrpCost, ModelShape, NbarFormula, SlotProbabilities, ThroughputModel,
};
