//! Covert throughput planning for the two-layer code: the power budget,
//! throughput leading terms, Willie's detection bound and the first-layer
//! divergences behind them.

mod qfunc;
mod relent;
mod throughput;
mod willie;

use serde::{Deserialize, Serialize};

pub use qfunc::{
    binomial_lower_tail, budget_load, budget_terms, chernoff_truncation, covert_budget, covert_budget_constant, q_func,
    q_inv, second_order_dmax, second_order_rate, within_budget,
};
pub use relent::{relent_exact, relent_leading, Marginal};
pub use throughput::{
    covert_plan, layer1_throughput, layer2_throughput, normalized_rates, scaling_constants, CovertPlan, Layer1Rates,
    Layer2Rates, PlanInputs, Rate, ScalingConstants, ScalingInputs, DEFAULT_MU_BAR,
};
pub use willie::{willie_tv_argument, willie_tv_leading, willie_tv_mc, McEstimate, MC_CHUNK};

/// Relative entropy, its variance and the order of the third-moment remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelEntStats {
    pub d: f64,
    pub v: f64,
    pub r_order: String,
}
