//! Two-layer covert throughput at block length `n`, reported as leading terms
//! with their asymptotic orders attached.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Receiver;
use crate::gaussian::g_unchecked;
use crate::mac::MacParams;

use super::qfunc::{budget_load, chernoff_truncation, covert_budget, covert_budget_constant};
use super::relent::link_coefficient;
use super::willie::willie_tv_leading;

/// Relative slack allowed when a load sits on the budget line.
const BUDGET_RTOL: f64 = 1e-12;

pub const DEFAULT_MU_BAR: f64 = 0.1;

/// Inputs of one instance of the two-layer code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanInputs {
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    #[serde(default = "default_mu_bar")]
    pub mu_bar: f64,
    pub delta: f64,
    pub epsilon: f64,
}

fn default_mu_bar() -> f64 {
    DEFAULT_MU_BAR
}

impl PlanInputs {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [("s", self.s), ("mu_bar", self.mu_bar), ("delta", self.delta), ("epsilon", self.epsilon)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// A leading-order value and the order of what it leaves out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub order: String,
}

impl Rate {
    fn new(value: f64, order: &str) -> Self {
        Self { value, order: order.to_string() }
    }
}

/// Message sizes (lower bounds) and message-plus-key sizes (upper bounds)
/// of the sparse first layer, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer1Rates {
    pub log_m_x1: Rate,
    pub log_m_y1: Rate,
    pub log_m_x1_m_y1: Rate,
    pub log_m_x1_s_x: Rate,
    pub log_m_y1_s_y: Rate,
    pub log_keys_total: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer2Rates {
    pub log_m_x2: Rate,
    pub log_m_y2: Rate,
    pub log_m_x2_m_y2: Rate,
    /// TMSV pairs consumed, `ceil(n alpha (1 - mu_bar))`.
    pub l_x: u64,
    pub l_y: u64,
    /// Entanglement spent, `l g(s)` nats.
    pub ent_nats_x: f64,
    pub ent_nats_y: f64,
}

fn check_budget(p: &MacParams, x: &PlanInputs) -> Result<(f64, f64)> {
    let budget = covert_budget(x.n, x.delta, p)?;
    let load = budget_load(x.alpha, x.beta, x.s, p);
    if load > budget * (1.0 + BUDGET_RTOL) {
        return Err(Error::Infeasible {
            constraint: format!(
                "covert budget: (alpha tau + beta (1 - tau)) s = {load:e} exceeds {budget:e} at n = {}",
                x.n
            ),
        });
    }
    Ok((budget, load))
}

pub(crate) fn layer1_leading(p: &MacParams, x: &PlanInputs) -> Layer1Rates {
    let nf = x.n as f64;
    let s2 = x.s * x.s;
    let (wx, wy) = (x.alpha * p.tau * p.tau, x.beta * (1.0 - p.tau) * (1.0 - p.tau));
    let bob = link_coefficient(p, Receiver::Bob);
    let willie = link_coefficient(p, Receiver::Willie);
    Layer1Rates {
        log_m_x1: Rate::new(nf * wx * bob * s2, "o(n alpha s^2)"),
        log_m_y1: Rate::new(nf * wy * bob * s2, "o(n beta s^2)"),
        log_m_x1_m_y1: Rate::new(nf * (wx + wy) * bob * s2, "o(n (alpha+beta) s^2)"),
        log_m_x1_s_x: Rate::new(nf * wx * willie * s2, "o(n alpha s^2)"),
        log_m_y1_s_y: Rate::new(nf * wy * willie * s2, "o(n beta s^2)"),
        log_keys_total: Rate::new(nf * (wx + wy) * willie * s2, "o(n (alpha+beta) s^2)"),
    }
}

pub(crate) fn layer2_leading(p: &MacParams, x: &PlanInputs) -> Layer2Rates {
    let nf = x.n as f64;
    let keep = 1.0 - x.mu_bar;
    let c = -p.kappa / (1.0 + (1.0 - p.kappa) * p.n_b) * x.s * x.s.ln();
    let (ax, ay) = (p.tau * x.alpha, (1.0 - p.tau) * x.beta);
    let pairs = |a: f64| (nf * a * keep).ceil() as u64;
    let (l_x, l_y) = (pairs(x.alpha), pairs(x.beta));
    let g = g_unchecked(x.s);
    Layer2Rates {
        log_m_x2: Rate::new(keep * nf * c * ax, "O(n alpha s)"),
        log_m_y2: Rate::new(keep * nf * c * ay, "O(n beta s)"),
        log_m_x2_m_y2: Rate::new(keep * nf * c * (ax + ay), "O(n (alpha+beta) s)"),
        l_x,
        l_y,
        ent_nats_x: l_x as f64 * g,
        ent_nats_y: l_y as f64 * g,
    }
}

/// First-layer sizes; fails when the covert budget is exceeded.
pub fn layer1_throughput(p: &MacParams, x: &PlanInputs) -> Result<Layer1Rates> {
    p.validate()?;
    x.validate()?;
    check_budget(p, x)?;
    Ok(layer1_leading(p, x))
}

/// Second-layer sizes and the entanglement they consume.
pub fn layer2_throughput(p: &MacParams, x: &PlanInputs) -> Result<Layer2Rates> {
    p.validate()?;
    x.validate()?;
    check_budget(p, x)?;
    Ok(layer2_leading(p, x))
}

/// A fully resolved two-layer code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertPlan {
    pub params: MacParams,
    pub inputs: PlanInputs,
    pub budget: f64,
    pub load: f64,
    pub layer1: Layer1Rates,
    pub layer2: Layer2Rates,
    /// Trace-distance cost of discarding light codewords.
    pub chernoff: f64,
    /// Leading term of Willie's detection bound.
    pub willie_tv: f64,
}

pub fn covert_plan(p: &MacParams, x: &PlanInputs) -> Result<CovertPlan> {
    p.validate()?;
    x.validate()?;
    let (budget, load) = check_budget(p, x)?;
    Ok(CovertPlan {
        params: *p,
        inputs: *x,
        budget,
        load,
        layer1: layer1_leading(p, x),
        layer2: layer2_leading(p, x),
        chernoff: chernoff_truncation(x.n, x.alpha, x.beta, x.mu_bar)?,
        willie_tv: willie_tv_leading(x.n, x.alpha, x.beta, x.s, p)?,
    })
}

/// Limits of the normalized rates when `alpha_n = alpha n^(gamma - 1/2)`,
/// `beta_n = beta n^(gamma - 1/2)` and `s_n = s n^(-gamma)`. First-layer
/// values are normalized by `n^(1/2 - gamma)`, the rest by `sqrt(n) ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub layer1_x: f64,
    pub layer1_y: f64,
    pub layer2_x: f64,
    pub layer2_y: f64,
    pub ent_x: f64,
    pub ent_y: f64,
}

impl ScalingConstants {
    pub fn as_array(&self) -> [f64; 6] {
        [self.layer1_x, self.layer1_y, self.layer2_x, self.layer2_y, self.ent_x, self.ent_y]
    }

    pub const LABELS: [&'static str; 6] = ["layer1_x", "layer1_y", "layer2_x", "layer2_y", "ent_x", "ent_y"];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingInputs {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub delta: f64,
}

impl ScalingInputs {
    pub fn validate(&self, p: &MacParams) -> Result<()> {
        p.validate()?;
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::domain(format!("gamma must lie in (0, 1/2), got {}", self.gamma)));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("s", self.s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        let c = covert_budget_constant(self.delta, p)?;
        let load = budget_load(self.alpha, self.beta, self.s, p);
        if (load - c).abs() > 1e-9 * c.max(f64::MIN_POSITIVE) {
            return Err(Error::Infeasible {
                constraint: format!("scaling constants need (alpha tau + beta (1 - tau)) s = {c:e}, got {load:e}"),
            });
        }
        Ok(())
    }

    /// Block-`n` instance: the scaled sequences and `mu_bar = (n min(alpha_n, beta_n))^(-1/3)`,
    /// which vanishes while keeping the Chernoff bound vanishing too.
    pub fn at(&self, n: u64, epsilon: f64) -> Result<PlanInputs> {
        let nf = n as f64;
        let spread = nf.powf(self.gamma - 0.5);
        let (alpha, beta, s) = (self.alpha * spread, self.beta * spread, self.s * nf.powf(-self.gamma));
        let mu_bar = (nf * alpha.min(beta)).powf(-1.0 / 3.0);
        let x = PlanInputs { n, alpha, beta, s, mu_bar, delta: self.delta, epsilon };
        x.validate()?;
        Ok(x)
    }
}

pub fn scaling_constants(p: &MacParams, c: &ScalingInputs) -> Result<ScalingConstants> {
    c.validate(p)?;
    let layer1 = link_coefficient(p, Receiver::Bob) * c.s * c.s;
    let layer2 = c.gamma * p.kappa * c.s / (1.0 + (1.0 - p.kappa) * p.n_b);
    Ok(ScalingConstants {
        layer1_x: c.alpha * p.tau * p.tau * layer1,
        layer1_y: c.beta * (1.0 - p.tau) * (1.0 - p.tau) * layer1,
        layer2_x: p.tau * c.alpha * layer2,
        layer2_y: (1.0 - p.tau) * c.beta * layer2,
        ent_x: c.gamma * c.alpha * c.s,
        ent_y: c.gamma * c.beta * c.s,
    })
}

/// The block-`n` plan rescaled the same way as `scaling_constants`.
pub fn normalized_rates(p: &MacParams, c: &ScalingInputs, n: u64, epsilon: f64) -> Result<ScalingConstants> {
    c.validate(p)?;
    let x = c.at(n, epsilon)?;
    let plan = covert_plan(p, &x)?;
    let nf = n as f64;
    let (l1, l2) = (nf.powf(0.5 - c.gamma), nf.sqrt() * nf.ln());
    Ok(ScalingConstants {
        layer1_x: plan.layer1.log_m_x1.value / l1,
        layer1_y: plan.layer1.log_m_y1.value / l1,
        layer2_x: plan.layer2.log_m_x2.value / l2,
        layer2_y: plan.layer2.log_m_y2.value / l2,
        ent_x: plan.layer2.ent_nats_x / l2,
        ent_y: plan.layer2.ent_nats_y / l2,
    })
}
