//! First-layer relative entropies: leading-order expansions and their exact
//! classical counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{layer1_mode_distributions, ModeComponent, Receiver};
use crate::mac::MacParams;

use super::RelEntStats;

/// Which pair of hypotheses the divergence compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    /// `D(sigma_XYB || sigma_XY (x) sigma_B)`
    Joint,
    /// `D(sigma_XYB || sigma_X (x) sigma_YB)`
    XOnly,
    /// `D(sigma_XYB || sigma_Y (x) sigma_XB)`
    YOnly,
}

impl Marginal {
    pub const ALL: [Marginal; 3] = [Marginal::Joint, Marginal::XOnly, Marginal::YOnly];
}

/// Mass beyond the classical cutoff used by `relent_exact`.
const EXACT_TAIL: f64 = 1e-18;
const EXACT_MAX_CUTOFF: usize = 20_000;

/// `kappa_r^2 / (2 background (1 + background))` for the receiver's link.
pub(crate) fn link_coefficient(p: &MacParams, receiver: Receiver) -> f64 {
    let (k, bg) = receiver.link(p);
    k * k / (2.0 * bg * (1.0 + bg))
}

fn check_inputs(p: &MacParams, alpha: f64, beta: f64, s: f64) -> Result<()> {
    p.validate()?;
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::domain(format!("s must be finite and >= 0, got {s}")));
    }
    Ok(())
}

/// Leading-order `D` and `V = 2 D`.
pub fn relent_leading(
    p: &MacParams,
    alpha: f64,
    beta: f64,
    s: f64,
    receiver: Receiver,
    marginal: Marginal,
) -> Result<RelEntStats> {
    check_inputs(p, alpha, beta, s)?;
    let (wx, wy) = (alpha * p.tau * p.tau, beta * (1.0 - p.tau) * (1.0 - p.tau));
    let (weight, r_order) = match marginal {
        Marginal::Joint => (wx + wy, "O((alpha+beta) s^4)"),
        Marginal::XOnly => (wx, "O(alpha s^4)"),
        Marginal::YOnly => (wy, "O(beta s^4)"),
    };
    let d = weight * link_coefficient(p, receiver) * s * s;
    Ok(RelEntStats { d, v: 2.0 * d, r_order: r_order.to_string() })
}

fn classical_cutoff(p: &MacParams, s: f64, receiver: Receiver) -> Result<usize> {
    let (k, bg) = receiver.link(p);
    let top = k * s + bg;
    let ratio = top / (top + 1.0);
    let d = crate::fock::geometric_cutoff(ratio, EXACT_TAIL);
    if d > EXACT_MAX_CUTOFF {
        return Err(Error::Truncation {
            what: "classical photon distribution".into(),
            tail: ratio.powi(EXACT_MAX_CUTOFF as i32),
            tol: EXACT_TAIL,
            required: d,
        });
    }
    Ok(d.max(2))
}

/// Exact `D` and `V` from the Fock-diagonal per-mode laws. The states are
/// simultaneously diagonal, so the quantum divergence is the classical one.
pub fn relent_exact(
    p: &MacParams,
    alpha: f64,
    beta: f64,
    s: f64,
    receiver: Receiver,
    marginal: Marginal,
) -> Result<RelEntStats> {
    check_inputs(p, alpha, beta, s)?;
    let cutoff = classical_cutoff(p, s, receiver)?;
    let comps = layer1_mode_distributions(p, alpha, beta, s, receiver, cutoff)?;
    // reference law paired with each component
    let reference = |c: &ModeComponent| -> Vec<f64> {
        let members: Vec<&ModeComponent> = comps
            .iter()
            .filter(|o| match marginal {
                Marginal::Joint => true,
                Marginal::XOnly => o.y_on == c.y_on,
                Marginal::YOnly => o.x_on == c.x_on,
            })
            .collect();
        let total: f64 = members.iter().map(|o| o.weight).sum();
        (0..cutoff).map(|k| members.iter().map(|o| o.weight * o.dist.probs()[k]).sum::<f64>() / total).collect()
    };
    let refs: Vec<Vec<f64>> = comps.iter().map(reference).collect();
    // log-likelihood ratio ln(p/q) = ln1p((p - q)/q), with p - q formed from
    // the components directly so small differences keep their precision
    let llr = |ci: usize, k: usize| -> f64 {
        let c = &comps[ci];
        let q = refs[ci][k];
        let members = comps.iter().filter(|o| match marginal {
            Marginal::Joint => true,
            Marginal::XOnly => o.y_on == c.y_on,
            Marginal::YOnly => o.x_on == c.x_on,
        });
        let (mut num, mut den) = (0.0, 0.0);
        for o in members {
            num += o.weight * (c.dist.probs()[k] - o.dist.probs()[k]);
            den += o.weight;
        }
        (num / den / q).ln_1p()
    };
    let mut d = 0.0;
    for (ci, c) in comps.iter().enumerate() {
        let probs = c.dist.probs();
        let mut part = 0.0;
        for k in 0..cutoff {
            let q = refs[ci][k];
            if probs[k] == 0.0 && q == 0.0 {
                continue;
            }
            let u = probs[k] / q - 1.0;
            let l = llr(ci, k);
            // q f(p/q) with f(r) = r ln r - r + 1 >= 0
            part += q * ((1.0 + u) * l - u);
        }
        d += c.weight * part;
    }
    let mut v = 0.0;
    for (ci, c) in comps.iter().enumerate() {
        let probs = c.dist.probs();
        let mut part = 0.0;
        for (k, &pk) in probs.iter().enumerate() {
            let dev = llr(ci, k) - d;
            part += pk * dev * dev;
        }
        v += c.weight * part;
    }
    Ok(RelEntStats { d: d.max(0.0), v: v.max(0.0), r_order: "exact".to_string() })
}
