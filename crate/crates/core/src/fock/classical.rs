//! Photon-number distributions of Fock-diagonal states.
//!
//! The sparse on/off signalling of the first coding layer only ever produces
//! mixtures of thermal states, which are diagonal in the number basis, so
//! every quantity reduces to a classical one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::MacParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Receiver {
    Bob,
    Willie,
}

impl Receiver {
    /// `(transmissivity seen by the receiver, background photon number)`.
    pub fn link(self, p: &MacParams) -> (f64, f64) {
        match self {
            Receiver::Bob => (p.kappa, (1.0 - p.kappa) * p.n_b),
            Receiver::Willie => (1.0 - p.kappa, p.kappa * p.n_b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Shape("empty distribution".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::domain("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::domain(format!("probabilities sum to {total} > 1")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail(&self) -> f64 {
        (1.0 - self.probs.iter().sum::<f64>()).max(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Geometric law `N^k / (N+1)^(k+1)` on `0..cutoff`.
pub fn photon_distribution_thermal(n_mean: f64, cutoff: usize) -> Result<PhotonDistribution> {
    if !(n_mean >= 0.0 && n_mean.is_finite()) {
        return Err(Error::domain(format!("mean photon number must be >= 0, got {n_mean}")));
    }
    if cutoff == 0 {
        return Err(Error::Shape("cutoff must be positive".into()));
    }
    let ratio = n_mean / (n_mean + 1.0);
    let mut p = 1.0 / (n_mean + 1.0);
    let mut probs = Vec::with_capacity(cutoff);
    for _ in 0..cutoff {
        probs.push(p);
        p *= ratio;
    }
    Ok(PhotonDistribution { probs })
}

/// One of the four on/off input combinations and its output law.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeComponent {
    pub x_on: bool,
    pub y_on: bool,
    pub weight: f64,
    pub mean: f64,
    pub dist: PhotonDistribution,
}

/// Per-mode output mixture at a receiver when sender X pulses with
/// probability `alpha`, sender Y with probability `beta`, each pulse a
/// thermal state of mean `s`. Zero-weight combinations are omitted.
pub fn layer1_mode_distributions(
    p: &MacParams,
    alpha: f64,
    beta: f64,
    s: f64,
    receiver: Receiver,
    cutoff: usize,
) -> Result<Vec<ModeComponent>> {
    p.validate()?;
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::domain(format!("s must be >= 0, got {s}")));
    }
    let (k, background) = receiver.link(p);
    let mut out = Vec::with_capacity(4);
    for (x_on, wx) in [(false, 1.0 - alpha), (true, alpha)] {
        for (y_on, wy) in [(false, 1.0 - beta), (true, beta)] {
            let weight = wx * wy;
            if weight == 0.0 {
                continue;
            }
            let signal = if x_on { p.tau * s } else { 0.0 } + if y_on { (1.0 - p.tau) * s } else { 0.0 };
            let mean = k * signal + background;
            out.push(ModeComponent { x_on, y_on, weight, mean, dist: photon_distribution_thermal(mean, cutoff)? });
        }
    }
    Ok(out)
}

/// Classical relative entropy in nats; `p` must vanish wherever `q` does.
pub fn kl_divergence(p: &PhotonDistribution, q: &PhotonDistribution) -> Result<f64> {
    if p.probs.len() != q.probs.len() {
        return Err(Error::Shape("distributions have different lengths".into()));
    }
    let mut total = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::Support(format!("p = {a:e} where q = 0")));
        }
        total += a * (a / b).ln();
    }
    Ok(total)
}
