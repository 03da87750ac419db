//! Willie's view of the first layer: the leading-order detection bound and a
//! Monte Carlo estimate of the exact n-mode total variation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{layer1_mode_distributions, Receiver};
use crate::mac::MacParams;

use super::qfunc::q_func;

/// Samples drawn from one random stream.
pub const MC_CHUNK: u64 = 4096;
const CATEGORY_TAIL: f64 = 1e-18;
const MAX_CATEGORIES: usize = 20_000;

/// Argument of the Q-function in Willie's bound,
/// `sqrt(n) (alpha tau + beta (1 - tau)) (1 - kappa) s / (2 sqrt(kappa N_B (1 + kappa N_B)))`.
pub fn willie_tv_argument(n: u64, alpha: f64, beta: f64, s: f64, p: &MacParams) -> f64 {
    let w = p.kappa * p.n_b;
    (n as f64).sqrt() * (alpha * p.tau + beta * (1.0 - p.tau)) * (1.0 - p.kappa) * s / (2.0 * (w * (1.0 + w)).sqrt())
}

/// `1 - 2 Q(argument)`, the leading term of the trace distance between
/// Willie's n-mode state and `thermal(kappa N_B)^n`.
pub fn willie_tv_leading(n: u64, alpha: f64, beta: f64, s: f64, p: &MacParams) -> Result<f64> {
    p.validate()?;
    if n == 0 {
        return Err(Error::domain("block length must be at least 1"));
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::domain(format!("s must be finite and >= 0, got {s}")));
    }
    Ok((1.0 - 2.0 * q_func(willie_tv_argument(n, alpha, beta, s, p))).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Samples per hypothesis.
    pub samples: u64,
}

/// Per-mode laws under both hypotheses on a common finite alphabet, the
/// last letter collecting everything at or above the cutoff.
struct Alphabet {
    signal: Vec<f64>,
    idle: Vec<f64>,
    llr: Vec<f64>,
}

impl Alphabet {
    fn build(p: &MacParams, alpha: f64, beta: f64, s: f64) -> Result<Self> {
        let (k, bg) = Receiver::Willie.link(p);
        let top = k * s + bg;
        let ratio = top / (top + 1.0);
        let cutoff = crate::fock::geometric_cutoff(ratio, CATEGORY_TAIL).max(2);
        if cutoff > MAX_CATEGORIES {
            return Err(Error::Truncation {
                what: "Willie photon alphabet".into(),
                tail: ratio.powi(MAX_CATEGORIES as i32),
                tol: CATEGORY_TAIL,
                required: cutoff,
            });
        }
        let comps = layer1_mode_distributions(p, alpha, beta, s, Receiver::Willie, cutoff)?;
        let mut signal: Vec<f64> =
            (0..cutoff).map(|j| comps.iter().map(|c| c.weight * c.dist.probs()[j]).sum()).collect();
        let geometric_tail = |mean: f64| (mean / (mean + 1.0)).powi(cutoff as i32);
        signal.push(comps.iter().map(|c| c.weight * geometric_tail(c.mean)).sum());
        let mut idle: Vec<f64> = crate::fock::photon_distribution_thermal(bg, cutoff)?.probs().to_vec();
        idle.push(geometric_tail(bg));
        let llr =
            signal.iter().zip(&idle).map(|(&a, &b)| if a > 0.0 && b > 0.0 { (a / b).ln() } else { 0.0 }).collect();
        Ok(Self { signal, idle, llr })
    }

    /// Log-likelihood ratio of one multinomial draw of `n` modes from `probs`.
    fn draw_llr(&self, probs: &[f64], n: u64, rng: &mut ChaCha8Rng) -> f64 {
        let mut left = n;
        let mut mass = 1.0;
        let mut total = 0.0;
        for (j, &pj) in probs.iter().enumerate() {
            if left == 0 {
                break;
            }
            let count = if j + 1 == probs.len() || pj >= mass {
                left
            } else {
                let q = (pj / mass).clamp(0.0, 1.0);
                Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0)
            };
            total += count as f64 * self.llr[j];
            left -= count;
            mass -= pj;
        }
        total
    }
}

/// Monte Carlo estimate of `TV(P^n, Q^n)` with `P` Willie's per-mode mixture
/// and `Q = thermal(kappa N_B)`, via `TV = P(A) - Q(A)` on the event that the
/// log-likelihood ratio is positive. Sample `i` comes from the ChaCha8
/// stream `2 * (i / MC_CHUNK) + h` of `seed`, `h` naming the hypothesis, so
/// totals do not depend on how chunks are spread over threads.
pub fn willie_tv_mc(
    n: u64,
    alpha: f64,
    beta: f64,
    s: f64,
    p: &MacParams,
    samples: u64,
    seed: Option<u64>,
) -> Result<McEstimate> {
    let seed = seed.ok_or_else(|| Error::Config("willie_tv_mc needs a seed".into()))?;
    willie_tv_leading(n, alpha, beta, s, p)?;
    if samples == 0 {
        return Err(Error::domain("samples must be positive"));
    }
    let alphabet = Alphabet::build(p, alpha, beta, s)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let count = |probs: &[f64], hypothesis: u64| -> u64 {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2 * c + hypothesis);
                let size = MC_CHUNK.min(samples - c * MC_CHUNK);
                (0..size).filter(|_| alphabet.draw_llr(probs, n, &mut rng) > 0.0).count() as u64
            })
            .sum()
    };
    let hits_p = count(&alphabet.signal, 0);
    let hits_q = count(&alphabet.idle, 1);
    let m = samples as f64;
    let (pa, qa) = (hits_p as f64 / m, hits_q as f64 / m);
    Ok(McEstimate { estimate: pa - qa, std_error: ((pa * (1.0 - pa) + qa * (1.0 - qa)) / m).sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::q_inv;

    fn p() -> MacParams {
        MacParams::new(0.5, 0.5, 1.0).unwrap()
    }

    #[test]
    fn leading_examples() {
        assert_eq!(willie_tv_leading(10_000, 0.0, 0.0, 0.1, &p()).unwrap(), 0.0);
        // pick alpha s so that the argument equals q_inv(0.45)
        let target = q_inv(0.45).unwrap();
        let scale = 2.0 * 0.75f64.sqrt() * target / (100.0 * 0.5);
        let v = willie_tv_leading(10_000, 1.0, 1.0, scale, &p()).unwrap();
        assert!((v - 0.1).abs() < 1e-12);
        let mut last = 0.0;
        for n in [1u64, 10, 100, 1000, 10_000, 100_000] {
            let v = willie_tv_leading(n, 0.1, 0.2, 0.05, &p()).unwrap();
            assert!(v >= last && (0.0..=1.0).contains(&v));
            last = v;
        }
    }

    #[test]
    fn leading_is_monotone_in_each_argument() {
        let base = (1000u64, 0.1, 0.2, 0.05);
        let v0 = willie_tv_leading(base.0, base.1, base.2, base.3, &p()).unwrap();
        assert!(willie_tv_leading(base.0, 0.2, base.2, base.3, &p()).unwrap() >= v0);
        assert!(willie_tv_leading(base.0, base.1, 0.3, base.3, &p()).unwrap() >= v0);
        assert!(willie_tv_leading(base.0, base.1, base.2, 0.06, &p()).unwrap() >= v0);
    }

    #[test]
    fn alphabet_is_normalized() {
        let a = Alphabet::build(&p(), 0.3, 0.2, 0.4).unwrap();
        assert!((a.signal.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((a.idle.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn seed_is_required() {
        assert!(matches!(willie_tv_mc(100, 0.1, 0.1, 0.1, &p(), 10, None), Err(Error::Config(_))));
    }

    #[test]
    fn silent_senders_are_invisible() {
        let e = willie_tv_mc(1000, 0.3, 0.3, 0.0, &p(), 20_000, Some(7)).unwrap();
        assert!(e.estimate.abs() <= 3.0 * e.std_error.max(1e-12), "{e:?}");
    }

    #[test]
    fn reproducible_and_scaling() {
        let a = willie_tv_mc(500, 0.5, 0.5, 0.05, &p(), 10_000, Some(11)).unwrap();
        let b = willie_tv_mc(500, 0.5, 0.5, 0.05, &p(), 10_000, Some(11)).unwrap();
        assert_eq!(a, b);
        let c = willie_tv_mc(500, 0.5, 0.5, 0.05, &p(), 20_000, Some(11)).unwrap();
        let ratio = c.std_error / a.std_error;
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn thread_count_does_not_change_the_estimate() {
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| willie_tv_mc(300, 0.4, 0.2, 0.1, &p(), 3 * MC_CHUNK + 17, Some(5)).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
