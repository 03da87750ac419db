use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::mac::MacParams;

use super::RelEntStats;

/// Standard normal upper tail.
pub fn q_func(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// The `z` with `Q(z) = p`, by bisection on `Q` itself.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("q_inv needs p in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q_func(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // either endpoint may be the closer one once the bracket is one ulp wide
    Ok(if (q_func(lo) - p).abs() <= (q_func(hi) - p).abs() { lo } else { hi })
}

/// `2 sqrt(kappa N_B (1 + kappa N_B)) / (1 - kappa) * Q^{-1}((1 - delta) / 2)`;
/// the budget is this constant over `sqrt(n)`.
pub fn covert_budget_constant(delta: f64, p: &MacParams) -> Result<f64> {
    p.validate()?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::domain(format!("delta must lie in [0, 1), got {delta}")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let w = p.kappa * p.n_b;
    Ok(2.0 * (w * (1.0 + w)).sqrt() / (1.0 - p.kappa) * q_inv((1.0 - delta) / 2.0)?)
}

/// Largest `(alpha tau + beta (1 - tau)) s` Willie tolerates at block length `n`.
pub fn covert_budget(n: u64, delta: f64, p: &MacParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("block length must be at least 1"));
    }
    Ok(covert_budget_constant(delta, p)? / (n as f64).sqrt())
}

/// Signal energy per slot seen through the combiner, `(alpha tau + beta (1 - tau)) s`.
pub fn budget_load(alpha: f64, beta: f64, s: f64, p: &MacParams) -> f64 {
    (alpha * p.tau + beta * (1.0 - p.tau)) * s
}

/// The two sender contributions `(alpha tau s, beta (1 - tau) s)` to the load.
pub fn budget_terms(alpha: f64, beta: f64, s: f64, p: &MacParams) -> (f64, f64) {
    (alpha * p.tau * s, beta * (1.0 - p.tau) * s)
}

pub fn within_budget(alpha: f64, beta: f64, s: f64, budget: f64, p: &MacParams) -> bool {
    budget_load(alpha, beta, s, p) <= budget
}

/// `2 e^{-mu^2 n alpha / 2} + 2 e^{-mu^2 n beta / 2}`.
pub fn chernoff_truncation(n: u64, alpha: f64, beta: f64, mu_bar: f64) -> Result<f64> {
    if !(mu_bar > 0.0 && mu_bar < 1.0) {
        return Err(Error::domain(format!("mu_bar must lie in (0, 1), got {mu_bar}")));
    }
    let e = |a: f64| 2.0 * (-0.5 * mu_bar * mu_bar * n as f64 * a).exp();
    Ok(e(alpha) + e(beta))
}

/// `P(Bin(n, alpha) < (1 - mu_bar) n alpha)`, summed exactly in log space.
pub fn binomial_lower_tail(n: u64, alpha: f64, mu_bar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if !(mu_bar > 0.0 && mu_bar < 1.0) {
        return Err(Error::domain(format!("mu_bar must lie in (0, 1), got {mu_bar}")));
    }
    let threshold = (1.0 - mu_bar) * n as f64 * alpha;
    if alpha == 0.0 || threshold <= 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(if (n as f64) < threshold { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    let ln_norm = libm::lgamma(nf + 1.0);
    let total: f64 = (0..=n)
        .take_while(|&k| (k as f64) < threshold)
        .map(|k| {
            let kf = k as f64;
            (ln_norm - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0)
                + kf * alpha.ln()
                + (nf - kf) * (-alpha).ln_1p())
            .exp()
        })
        .sum();
    Ok(total.min(1.0))
}

/// `n D - sqrt(n V) Q^{-1}(eps^2)`.
pub fn second_order_rate(n: u64, stats: &RelEntStats, eps: f64) -> Result<f64> {
    second_order(n, stats, eps, -1.0)
}

/// `n D + sqrt(n V) Q^{-1}(delta^2)`, the smooth max-divergence direction.
pub fn second_order_dmax(n: u64, stats: &RelEntStats, delta: f64) -> Result<f64> {
    second_order(n, stats, delta, 1.0)
}

fn second_order(n: u64, stats: &RelEntStats, eps: f64, sign: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    if !(stats.d.is_finite() && stats.v.is_finite() && stats.v >= 0.0) {
        return Err(Error::domain("relative entropy statistics must be finite with v >= 0"));
    }
    let nf = n as f64;
    let spread = (nf * stats.v).sqrt();
    if spread == 0.0 {
        return Ok(nf * stats.d);
    }
    Ok(nf * stats.d + sign * spread * q_inv(eps * eps)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> MacParams {
        MacParams::new(0.5, 0.5, 1.0).unwrap()
    }

    #[test]
    fn q_inv_values() {
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
        assert!((q_inv(0.1586553).unwrap() - 1.0).abs() < 1e-6);
        assert!((q_inv(0.45).unwrap() - 0.125661).abs() < 1e-6);
        assert!(q_inv(0.0).is_err() && q_inv(1.0).is_err() && q_inv(f64::NAN).is_err());
        for k in 1..100 {
            let pr = k as f64 / 100.0;
            assert!((q_func(q_inv(pr).unwrap()) - pr).abs() <= 1e-12);
        }
        for pr in [1e-10, 1e-6, 1.0 - 1e-9] {
            let z = q_inv(pr).unwrap();
            assert!(((q_func(z) - pr) / pr).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_examples() {
        let b = covert_budget(1_000_000, 0.1, &p()).unwrap();
        let expect = 2.0 * 0.75f64.sqrt() / 0.5 * q_inv(0.45).unwrap() * 1e-3;
        assert!((b - expect).abs() < 1e-18);
        assert!((b - 4.35303e-4).abs() < 1e-9);
        assert_eq!(covert_budget(1000, 0.0, &p()).unwrap(), 0.0);
        assert!(covert_budget(1000, 1e-9, &p()).unwrap() < 1e-9);
        assert!(covert_budget(1000, 1.0, &p()).is_err());
        assert!(covert_budget(0, 0.1, &p()).is_err());
        for n in [1u64, 7, 1000, 123_456_789] {
            assert_eq!(covert_budget(4 * n, 0.1, &p()).unwrap(), covert_budget(n, 0.1, &p()).unwrap() / 2.0);
        }
    }

    #[test]
    fn feasibility_frontier_is_a_line() {
        let q = MacParams::new(0.3, 0.5, 1.0).unwrap();
        let (s, b) = (0.02, covert_budget(10_000, 0.1, &q).unwrap());
        for i in 0..1000 {
            let a = (i % 40) as f64 / 39.0 * 0.3;
            let be = (i / 40) as f64 / 24.0 * 0.3;
            let closed = a * q.tau + be * (1.0 - q.tau) <= b / s;
            let frontier_beta = (b / s - a * q.tau) / (1.0 - q.tau);
            assert_eq!(within_budget(a, be, s, b, &q), closed);
            if (be - frontier_beta).abs() > 1e-12 {
                assert_eq!(closed, be < frontier_beta);
            }
        }
    }

    #[test]
    fn more_active_sender_binds() {
        for n in [1e4f64, 1e6, 1e8] {
            let (a, b) = budget_terms(n.powf(-0.4), n.powf(-0.2), n.powf(-0.25), &p());
            assert!(b > a);
            let (a2, b2) = budget_terms((100.0 * n).powf(-0.4), (100.0 * n).powf(-0.2), 1.0, &p());
            assert!(b2 / a2 > b / a);
        }
    }

    #[test]
    fn chernoff_examples() {
        let c = chernoff_truncation(10_000, 1e-2, 1e-2, 0.5).unwrap();
        assert!((c - 4.0 * (-12.5f64).exp()).abs() < 1e-20);
        assert!((c - 1.49066e-5).abs() < 1e-10);
        assert!((chernoff_truncation(100, 0.5, 0.5, 1e-9).unwrap() - 4.0).abs() < 1e-12);
        assert!(chernoff_truncation(100, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn exact_tail_is_below_chernoff() {
        for n in [10u64, 50, 100, 400, 1000] {
            for alpha in [0.01, 0.05, 0.2, 0.5, 0.9] {
                for mu in [0.1, 0.3, 0.5, 0.8] {
                    let exact = binomial_lower_tail(n, alpha, mu).unwrap();
                    let single = (-0.5 * mu * mu * n as f64 * alpha).exp();
                    assert!(exact <= single + 1e-15, "n={n} a={alpha} mu={mu}: {exact} > {single}");
                    let both = 2.0 * exact;
                    assert!(both <= chernoff_truncation(n, alpha, alpha, mu).unwrap());
                }
            }
        }
        // direct sum for a case small enough to enumerate by hand
        let t = binomial_lower_tail(4, 0.5, 0.25).unwrap();
        assert!((t - 5.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn second_order_examples() {
        let st = RelEntStats { d: 8.3333e-9, v: 1.6667e-8, r_order: String::new() };
        assert!((second_order_rate(1_000_000, &st, 0.5f64.sqrt()).unwrap() - 1e6 * st.d).abs() < 1e-15);
        let zero_v = RelEntStats { v: 0.0, ..st.clone() };
        assert_eq!(second_order_rate(1_000_000, &zero_v, 0.3).unwrap(), 1e6 * st.d);
        let r = second_order_rate(1_000_000, &st, 0.1f64.sqrt()).unwrap();
        let expect = 8.3333e-3 - (1.6667e-2f64).sqrt() * q_inv(0.1).unwrap();
        assert!((r - expect).abs() < 1e-15);
        assert!((r - -0.1571160).abs() < 1e-6);
        let up = second_order_dmax(1_000_000, &st, 0.1f64.sqrt()).unwrap();
        assert!((up - (8.3333e-3 + (1.6667e-2f64).sqrt() * q_inv(0.1).unwrap())).abs() < 1e-15);
    }
}
