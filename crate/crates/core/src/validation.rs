//! Cross-checks between the closed forms and their independent oracles,
//! each reported with the measured discrepancy and the tolerance it is held to.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{entropy_fock, psk_ensemble_mi, thermal_loss_fock, tmsv_fock, FockDensity, Numerics, Receiver};
use crate::gaussian::{apply_gaussian_channel, entropy_from_cov, CovarianceMatrix, GaussianState};
use crate::io::ValidateConfig;
use crate::mac::{
    conditioned_cov, conditioned_cov_schur, effective_params, tmsv_cov, MacParams, ModulationConfig, Sender,
};
use crate::planner::{
    binomial_lower_tail, chernoff_truncation, covert_budget, q_func, q_inv, relent_exact, relent_leading,
    willie_tv_leading, willie_tv_mc, Marginal,
};
use crate::region::{conditional_entropy_term, psk_noise_condition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.to_string(), measured, tolerance, passed: measured <= tolerance, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Channel used by the fixed-point checks.
pub fn reference_channel() -> MacParams {
    MacParams { tau: 0.5, kappa: 0.5, n_b: 1.0 }
}

/// Pulse photon number at which Willie's leading bound equals `target`
/// for block length `n` with both senders pulsing at `alpha = beta`.
pub fn willie_tuned_s(target: f64, n: u64, alpha: f64, p: &MacParams) -> Result<f64> {
    let x = q_inv((1.0 - target) / 2.0)?;
    let w = p.kappa * p.n_b;
    Ok(x * 2.0 * (w * (1.0 + w)).sqrt() / ((n as f64).sqrt() * alpha * (1.0 - p.kappa)))
}

pub fn entropy_agreement() -> Result<Check> {
    let d = 40;
    let mut worst: f64 = 0.0;
    for n_s in [0.1, 0.5] {
        let thermal = FockDensity::thermal(n_s, d, 1e-12)?;
        worst = worst.max((entropy_fock(&thermal)? - entropy_from_cov(&CovarianceMatrix::thermal(n_s)?)?).abs());
        let reduced = tmsv_fock(n_s, d, 1e-12)?.to_density().partial_trace(&[0])?;
        let half = tmsv_cov(n_s)?.select_modes(&[0])?;
        worst = worst.max((entropy_fock(&reduced)? - entropy_from_cov(&half)?).abs());
    }
    Ok(Check::at_most("entropy_gaussian_vs_fock", worst, 1e-6, format!("cutoff {d}, n_s in {{0.1, 0.5}}")))
}

/// Closed-form conditioning against the generic Schur complement on random
/// channels, and the conditioned noise against `N_T`.
pub fn schur_consistency(draws: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cov_gap, mut noise_gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..draws {
        let p = MacParams {
            tau: rng.random_range(0.0..=1.0),
            kappa: rng.random_range(0.01..0.99),
            n_b: rng.random_range(0.01..=10.0),
        };
        let m = ModulationConfig { n_s: rng.random_range(0.0..=5.0), psk_order: 64 };
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        for s in [Sender::X, Sender::Y] {
            let a = conditioned_cov(&p, &m, s, theta)?;
            let b = conditioned_cov_schur(&p, &m, s, theta)?;
            cov_gap = cov_gap.max(a.max_abs_diff(&b));
            noise_gap = noise_gap.max((effective_params(&p, &m, s, true)?.n_t_eff - p.n_t()).abs());
        }
    }
    let p = reference_channel();
    let n_s = 0.1;
    let alternative = p.n_t() - p.kappa * n_s * (1.0 - p.tau);
    Ok(vec![
        Check::at_most("conditioned_cov_vs_schur", cov_gap, 1e-12, format!("{draws} random channels")),
        Check::at_most(
            "conditioned_noise_equals_n_t",
            noise_gap,
            1e-12,
            format!(
                "covariance matching gives N_T = {}; the form N_T - kappa N_S (1 - tau) would give {alternative} at n_s = {n_s}",
                p.n_t()
            ),
        ),
    ])
}

pub fn conditional_entropy_agreement() -> Result<Check> {
    let e = crate::io::fixture::golden_channel();
    let closed = conditional_entropy_term(&e).value;
    let direct = entropy_from_cov(&e.cov(0.0))?;
    Ok(Check::at_most(
        "conditional_entropy_vs_spectrum",
        (closed - direct).abs(),
        1e-10,
        format!("noise condition {}", if psk_noise_condition(&e) { "holds" } else { "fails" }),
    ))
}

pub fn fock_channel_moments() -> Result<Check> {
    let (k, n_b, n_s) = (0.6, 0.4, 0.3);
    let pair = tmsv_fock(n_s, 24, 1e-8)?.to_density();
    let out = thermal_loss_fock(&pair, 0, k, n_b, None, 1e-8)?;
    let (_, cov) = out.moments();
    let st = GaussianState::zero_mean(tmsv_cov(n_s)?)?;
    let mut x = DMatrix::<f64>::identity(4, 4);
    let mut y = DMatrix::<f64>::zeros(4, 4);
    for q in 0..2 {
        x[(q, q)] = k.sqrt();
        y[(q, q)] = (1.0 - k) * (2.0 * n_b + 1.0);
    }
    let g = apply_gaussian_channel(&st, &x, &y)?;
    Ok(Check::at_most("thermal_loss_moments", (cov - g.cov().entries()).amax(), 1e-6, "TMSV half through loss".into()))
}

pub fn phase_discretization() -> Result<Check> {
    let e = crate::io::fixture::golden_channel();
    let num = Numerics::new(24, 1e-8)?;
    let a = psk_ensemble_mi(&e, 64, &num)?;
    let b = psk_ensemble_mi(&e, 128, &num)?;
    Ok(Check::at_most(
        "psk_64_vs_128",
        (a.value - b.value).abs(),
        1e-6,
        format!("I = {} nats at L = 64, cutoff 24", a.value),
    ))
}

/// Leading-order first-layer divergence against the exact classical value
/// at `(alpha, beta, s) = (1e-3, 1e-3, 1e-2)` and at half that scale.
pub fn relent_agreement() -> Result<Vec<Check>> {
    let p = reference_channel();
    let at = |sc: f64| -> Result<(f64, f64)> {
        let (a, s) = (1e-3 * sc, 1e-2 * sc);
        let e = relent_exact(&p, a, a, s, Receiver::Bob, Marginal::Joint)?;
        let l = relent_leading(&p, a, a, s, Receiver::Bob, Marginal::Joint)?;
        Ok((((e.d - l.d) / e.d).abs(), e.v / e.d))
    };
    let (big, _) = at(1.0)?;
    let (small, ratio) = at(0.5)?;
    Ok(vec![
        Check::at_most(
            "relent_leading_vs_exact",
            big,
            0.1,
            format!("relative error {big:.4e}, halved scale {small:.4e}"),
        ),
        Check {
            name: "relent_error_shrinks".into(),
            measured: small - big,
            tolerance: 0.0,
            passed: small < big,
            detail: "error at half scale minus error at full scale".into(),
        },
        Check::at_most("relent_v_over_d", (ratio - 2.0).abs() / 2.0, 0.1, format!("V/D = {ratio:.6}")),
    ])
}

/// Monte Carlo total variation at `n = 1e4` where the leading bound is 0.30.
pub fn willie_agreement(samples: u64, seed: u64) -> Result<Check> {
    let p = reference_channel();
    let (n, alpha) = (10_000, 0.5);
    let s = willie_tuned_s(0.30, n, alpha, &p)?;
    let lead = willie_tv_leading(n, alpha, alpha, s, &p)?;
    let mc = willie_tv_mc(n, alpha, alpha, s, &p, samples, Some(seed))?;
    Ok(Check::at_most(
        "willie_tv_mc_vs_leading",
        (mc.estimate - lead).abs(),
        0.05,
        format!("leading {lead:.6}, estimate {:.6} +- {:.2e} from {samples} samples", mc.estimate, mc.std_error),
    ))
}

pub fn q_inv_round_trip() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for k in 1..100 {
        let pr = k as f64 / 100.0;
        worst = worst.max((q_func(q_inv(pr)?) - pr).abs());
    }
    Ok(Check::at_most("q_inv_round_trip", worst, 1e-12, "99-point grid".into()))
}

pub fn budget_scaling() -> Result<Check> {
    let p = reference_channel();
    let mut worst: f64 = 0.0;
    for n in [1u64, 10, 1_000, 1_000_000, 123_456_789] {
        let a = covert_budget(4 * n, 0.1, &p)?;
        let b = covert_budget(n, 0.1, &p)? / 2.0;
        worst = worst.max(((a - b) / b).abs());
    }
    Ok(Check::at_most("budget_inverse_sqrt_scaling", worst, 1e-15, "budget(4n) vs budget(n) / 2".into()))
}

pub fn chernoff_dominates() -> Result<Check> {
    let mut worst = f64::NEG_INFINITY;
    for n in [10u64, 100, 1000] {
        for alpha in [0.01, 0.1, 0.5] {
            for mu in [0.2, 0.5, 0.8] {
                let exact = 2.0 * binomial_lower_tail(n, alpha, mu)?;
                worst = worst.max(exact - chernoff_truncation(n, alpha, alpha, mu)?);
            }
        }
    }
    Ok(Check::at_most("binomial_tail_below_chernoff", worst, 0.0, "exact tail minus bound, worst case".into()))
}

/// The full suite in a fixed order.
pub fn run_suite(cfg: &ValidateConfig, seed: u64) -> Result<ValidationReport> {
    let mut checks = vec![entropy_agreement()?, conditional_entropy_agreement()?];
    checks.extend(schur_consistency(cfg.schur_draws, seed)?);
    checks.push(fock_channel_moments()?);
    if cfg.fock_mi {
        checks.push(phase_discretization()?);
    }
    checks.extend(relent_agreement()?);
    checks.push(willie_agreement(cfg.mc_samples, seed)?);
    checks.push(q_inv_round_trip()?);
    checks.push(budget_scaling()?);
    checks.push(chernoff_dominates()?);
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass() {
        for c in [
            entropy_agreement(),
            conditional_entropy_agreement(),
            fock_channel_moments(),
            q_inv_round_trip(),
            budget_scaling(),
            chernoff_dominates(),
        ] {
            let c = c.unwrap();
            assert!(c.passed, "{c:?}");
        }
        for c in schur_consistency(20, 1).unwrap().into_iter().chain(relent_agreement().unwrap()) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn tuned_pulse_hits_the_target() {
        let p = reference_channel();
        let s = willie_tuned_s(0.3, 10_000, 0.5, &p).unwrap();
        assert!((willie_tv_leading(10_000, 0.5, 0.5, s, &p).unwrap() - 0.3).abs() < 1e-12);
    }
}
