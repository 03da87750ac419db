use nalgebra::{DMatrix, DVector};

use super::{digit, geometric_cutoff, stride, FockDensity, FockVector, C64, MAX_ENV_CUTOFF};
use crate::error::{Error, Result};

/// Fock matrix elements of the two-mode beamsplitter with transmissivity `t`,
/// `U = exp(theta (a^dag e - a e^dag))` with `cos(theta) = sqrt(t)`, so that
/// `U^dag a U = sqrt(t) a + sqrt(1 - t) e`.
///
/// Photon number is conserved; block `N` acts on `|n, N - n>` and is the
/// exponential of the tridiagonal hopping generator restricted to that block.
#[derive(Debug, Clone)]
pub struct BeamsplitterTable {
    blocks: Vec<DMatrix<f64>>,
}

impl BeamsplitterTable {
    pub fn new(t: f64, max_total: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("transmissivity must lie in [0, 1], got {t}")));
        }
        let theta = t.sqrt().acos();
        let blocks = (0..=max_total)
            .map(|n| {
                let mut g = DMatrix::zeros(n + 1, n + 1);
                for k in 0..n {
                    let amp = (((k + 1) * (n - k)) as f64).sqrt();
                    g[(k + 1, k)] = amp;
                    g[(k, k + 1)] = -amp;
                }
                (g * theta).exp()
            })
            .collect();
        Ok(Self { blocks })
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    /// `<k, N-k| U |a, N-a>`.
    #[inline]
    pub fn get(&self, total: usize, out: usize, input: usize) -> f64 {
        self.blocks[total][(out, input)]
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }
}

/// Applies the beamsplitter unitary to two modes of a pure state. Output
/// levels beyond the cutoff are discarded and show up in the tail.
pub fn beamsplitter_fock(state: &FockVector, mode_a: usize, mode_b: usize, t: f64) -> Result<FockVector> {
    let m = state.modes();
    if mode_a >= m || mode_b >= m || mode_a == mode_b {
        return Err(Error::Shape(format!("invalid beamsplitter modes ({mode_a}, {mode_b}) for {m} modes")));
    }
    let d = state.cutoff();
    let table = BeamsplitterTable::new(t, 2 * d - 2)?;
    let (sa, sb) = (stride(d, m, mode_a), stride(d, m, mode_b));
    let amps = state.amplitudes();
    let mut out = DVector::zeros(amps.len());
    for (i, amp) in amps.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let a = digit(i, d, sa);
        let b = digit(i, d, sb);
        let base = i - a * sa - b * sb;
        let n = a + b;
        for k in n.saturating_sub(d - 1)..=n.min(d - 1) {
            out[base + k * sa + (n - k) * sb] += amp * table.get(n, k, a);
        }
    }
    Ok(FockVector::from_parts(d, m, out))
}

/// Mixes `mode` of `rho` with a single-mode ancilla `env` (given as its
/// nonzero entries) on a beamsplitter and traces the ancilla port out.
fn mix_and_trace(
    rho: &FockDensity,
    mode: usize,
    env: &[(usize, usize, C64)],
    env_cutoff: usize,
    t: f64,
) -> Result<DMatrix<C64>> {
    let d = rho.cutoff();
    let st = stride(d, rho.modes(), mode);
    let table = BeamsplitterTable::new(t, d + env_cutoff - 2)?;
    let mat = rho.matrix();
    let n = mat.nrows();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let a2 = digit(j, d, st);
        let base_j = j - a2 * st;
        for i in 0..n {
            let r = mat[(i, j)];
            if r.norm_sqr() == 0.0 {
                continue;
            }
            let a1 = digit(i, d, st);
            let base_i = i - a1 * st;
            for &(e1, e2, s) in env {
                let w = r * s;
                let (n1, n2) = (a1 + e1, a2 + e2);
                let lo = n1.max(n2).saturating_sub(d - 1);
                for traced in lo..=n1.min(n2) {
                    let (k1, k2) = (n1 - traced, n2 - traced);
                    let c = table.get(n1, k1, a1) * table.get(n2, k2, a2);
                    out[(base_i + k1 * st, base_j + k2 * st)] += w * c;
                }
            }
        }
    }
    Ok(out)
}

fn check_trace(what: &str, before: f64, after: f64, tail_tol: f64, mean_out: f64) -> Result<()> {
    let lost = before - after;
    if lost > 2.0 * tail_tol {
        return Err(Error::Truncation {
            what: what.into(),
            tail: lost,
            tol: 2.0 * tail_tol,
            required: geometric_cutoff(mean_out / (mean_out + 1.0), tail_tol),
        });
    }
    Ok(())
}

fn mean_photons(rho: &FockDensity, mode: usize) -> Result<f64> {
    Ok(rho.photon_probs(mode)?.iter().enumerate().map(|(k, p)| k as f64 * p).sum())
}

/// Thermal-loss channel of transmissivity `kappa` and environment photon
/// number `n_b` acting on `mode`.
///
/// With `env_cutoff = None` the environment is truncated at the smallest
/// level whose thermal tail is at most `tail_tol`. Fails if the trace drops
/// by more than `2 tail_tol`.
pub fn thermal_loss_fock(
    rho: &FockDensity,
    mode: usize,
    kappa: f64,
    n_b: f64,
    env_cutoff: Option<usize>,
    tail_tol: f64,
) -> Result<FockDensity> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::domain(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    if !(n_b >= 0.0 && n_b.is_finite()) {
        return Err(Error::domain(format!("n_b must be >= 0, got {n_b}")));
    }
    if mode >= rho.modes() {
        return Err(Error::Shape(format!("mode {mode} out of range for {} modes", rho.modes())));
    }
    let ratio = n_b / (n_b + 1.0);
    let needed = geometric_cutoff(ratio, tail_tol);
    let d_env = env_cutoff.unwrap_or(needed);
    let env_tail = ratio.powi(d_env as i32);
    if env_tail > tail_tol || d_env > MAX_ENV_CUTOFF {
        return Err(Error::Truncation {
            what: "thermal environment".into(),
            tail: env_tail,
            tol: tail_tol,
            required: needed,
        });
    }
    let env: Vec<(usize, usize, C64)> = (0..d_env)
        .map(|e| (e, e, C64::new(ratio.powi(e as i32) / (n_b + 1.0), 0.0)))
        .filter(|x| x.2.re > 0.0)
        .collect();
    let n_in = mean_photons(rho, mode)?;
    let out = FockDensity::from_parts(rho.cutoff(), rho.modes(), mix_and_trace(rho, mode, &env, d_env, kappa)?);
    check_trace("thermal loss output", rho.trace(), out.trace(), tail_tol, kappa * n_in + (1.0 - kappa) * n_b)?;
    Ok(out)
}

/// Combines two single-mode states on a beamsplitter of transmissivity
/// `tau` and keeps the first output port.
pub fn mac_mix_fock(rho_x: &FockDensity, rho_y: &FockDensity, tau: f64, tail_tol: f64) -> Result<FockDensity> {
    if rho_x.modes() != 1 || rho_y.modes() != 1 {
        return Err(Error::Shape("mac_mix_fock takes single-mode states".into()));
    }
    if rho_x.cutoff() != rho_y.cutoff() {
        return Err(Error::Shape("cutoffs differ".into()));
    }
    let d = rho_y.cutoff();
    let m = rho_y.matrix();
    let env: Vec<(usize, usize, C64)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| m[(i, j)].norm_sqr() > 0.0)
        .map(|(i, j)| (i, j, m[(i, j)]))
        .collect();
    let out = FockDensity::from_parts(d, 1, mix_and_trace(rho_x, 0, &env, d, tau)?);
    let mean = tau * mean_photons(rho_x, 0)? + (1.0 - tau) * mean_photons(rho_y, 0)?;
    check_trace("combiner output", rho_x.trace() * rho_y.trace(), out.trace(), tail_tol, mean)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{photon_distribution_thermal, tmsv_fock, trace_distance_fock};
    use crate::gaussian::{apply_gaussian_channel, CovarianceMatrix, GaussianState};
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn table_is_unitary_and_matches_heisenberg_map() {
        let t = 0.37;
        let table = BeamsplitterTable::new(t, 30).unwrap();
        for n in [0, 1, 5, 30] {
            let u = table.block(n);
            assert!((u.transpose() * u - DMatrix::identity(n + 1, n + 1)).amax() < 1e-12);
        }
        // one photon in a: amplitude sqrt(t) to stay, magnitude sqrt(1-t) to move
        assert!((table.get(1, 1, 1) - t.sqrt()).abs() < 1e-14);
        assert!((table.get(1, 0, 1).abs() - (1.0 - t).sqrt()).abs() < 1e-14);
        let id = BeamsplitterTable::new(1.0, 10).unwrap();
        for n in 0..=10 {
            assert!((id.block(n) - DMatrix::identity(n + 1, n + 1)).amax() < 1e-15);
        }
    }

    #[test]
    fn beamsplitter_on_vectors_conserves_norm() {
        let v = tmsv_fock(0.2, 10, 1e-6).unwrap().kron(&tmsv_fock(0.3, 10, 1e-5).unwrap()).unwrap();
        let out = beamsplitter_fock(&v, 0, 2, 0.4).unwrap();
        assert!((out.norm_sqr() - v.norm_sqr()).abs() < 1e-6);
        assert!(beamsplitter_fock(&v, 1, 1, 0.4).is_err());
    }

    #[test]
    fn loss_examples() {
        let th = FockDensity::thermal(0.3, 20, 1e-8).unwrap();
        let out = thermal_loss_fock(&th, 0, 1.0, 0.7, None, 1e-8).unwrap();
        assert!(trace_distance_fock(&out, &th).unwrap() < 1e-8);

        let vac = FockDensity::diagonal(&photon_distribution_thermal(0.0, 4).unwrap());
        let out = thermal_loss_fock(&vac, 0, 0.3, 0.0, None, 1e-8).unwrap();
        assert!((out.matrix() - vac.matrix()).camax() < 1e-15);

        let one = FockVector::basis(4, &[1]).unwrap().to_density();
        let k = 0.3;
        let out = thermal_loss_fock(&one, 0, k, 0.0, None, 1e-8).unwrap();
        let mut expect = DMatrix::zeros(4, 4);
        expect[(0, 0)] = c(1.0 - k);
        expect[(1, 1)] = c(k);
        assert!((out.matrix() - expect).camax() < 1e-14);
    }

    #[test]
    fn loss_truncation_is_reported() {
        let th = FockDensity::thermal(0.1, 12, 1e-8).unwrap();
        let err = thermal_loss_fock(&th, 0, 0.5, 1.0, Some(5), 1e-8).unwrap_err();
        assert!(matches!(err, Error::Truncation { required: 27, .. }), "{err:?}");
        // a hot environment overflows the output cutoff
        let err = thermal_loss_fock(&th, 0, 0.5, 3.0, None, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn loss_moments_match_gaussian_channel() {
        let k: f64 = 0.6;
        let n_b = 0.4;
        let id = DMatrix::<f64>::identity(2, 2);
        let x = &id * k.sqrt();
        let y = &id * ((1.0 - k) * (2.0 * n_b + 1.0));

        let alpha = C64::new(0.6, 0.25);
        let coh = FockVector::coherent(40, alpha).unwrap().to_density();
        let out = thermal_loss_fock(&coh, 0, k, n_b, None, 1e-8).unwrap();
        let (mean, cov) = out.moments();
        let st =
            GaussianState::new(DVector::from_vec(vec![2.0 * alpha.re, 2.0 * alpha.im]), CovarianceMatrix::identity(1))
                .unwrap();
        let g = apply_gaussian_channel(&st, &x, &y).unwrap();
        assert!((mean - g.mean()).amax() < 1e-6);
        assert!((cov - g.cov().entries()).amax() < 1e-6);

        // loss on half of a TMSV pair, compared over all four quadratures
        let pair = tmsv_fock(0.3, 24, 1e-8).unwrap().to_density();
        let out = thermal_loss_fock(&pair, 0, k, n_b, None, 1e-8).unwrap();
        let (_, cov) = out.moments();
        let st = GaussianState::zero_mean(crate::mac::tmsv_cov(0.3).unwrap()).unwrap();
        let mut x4 = DMatrix::<f64>::identity(4, 4);
        let mut y4 = DMatrix::<f64>::zeros(4, 4);
        for q in 0..2 {
            x4[(q, q)] = k.sqrt();
            y4[(q, q)] = (1.0 - k) * (2.0 * n_b + 1.0);
        }
        let g = apply_gaussian_channel(&st, &x4, &y4).unwrap();
        assert!((cov - g.cov().entries()).amax() < 1e-6);
    }

    #[test]
    fn mix_examples() {
        let d = 16;
        let rx = FockVector::coherent(d, C64::new(0.4, 0.1)).unwrap().to_density();
        let ry = FockDensity::thermal(0.2, d, 1e-8).unwrap();
        let out = mac_mix_fock(&rx, &ry, 1.0, 1e-8).unwrap();
        assert!(trace_distance_fock(&out, &rx).unwrap() < 1e-10);
        let out = mac_mix_fock(&rx, &ry, 0.0, 1e-8).unwrap();
        assert!(trace_distance_fock(&out, &ry).unwrap() < 1e-10);
        let vac = FockVector::basis(d, &[0]).unwrap().to_density();
        for tau in [0.0, 0.3, 0.8] {
            let out = mac_mix_fock(&vac, &vac, tau, 1e-8).unwrap();
            assert!((out.matrix() - vac.matrix()).camax() < 1e-15);
        }
    }

    #[test]
    fn mixing_coherent_states_adds_amplitudes() {
        let d = 30;
        let (ax, ay) = (C64::new(0.5, 0.0), C64::new(0.0, 0.4));
        let tau: f64 = 0.3;
        let rx = FockVector::coherent(d, ax).unwrap().to_density();
        let ry = FockVector::coherent(d, ay).unwrap().to_density();
        let out = mac_mix_fock(&rx, &ry, tau, 1e-8).unwrap();
        let a = ax * tau.sqrt() + ay * (1.0 - tau).sqrt();
        let expect = FockVector::coherent(d, a).unwrap().to_density();
        assert!(trace_distance_fock(&out, &expect).unwrap() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn loss_of_thermal_is_thermal(n in 0.0..0.5f64, k in 0.0..=1.0f64, nb in 0.0..0.5f64) {
            let th = FockDensity::thermal(n, 40, 1e-8).unwrap();
            let out = thermal_loss_fock(&th, 0, k, nb, None, 1e-8).unwrap();
            let expect = FockDensity::thermal(k * n + (1.0 - k) * nb, 40, 1e-6).unwrap();
            prop_assert!(trace_distance_fock(&out, &expect).unwrap() < 1e-7);
            prop_assert!(th.trace() - out.trace() <= 2e-8);
        }
    }
}
