use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{digit, entropy_fock, phase_rotate_fock, stride, thermal_loss_fock, tmsv_fock, FockDensity, Numerics, C64};
use crate::error::{Error, Result};
use crate::mac::EffectiveChannel;

/// A Fock-oracle number together with the largest truncation tail met
/// while computing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    pub tail: f64,
}

/// Output (B, I) state for the unrotated signal.
pub fn conditional_state(eff: &EffectiveChannel, numerics: &Numerics) -> Result<FockDensity> {
    numerics.validate()?;
    let pair = tmsv_fock(eff.n_s, numerics.cutoff, numerics.tail_tol)?;
    thermal_loss_fock(&pair.to_density(), 0, eff.kappa_eff, eff.env_photons(), None, numerics.tail_tol)
}

/// Uniform mixture of the `psk_order` output states obtained by rotating
/// the TMSV signal by `2 pi k / L` before the channel.
pub fn psk_average_state(eff: &EffectiveChannel, psk_order: usize, numerics: &Numerics) -> Result<FockDensity> {
    numerics.validate()?;
    if psk_order == 0 {
        return Err(Error::domain("constellation size must be at least 1"));
    }
    let pair = tmsv_fock(eff.n_s, numerics.cutoff, numerics.tail_tol)?;
    let n = pair.amplitudes().len();
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for k in 0..psk_order {
        let theta = 2.0 * PI * k as f64 / psk_order as f64;
        let rotated = phase_rotate_fock(&pair, theta, 0)?.to_density();
        let out = thermal_loss_fock(&rotated, 0, eff.kappa_eff, eff.env_photons(), None, numerics.tail_tol)?;
        acc += out.matrix();
    }
    acc /= C64::new(psk_order as f64, 0.0);
    Ok(FockDensity::from_parts(numerics.cutoff, 2, acc))
}

/// Holevo information of the L-PSK ensemble over the effective channel:
/// entropy of the averaged (B, I) state minus the entropy of any single
/// member.
pub fn psk_ensemble_mi(eff: &EffectiveChannel, psk_order: usize, numerics: &Numerics) -> Result<OracleValue> {
    let avg = psk_average_state(eff, psk_order, numerics)?;
    let cond = conditional_state(eff, numerics)?;
    Ok(OracleValue { value: entropy_fock(&avg)? - entropy_fock(&cond)?, tail: avg.tail().max(cond.tail()) })
}

/// Average of `rho` over the rotations `exp(i 2 pi k n / L)` of one mode,
/// computed by discarding the coherences the average cancels: an entry
/// survives iff `2 (n - n')` is a multiple of `L`.
pub fn phase_average(rho: &FockDensity, mode: usize, psk_order: usize) -> Result<FockDensity> {
    if psk_order == 0 {
        return Err(Error::domain("constellation size must be at least 1"));
    }
    if mode >= rho.modes() {
        return Err(Error::Shape(format!("mode {mode} out of range for {} modes", rho.modes())));
    }
    let d = rho.cutoff();
    let st = stride(d, rho.modes(), mode);
    let m = rho.matrix();
    let n = m.nrows();
    let lo = psk_order as i64;
    let out = DMatrix::from_fn(n, n, |i, j| {
        let diff = digit(i, d, st) as i64 - digit(j, d, st) as i64;
        if (2 * diff).rem_euclid(lo) == 0 {
            m[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(FockDensity::from_parts(d, rho.modes(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{beamsplitter_fock, trace_distance_fock};

    fn eff(k: f64, nt: f64, ns: f64) -> EffectiveChannel {
        EffectiveChannel::new(k, nt, ns).unwrap()
    }

    fn num(d: usize) -> Numerics {
        Numerics::new(d, 1e-8).unwrap()
    }

    #[test]
    fn trivial_ensembles_carry_no_information() {
        let e = eff(0.25, 0.525, 0.1);
        assert!(psk_ensemble_mi(&e, 1, &num(20)).unwrap().value.abs() < 1e-12);
        // rotations by multiples of pi act trivially on exp(i 2 theta n)
        assert!(psk_ensemble_mi(&e, 2, &num(20)).unwrap().value.abs() < 1e-10);
        assert!(psk_ensemble_mi(&eff(0.25, 0.525, 0.0), 8, &num(20)).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn mask_average_equals_explicit_average() {
        let e = eff(0.3, 0.2, 0.2);
        let n = num(12);
        let cond = conditional_state(&e, &n).unwrap();
        for l in [1, 2, 3, 4, 8, 24] {
            let explicit = psk_average_state(&e, l, &n).unwrap();
            let masked = phase_average(&cond, 0, l).unwrap();
            assert!((explicit.matrix() - masked.matrix()).camax() < 1e-13, "L = {l}");
        }
    }

    #[test]
    fn idler_rotation_equals_signal_rotation() {
        let e = eff(0.3, 0.2, 0.2);
        let n = num(12);
        let cond = conditional_state(&e, &n).unwrap();
        let a = phase_average(&cond, 0, 8).unwrap();
        let b = phase_average(&cond, 1, 8).unwrap();
        assert!(trace_distance_fock(&a, &b).unwrap() < 1e-13);
        assert!((entropy_fock(&a).unwrap() - entropy_fock(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn information_grows_with_constellation_size() {
        let e = eff(0.25, 0.525, 0.1);
        let n = num(20);
        let mut last = -1.0;
        for l in [2, 4, 8, 16, 32, 64] {
            let v = psk_ensemble_mi(&e, l, &n).unwrap().value;
            assert!(v >= last - 1e-12, "L = {l}: {v} < {last}");
            last = v;
        }
        assert!(last > 0.0);
        // L >= 2d already reproduces the continuous average
        let v128 = psk_ensemble_mi(&e, 128, &n).unwrap().value;
        assert!((v128 - last).abs() < 1e-12);
    }

    #[test]
    fn zero_transmissivity_hides_the_phase() {
        let e = eff(0.0, 0.3, 0.2);
        assert!(psk_ensemble_mi(&e, 16, &num(20)).unwrap().value.abs() < 1e-10);
    }

    /// I(XY : B I_X I_Y) >= I(X : B I_X) + I(Y : B I_X I_Y | X), the second
    /// term being exact and the first reduced by discarding I_Y.
    #[test]
    fn chain_rule_lower_bound_holds() {
        let d = 8;
        let (tau, kappa, n_b, n_s, l) = (0.5, 0.5, 0.2, 0.2, 8);
        let tol = 1e-4;
        // modes: A_X, I_X, A_Y, I_Y
        let pair = tmsv_fock(n_s, d, tol).unwrap();
        let four = pair.kron(&pair).unwrap();
        let mixed = beamsplitter_fock(&four, 0, 2, tau).unwrap();
        assert!(mixed.tail() < 1e-4);
        let rho = mixed.to_density().partial_trace(&[0, 1, 3]).unwrap();
        let rho = thermal_loss_fock(&rho, 0, kappa, n_b, None, tol).unwrap();

        let s = |r: &FockDensity| entropy_fock(r).unwrap();
        let avg_y = phase_average(&rho, 2, l).unwrap();
        let avg_xy = phase_average(&avg_y, 1, l).unwrap();
        let joint = s(&avg_xy) - s(&rho);
        let given_x = s(&avg_y) - s(&rho);
        let bx = rho.partial_trace(&[0, 1]).unwrap();
        let only_x = s(&phase_average(&bx, 1, l).unwrap()) - s(&bx);
        assert!(only_x > 0.0 && given_x > 0.0);
        assert!(joint >= only_x + given_x - 1e-6, "{joint} < {only_x} + {given_x}");
    }
}
