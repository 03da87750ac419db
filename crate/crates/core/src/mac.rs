//! Covariance matrices of the two-sender entanglement-assisted MAC.
//!
//! Each sender holds a TMSV pair, keeps the idler and sends the signal. The
//! signals combine as `a = sqrt(tau) a_X + sqrt(1 - tau) a_Y`, then pass a
//! thermal beamsplitter: Bob sees `b = sqrt(kappa) a + sqrt(1 - kappa) e` and
//! the warden Willie sees `w = -sqrt(1 - kappa) a + sqrt(kappa) e`.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{schur_condition_heterodyne, CovarianceMatrix, GaussianState};

/// Channel triple `(tau, kappa, N_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacParams {
    pub tau: f64,
    pub kappa: f64,
    pub n_b: f64,
}

impl MacParams {
    pub fn new(tau: f64, kappa: f64, n_b: f64) -> Result<Self> {
        let p = Self { tau, kappa, n_b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::domain(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::domain(format!("kappa must lie in (0, 1), got {}", self.kappa)));
        }
        if !(self.n_b > 0.0 && self.n_b.is_finite()) {
            return Err(Error::domain(format!("n_b must be positive, got {}", self.n_b)));
        }
        Ok(())
    }

    /// Thermal noise reaching Bob, `(1 - kappa) N_B`.
    pub fn n_t(&self) -> f64 {
        (1.0 - self.kappa) * self.n_b
    }

    /// Mixing weight of a sender's signal in the combined mode.
    pub fn weight(&self, sender: Sender) -> f64 {
        match sender {
            Sender::X => self.tau,
            Sender::Y => 1.0 - self.tau,
        }
    }
}

/// Signal photon number and PSK constellation size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    pub n_s: f64,
    #[serde(default = "default_psk_order")]
    pub psk_order: usize,
}

fn default_psk_order() -> usize {
    64
}

impl ModulationConfig {
    pub fn new(n_s: f64, psk_order: usize) -> Result<Self> {
        let m = Self { n_s, psk_order };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_s >= 0.0 && self.n_s.is_finite()) {
            return Err(Error::domain(format!("n_s must be >= 0, got {}", self.n_s)));
        }
        if self.psk_order == 0 {
            return Err(Error::domain("psk_order must be at least 1"));
        }
        Ok(())
    }

    pub fn psk_is_power_of_two(&self) -> bool {
        self.psk_order.is_power_of_two()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sender {
    X,
    Y,
}

impl Sender {
    pub fn other(self) -> Self {
        match self {
            Sender::X => Sender::Y,
            Sender::Y => Sender::X,
        }
    }
}

/// Point-to-point reduction `(kappa_eff, N_T_eff, N_S)` of one sender's link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    pub kappa_eff: f64,
    pub n_t_eff: f64,
    pub n_s: f64,
}

impl EffectiveChannel {
    pub fn new(kappa_eff: f64, n_t_eff: f64, n_s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa_eff) {
            return Err(Error::domain(format!("kappa_eff must lie in [0, 1], got {kappa_eff}")));
        }
        if !(n_t_eff >= 0.0 && n_t_eff.is_finite()) {
            return Err(Error::domain(format!("n_t_eff must be >= 0, got {n_t_eff}")));
        }
        if !(n_s >= 0.0 && n_s.is_finite()) {
            return Err(Error::domain(format!("n_s must be >= 0, got {n_s}")));
        }
        Ok(Self { kappa_eff, n_t_eff, n_s })
    }

    /// Environment photon number of the equivalent thermal-loss channel,
    /// `N_T_eff / (1 - kappa_eff)`.
    pub fn env_photons(&self) -> f64 {
        if self.kappa_eff >= 1.0 {
            0.0
        } else {
            self.n_t_eff / (1.0 - self.kappa_eff)
        }
    }

    /// Two-mode (B, I) covariance of a TMSV signal sent through the
    /// effective channel after a rotation `theta`.
    pub fn cov(&self, theta: f64) -> CovarianceMatrix {
        let s = 2.0 * self.n_s + 1.0;
        let b = s * self.kappa_eff + 2.0 * self.n_t_eff + 1.0 - self.kappa_eff;
        let c = cq(self.n_s) * self.kappa_eff.sqrt();
        two_mode_block(b, s, c, theta)
    }
}

fn cq(n_s: f64) -> f64 {
    2.0 * (n_s * (n_s + 1.0)).sqrt()
}

/// `R(theta) = [[cos, sin], [sin, -cos]]`.
pub fn rotation_block(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, s, -c)
}

fn put_block(m: &mut DMatrix<f64>, i: usize, j: usize, block: &Matrix2<f64>) {
    m.fixed_view_mut::<2, 2>(2 * i, 2 * j).copy_from(block);
}

fn two_mode_block(a: f64, b: f64, c: f64, theta: f64) -> CovarianceMatrix {
    let mut m = DMatrix::zeros(4, 4);
    put_block(&mut m, 0, 0, &(Matrix2::identity() * a));
    put_block(&mut m, 1, 1, &(Matrix2::identity() * b));
    let r = rotation_block(theta) * c;
    put_block(&mut m, 0, 1, &r);
    put_block(&mut m, 1, 0, &r.transpose());
    CovarianceMatrix::from_symmetric(m)
}

/// TMSV covariance on (signal, idler).
pub fn tmsv_cov(n_s: f64) -> Result<CovarianceMatrix> {
    if !(n_s >= 0.0 && n_s.is_finite()) {
        return Err(Error::domain(format!("n_s must be >= 0, got {n_s}")));
    }
    Ok(two_mode_block(2.0 * n_s + 1.0, 2.0 * n_s + 1.0, cq(n_s), 0.0))
}

/// Three-mode receiver state on (output, I_X, I_Y) given output variance,
/// per-idler cross amplitudes and phases.
fn receiver_cov(out_var: f64, n_s: f64, cx: f64, cy: f64, theta: f64, phi: f64) -> CovarianceMatrix {
    let s = 2.0 * n_s + 1.0;
    let mut m = DMatrix::zeros(6, 6);
    put_block(&mut m, 0, 0, &(Matrix2::identity() * out_var));
    put_block(&mut m, 1, 1, &(Matrix2::identity() * s));
    put_block(&mut m, 2, 2, &(Matrix2::identity() * s));
    let rx = rotation_block(theta) * cx;
    let ry = rotation_block(phi) * cy;
    put_block(&mut m, 0, 1, &rx);
    put_block(&mut m, 1, 0, &rx.transpose());
    put_block(&mut m, 0, 2, &ry);
    put_block(&mut m, 2, 0, &ry.transpose());
    CovarianceMatrix::from_symmetric(m)
}

fn check(p: &MacParams, m: &ModulationConfig) -> Result<()> {
    p.validate()?;
    m.validate()
}

/// Bob's joint state on (B, I_X, I_Y) for phases `theta` (sender X) and `phi` (sender Y).
pub fn bob_joint_cov(p: &MacParams, m: &ModulationConfig, theta: f64, phi: f64) -> Result<CovarianceMatrix> {
    check(p, m)?;
    let s = 2.0 * m.n_s + 1.0;
    let k = p.kappa;
    let var = s * k + 2.0 * p.n_t() + 1.0 - k;
    let c = cq(m.n_s);
    Ok(receiver_cov(var, m.n_s, c * (k * p.tau).sqrt(), c * (k * (1.0 - p.tau)).sqrt(), theta, phi))
}

/// Willie's joint state on (W, I_X, I_Y).
pub fn willie_joint_cov(p: &MacParams, m: &ModulationConfig, theta: f64, phi: f64) -> Result<CovarianceMatrix> {
    check(p, m)?;
    let s = 2.0 * m.n_s + 1.0;
    let k = p.kappa;
    let var = s * (1.0 - k) + k * (2.0 * p.n_b + 1.0);
    let c = cq(m.n_s);
    Ok(receiver_cov(var, m.n_s, -c * ((1.0 - k) * p.tau).sqrt(), -c * ((1.0 - k) * (1.0 - p.tau)).sqrt(), theta, phi))
}

/// Bob's (B, I_sender) marginal without access to the other idler.
pub fn marginal_cov(p: &MacParams, m: &ModulationConfig, sender: Sender, theta: f64) -> Result<CovarianceMatrix> {
    let (t, f, idler) = match sender {
        Sender::X => (theta, 0.0, 1),
        Sender::Y => (0.0, theta, 2),
    };
    bob_joint_cov(p, m, t, f)?.select_modes(&[0, idler])
}

/// Bob's (B, I_sender) state after heterodyning the other sender's idler,
/// in closed form.
pub fn conditioned_cov(p: &MacParams, m: &ModulationConfig, sender: Sender, theta: f64) -> Result<CovarianceMatrix> {
    check(p, m)?;
    let s = 2.0 * m.n_s + 1.0;
    let k = p.kappa;
    let w = p.weight(sender);
    let c = cq(m.n_s);
    let var = s * k + 2.0 * p.n_t() + 1.0 - k - c * c * k * (1.0 - w) / (s + 1.0);
    Ok(two_mode_block(var, s, c * (k * w).sqrt(), theta))
}

/// The same conditioned state obtained from the generic Schur complement.
pub fn conditioned_cov_schur(
    p: &MacParams,
    m: &ModulationConfig,
    sender: Sender,
    theta: f64,
) -> Result<CovarianceMatrix> {
    let (t, f, measured) = match sender {
        Sender::X => (theta, 0.0, 2),
        Sender::Y => (0.0, theta, 1),
    };
    let joint = GaussianState::zero_mean(bob_joint_cov(p, m, t, f)?)?;
    let out = schur_condition_heterodyne(&joint, &[measured], &nalgebra::DVector::zeros(2))?;
    Ok(out.cov().clone())
}

/// Table-of-reductions entry for one sender. Conditioned channels are
/// defined by matching the B-block variance of [`conditioned_cov`].
pub fn effective_params(
    p: &MacParams,
    m: &ModulationConfig,
    sender: Sender,
    conditioned: bool,
) -> Result<EffectiveChannel> {
    check(p, m)?;
    let w = p.weight(sender);
    let kappa_eff = p.kappa * w;
    let n_t_eff = if conditioned {
        let s = 2.0 * m.n_s + 1.0;
        let var = conditioned_cov(p, m, sender, 0.0)?.entries()[(0, 0)];
        ((var - s * kappa_eff - 1.0 + kappa_eff) / 2.0).max(0.0)
    } else {
        p.n_t() + p.kappa * m.n_s * (1.0 - w)
    };
    EffectiveChannel::new(kappa_eff, n_t_eff, m.n_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{
        apply_gaussian_channel, beamsplitter_symplectic, embed_local, phase_rotation_symplectic, symplectic_eigenvalues,
    };
    use proptest::prelude::*;

    fn params(tau: f64, kappa: f64, n_b: f64) -> MacParams {
        MacParams::new(tau, kappa, n_b).unwrap()
    }

    fn modulation(n_s: f64) -> ModulationConfig {
        ModulationConfig::new(n_s, 64).unwrap()
    }

    /// Builds the receiver states by pushing TMSV pairs through the
    /// physical circuit: rotations, combiner, thermal beamsplitter.
    fn circuit(p: &MacParams, n_s: f64, theta: f64, phi: f64, willie: bool) -> CovarianceMatrix {
        // modes: A_X, I_X, A_Y, I_Y, E
        let pair = tmsv_cov(n_s).unwrap();
        let env = CovarianceMatrix::thermal(p.n_b).unwrap();
        let cov = pair.direct_sum(&pair).direct_sum(&env);
        let st = GaussianState::zero_mean(cov).unwrap();
        let rot_x = embed_local(5, &[0], &phase_rotation_symplectic(theta)).unwrap();
        let rot_y = embed_local(5, &[2], &phase_rotation_symplectic(phi)).unwrap();
        let mix = embed_local(5, &[0, 2], &beamsplitter_symplectic(p.tau).unwrap()).unwrap();
        let chan = embed_local(5, &[0, 4], &beamsplitter_symplectic(p.kappa).unwrap()).unwrap();
        let x = chan * mix * rot_y * rot_x;
        let out = apply_gaussian_channel(&st, &x, &DMatrix::zeros(10, 10)).unwrap();
        // Bob holds port 0 of the last beamsplitter, Willie port 1 (the E slot).
        let port = if willie { 4 } else { 0 };
        out.cov().select_modes(&[port, 1, 3]).unwrap()
    }

    #[test]
    fn tmsv_examples() {
        assert_eq!(tmsv_cov(0.0).unwrap(), CovarianceMatrix::identity(2));
        let t = tmsv_cov(1.0).unwrap();
        assert_eq!(t.entries()[(0, 0)], 3.0);
        assert!((t.entries()[(0, 2)] - 2.8284271).abs() < 1e-7);
        assert!((t.entries()[(1, 3)] + 2.8284271).abs() < 1e-7);
        for n in [0.0, 0.01, 1.0, 7.5] {
            assert!(symplectic_eigenvalues(&tmsv_cov(n).unwrap()).unwrap().is_pure());
        }
        assert!(tmsv_cov(-0.1).is_err());
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_block(0.0), Matrix2::new(1.0, 0.0, 0.0, -1.0));
        let r = rotation_block(std::f64::consts::FRAC_PI_2);
        assert!((r - Matrix2::new(0.0, 1.0, 1.0, 0.0)).amax() < 1e-15);
        let r = rotation_block(std::f64::consts::PI);
        assert!((r - Matrix2::new(-1.0, 0.0, 0.0, 1.0)).amax() < 1e-15);
        let r = rotation_block(0.37);
        assert!((r * r - Matrix2::identity()).amax() < 1e-15);
        assert!((r.determinant() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bob_examples() {
        let p = params(0.5, 0.5, 1.0);
        let c = bob_joint_cov(&p, &modulation(0.0), 0.0, 0.0).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0, 1.0, 1.0, 1.0, 1.0]));
        assert_eq!(c.entries(), &expect);
        let c = bob_joint_cov(&p, &modulation(1.0), 0.0, 0.0).unwrap();
        assert!((c.entries()[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn willie_examples() {
        let p = params(0.3, 0.4, 1.5);
        let c = willie_joint_cov(&p, &modulation(0.0), 0.0, 0.0).unwrap();
        assert!((c.entries()[(0, 0)] - (2.0 * 0.4 * 1.5 + 1.0)).abs() < 1e-15);
        let p = params(0.3, 1.0 - 1e-15, 1.5);
        let c = willie_joint_cov(&p, &modulation(0.7), 0.2, 0.1).unwrap();
        assert!((c.entries()[(0, 0)] - 4.0).abs() < 1e-12);
        assert!(c.entries().view((0, 2), (2, 4)).amax() < 1e-6);
    }

    #[test]
    fn willie_is_bob_with_kappa_swapped_up_to_sign() {
        let p = params(0.3, 0.35, 0.8);
        // kappa -> 1 - kappa with the same N_B maps Bob's background onto Willie's.
        let q = MacParams { kappa: 0.65, ..p };
        let m = modulation(0.4);
        let w = willie_joint_cov(&p, &m, 0.5, 1.1).unwrap();
        let b = bob_joint_cov(&q, &m, 0.5, 1.1).unwrap();
        let mut flip = DMatrix::identity(6, 6);
        flip[(0, 0)] = -1.0;
        flip[(1, 1)] = -1.0;
        let b_flipped = &flip * b.entries() * &flip;
        assert!((w.entries() - b_flipped).amax() < 1e-14);
    }

    #[test]
    fn conditioned_examples() {
        let p = params(1.0, 0.5, 1.0);
        let m = modulation(0.8);
        let c = conditioned_cov(&p, &m, Sender::X, 0.3).unwrap();
        let u = marginal_cov(&p, &m, Sender::X, 0.3).unwrap();
        assert!(c.max_abs_diff(&u) < 1e-15);

        let p = params(0.5, 0.5, 1.0);
        let c = conditioned_cov(&p, &modulation(0.0), Sender::Y, 0.0).unwrap();
        assert_eq!(c.entries(), &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0, 1.0, 1.0])));

        let m = modulation(1.0);
        let un = bob_joint_cov(&p, &m, 0.0, 0.0).unwrap().entries()[(0, 0)];
        let co = conditioned_cov(&p, &m, Sender::X, 0.0).unwrap().entries()[(0, 0)];
        assert!((un - co - 0.5).abs() < 1e-15);
        // B-block after conditioning is 2 N_S kappa tau + 2 N_T + 1
        assert!((co - (2.0 * 0.5 * 0.5 + 1.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn heterodyne_gain_matches_closed_form() {
        let p = params(0.5, 0.5, 1.0);
        let m = modulation(1.0);
        let joint = GaussianState::zero_mean(bob_joint_cov(&p, &m, 0.0, 0.0).unwrap()).unwrap();
        let y = nalgebra::DVector::from_vec(vec![1.0, 0.0]);
        let out = schur_condition_heterodyne(&joint, &[2], &y).unwrap();
        let k = 2.0 * (0.5f64 * 0.5 * 1.0 * 2.0).sqrt() / 4.0;
        assert!((k - 0.3535534).abs() < 1e-7);
        assert!((out.mean()[0] - k).abs() < 1e-15);
        assert!((out.cov().entries()[(0, 0)] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn effective_examples() {
        let p = params(1.0, 0.5, 1.0);
        let e = effective_params(&p, &modulation(0.3), Sender::X, false).unwrap();
        assert_eq!((e.kappa_eff, e.n_t_eff), (0.5, 0.5));

        let p = params(0.5, 0.5, 1.0);
        let e = effective_params(&p, &modulation(0.1), Sender::X, false).unwrap();
        assert!((e.kappa_eff - 0.25).abs() < 1e-15 && (e.n_t_eff - 0.525).abs() < 1e-15);
        let e = effective_params(&p, &modulation(0.1), Sender::X, true).unwrap();
        assert!((e.kappa_eff - 0.25).abs() < 1e-15 && (e.n_t_eff - 0.5).abs() < 1e-15);
    }

    #[test]
    fn printed_conditioned_row_disagrees_with_schur() {
        // The reduction row written as N_T + kappa N_S (1 - tau)(1 - 4(1+N_S)/(2+2N_S))
        // collapses to N_T - kappa N_S (1 - tau); the Schur complement gives N_T.
        let p = params(0.5, 0.5, 1.0);
        let n_s = 0.1;
        let printed = p.n_t() + p.kappa * n_s * (1.0 - p.tau) * (1.0 - 4.0 * (1.0 + n_s) / (2.0 + 2.0 * n_s));
        let e = effective_params(&p, &modulation(n_s), Sender::X, true).unwrap();
        assert!((printed - 0.475).abs() < 1e-15);
        assert!((e.n_t_eff - printed).abs() > 1e-2);
        let rebuilt_printed = EffectiveChannel { n_t_eff: printed, ..e }.cov(0.0);
        let schur = conditioned_cov_schur(&p, &modulation(n_s), Sender::X, 0.0).unwrap();
        assert!(rebuilt_printed.max_abs_diff(&schur) > 1e-2);
        assert!(e.cov(0.0).max_abs_diff(&schur) < 1e-12);
    }

    fn arb_params() -> impl Strategy<Value = (MacParams, ModulationConfig)> {
        (0.0..=1.0f64, 0.001..0.999f64, 0.001..10.0f64, 0.0..5.0f64)
            .prop_map(|(t, k, nb, ns)| (params(t, k, nb), modulation(ns)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn joint_states_are_physical((p, m) in arb_params(), th in -4.0..4.0f64, ph in -4.0..4.0f64) {
            prop_assert!(bob_joint_cov(&p, &m, th, ph).unwrap().is_physical());
            prop_assert!(willie_joint_cov(&p, &m, th, ph).unwrap().is_physical());
        }

        #[test]
        fn joint_states_match_circuit((p, m) in arb_params(), th in -4.0..4.0f64, ph in -4.0..4.0f64) {
            let b = bob_joint_cov(&p, &m, th, ph).unwrap();
            let w = willie_joint_cov(&p, &m, th, ph).unwrap();
            let tol = 1e-12 * (1.0 + m.n_s + p.n_b);
            prop_assert!(b.max_abs_diff(&circuit(&p, m.n_s, th, ph, false)) < tol);
            prop_assert!(w.max_abs_diff(&circuit(&p, m.n_s, th, ph, true)) < tol);
        }

        #[test]
        fn conditioned_matches_schur((p, m) in arb_params(), th in -4.0..4.0f64) {
            for sender in [Sender::X, Sender::Y] {
                let closed = conditioned_cov(&p, &m, sender, th).unwrap();
                let schur = conditioned_cov_schur(&p, &m, sender, th).unwrap();
                prop_assert!(closed.max_abs_diff(&schur) < 1e-12 * (1.0 + m.n_s + p.n_b));
            }
        }

        #[test]
        fn effective_round_trip((p, m) in arb_params(), th in -4.0..4.0f64) {
            for sender in [Sender::X, Sender::Y] {
                let tol = 1e-12 * (1.0 + m.n_s + p.n_b);
                let co = effective_params(&p, &m, sender, true).unwrap();
                prop_assert!(co.cov(th).max_abs_diff(&conditioned_cov(&p, &m, sender, th).unwrap()) < tol);
                prop_assert!((co.n_t_eff - p.n_t()).abs() < tol);
                let un = effective_params(&p, &m, sender, false).unwrap();
                prop_assert!(un.cov(th).max_abs_diff(&marginal_cov(&p, &m, sender, th).unwrap()) < tol);
                prop_assert!(co.n_t_eff <= un.n_t_eff + 1e-15);
            }
        }

        #[test]
        fn vacuum_signal_gives_thermal_outputs(p in (0.0..=1.0f64, 0.001..0.999f64, 0.001..10.0f64)
            .prop_map(|(t, k, nb)| params(t, k, nb))) {
            let m = modulation(0.0);
            let b = bob_joint_cov(&p, &m, 0.3, 0.4).unwrap();
            let w = willie_joint_cov(&p, &m, 0.3, 0.4).unwrap();
            let mut diag = vec![2.0 * p.n_t() + 1.0; 2];
            diag.extend([1.0; 4]);
            let eb = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
            diag[0] = 2.0 * p.kappa * p.n_b + 1.0;
            diag[1] = diag[0];
            let ew = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
            prop_assert!((b.entries() - eb).amax() < 1e-14);
            prop_assert!((w.entries() - ew).amax() < 1e-14);
        }
    }
}
