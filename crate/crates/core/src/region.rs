//! Achievable rate regions of the two-sender channel.
//!
//! Each constraint is the Holevo information of a uniformly phase-modulated
//! TMSV over an effective point-to-point channel. The averaged-state entropy
//! comes from the Fock oracle and the conditional entropy from the Gaussian
//! symplectic spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{entropy_fock, psk_average_state, Numerics};
use crate::gaussian::g_unchecked;
use crate::mac::{effective_params, EffectiveChannel, MacParams, ModulationConfig, Sender};

/// Mutual information values down to this far below zero are rounding noise.
const NEG_MI_TOL: f64 = 1e-9;

/// `g(mu_+ - 1/2) + g(mu_- - 1/2)` with the symplectic data behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEntropy {
    pub value: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// Whether `N_T > max{kappa N_S - 1, (-(1 + 2 kappa N_S) + sqrt(4 kappa N_S^2 + 4 kappa N_S + 1)) / 2}`,
    /// the noise condition under which PSK is known to converge to the
    /// continuous-phase value.
    pub in_validity_region: bool,
}

pub fn psk_noise_condition(eff: &EffectiveChannel) -> bool {
    let (k, nt, ns) = (eff.kappa_eff, eff.n_t_eff, eff.n_s);
    let b = (-(1.0 + 2.0 * k * ns) + (4.0 * k * ns * ns + 4.0 * k * ns + 1.0).sqrt()) / 2.0;
    nt > (k * ns - 1.0).max(b)
}

pub fn conditional_entropy_term(eff: &EffectiveChannel) -> ConditionalEntropy {
    let (k, nt, ns) = (eff.kappa_eff, eff.n_t_eff, eff.n_s);
    let root = ((nt + (1.0 + k) * ns + 1.0).powi(2) - 4.0 * k * ns * (ns + 1.0)).max(0.0).sqrt();
    let shift = nt + (k - 1.0) * ns;
    let mu_plus = 0.5 * (root + shift);
    let mu_minus = 0.5 * (root - shift);
    let g = |mu: f64| g_unchecked((mu - 0.5).max(0.0));
    ConditionalEntropy {
        value: g(mu_plus) + g(mu_minus),
        mu_plus,
        mu_minus,
        in_validity_region: psk_noise_condition(eff),
    }
}

/// Leading logarithmic terms of a known closed-form lower bound for the
/// continuous-phase information, with its hypergeometric corrections left
/// out. Partial expression, not a bound. `None` when `N_T <= kappa` or
/// `N_S = 0`, where the logarithms are undefined.
pub fn partial_closed_form_terms(eff: &EffectiveChannel) -> Option<f64> {
    let (k, nt, ns) = (eff.kappa_eff, eff.n_t_eff, eff.n_s);
    if nt <= k || ns <= 0.0 {
        return None;
    }
    let cond = conditional_entropy_term(eff).value;
    Some(
        ((ns + 1.0) * nt * (nt - k + 1.0) / (nt - k)).ln()
            + ns * ((ns + 1.0) / ns).ln()
            + ns * (nt / (nt - k)).ln()
            + (k * ns + nt) * ((nt - k + 1.0) / (nt - k)).ln()
            - cond,
    )
}

/// Phase-modulated information together with its numerical provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMi {
    pub value: f64,
    pub tail: f64,
    pub conditional: ConditionalEntropy,
}

/// `S(averaged BI state) - S(conditional BI state)`; the first entropy from
/// the Fock oracle averaged over `psk_order` phases, the second closed form.
/// With `psk_order >= 2 * cutoff` the average equals the continuous one.
pub fn continuous_phase_mi(eff: &EffectiveChannel, numerics: &Numerics, psk_order: usize) -> Result<PhaseMi> {
    let conditional = conditional_entropy_term(eff);
    if eff.kappa_eff == 0.0 || eff.n_s == 0.0 {
        return Ok(PhaseMi { value: 0.0, tail: 0.0, conditional });
    }
    let avg = psk_average_state(eff, psk_order, numerics)?;
    let mut value = entropy_fock(&avg)? - conditional.value;
    if value < 0.0 {
        if value < -NEG_MI_TOL {
            return Err(Error::Internal(format!("negative mutual information {value:e}; raise the cutoff")));
        }
        value = 0.0;
    }
    Ok(PhaseMi { value, tail: avg.tail(), conditional })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    XBound,
    YBound,
    SumBound,
}

impl ConstraintKind {
    pub fn label(self) -> &'static str {
        match self {
            ConstraintKind::XBound => "x_bound",
            ConstraintKind::YBound => "y_bound",
            ConstraintKind::SumBound => "sum_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub value: f64,
    /// False when another constraint makes this one redundant.
    pub active: bool,
}

/// Which successive-decoding order attains the sum bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumBranch {
    /// `I(X : B I_X) + I(Y : B I_Y | heterodyned I_X)`
    XUnconditioned,
    /// `I(Y : B I_Y) + I(X : B I_X | heterodyned I_Y)`
    YUnconditioned,
    /// No sum constraint (rectangular regions).
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    /// Counterclockwise from the origin, duplicates removed.
    pub vertices: Vec<(f64, f64)>,
    pub constraints: Vec<Constraint>,
    pub sum_branch: SumBranch,
    /// The two candidates of the sum bound, `[X unconditioned, Y unconditioned]`.
    pub sum_candidates: [f64; 2],
}

impl RateRegion {
    /// Intersection of `R_X <= x`, `R_Y <= y`, `R_X + R_Y <= sum` with the
    /// nonnegative quadrant.
    pub fn from_bounds(
        x: f64,
        y: f64,
        sum: Option<f64>,
        sum_branch: SumBranch,
        sum_candidates: [f64; 2],
    ) -> Result<Self> {
        for v in [Some(x), Some(y), sum].into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("region bounds must be finite and >= 0, got {v}")));
            }
        }
        let s = sum.unwrap_or(f64::INFINITY);
        let xr = x.min(s);
        let yt = y.min(s);
        let raw = [(0.0, 0.0), (xr, 0.0), (xr, y.min(s - xr)), (x.min(s - yt), yt), (0.0, yt)];
        let mut vertices: Vec<(f64, f64)> = Vec::with_capacity(5);
        for v in raw {
            if vertices.last() != Some(&v) && !(vertices.len() > 1 && vertices[0] == v) {
                vertices.push(v);
            }
        }
        while vertices.len() > 1 && vertices.last() == vertices.first() {
            vertices.pop();
        }
        let mut constraints = vec![
            Constraint { kind: ConstraintKind::XBound, value: x, active: x < s },
            Constraint { kind: ConstraintKind::YBound, value: y, active: y < s },
        ];
        if let Some(sv) = sum {
            constraints.push(Constraint { kind: ConstraintKind::SumBound, value: sv, active: sv < x + y });
        }
        Ok(Self { vertices, constraints, sum_branch, sum_candidates })
    }

    pub fn bound(&self, kind: ConstraintKind) -> Option<f64> {
        self.constraints.iter().find(|c| c.kind == kind).map(|c| c.value)
    }

    /// Points along the outer boundary from the R_X axis to the R_Y axis,
    /// `per_edge` samples per edge (endpoints included once).
    pub fn boundary(&self, per_edge: usize) -> Vec<(f64, f64)> {
        let outer: Vec<(f64, f64)> = self.vertices.iter().copied().skip(1).collect();
        if outer.len() < 2 || per_edge == 0 {
            return outer;
        }
        let mut pts = vec![outer[0]];
        for w in outer.windows(2) {
            let (a, b) = (w[0], w[1]);
            for i in 1..=per_edge {
                let t = i as f64 / per_edge as f64;
                pts.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        }
        pts
    }
}

/// The four mutual-information terms feeding the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiTerms {
    pub x_conditioned: PhaseMi,
    pub y_conditioned: PhaseMi,
    pub x_unconditioned: PhaseMi,
    pub y_unconditioned: PhaseMi,
}

impl MiTerms {
    pub fn all(&self) -> [&PhaseMi; 4] {
        [&self.x_conditioned, &self.y_conditioned, &self.x_unconditioned, &self.y_unconditioned]
    }

    pub fn max_tail(&self) -> f64 {
        self.all().iter().map(|m| m.tail).fold(0.0, f64::max)
    }

    pub fn all_in_validity_region(&self) -> bool {
        self.all().iter().all(|m| m.conditional.in_validity_region)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region: RateRegion,
    pub terms: MiTerms,
    pub effective: [EffectiveChannel; 4],
}

/// Region cut out by the per-sender conditioned bounds and the larger of the
/// two successive-decoding sum bounds.
pub fn achievable_region(p: &MacParams, m: &ModulationConfig, numerics: &Numerics) -> Result<RegionReport> {
    p.validate()?;
    m.validate()?;
    numerics.validate()?;
    let eff = |s, c| effective_params(p, m, s, c);
    let effective = [eff(Sender::X, true)?, eff(Sender::Y, true)?, eff(Sender::X, false)?, eff(Sender::Y, false)?];
    let mi = |e: &EffectiveChannel| continuous_phase_mi(e, numerics, m.psk_order);
    let terms = MiTerms {
        x_conditioned: mi(&effective[0])?,
        y_conditioned: mi(&effective[1])?,
        x_unconditioned: mi(&effective[2])?,
        y_unconditioned: mi(&effective[3])?,
    };
    let a = terms.x_unconditioned.value + terms.y_conditioned.value;
    let b = terms.y_unconditioned.value + terms.x_conditioned.value;
    let (sum, branch) = if a >= b { (a, SumBranch::XUnconditioned) } else { (b, SumBranch::YUnconditioned) };
    if sum < a || sum < b {
        return Err(Error::Internal("sum bound below one of its candidates".into()));
    }
    let region =
        RateRegion::from_bounds(terms.x_conditioned.value, terms.y_conditioned.value, Some(sum), branch, [a, b])?;
    Ok(RegionReport { region, terms, effective })
}

/// Small-signal limit of the region: the rectangle
/// `R_X <= -kappa tau s ln s / (1 + (1 - kappa) N_B)`, and likewise for Y with `1 - tau`.
pub fn covert_rectangle(p: &MacParams, s: f64) -> Result<RateRegion> {
    p.validate()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("signal photon number must lie in (0, 1), got {s}")));
    }
    let (rx, ry) = rectangle_bounds(p, s);
    RateRegion::from_bounds(rx, ry, None, SumBranch::None, [rx + ry, rx + ry])
}

fn rectangle_bounds(p: &MacParams, s: f64) -> (f64, f64) {
    let c = -p.kappa / (1.0 + (1.0 - p.kappa) * p.n_b) * s * s.ln();
    (c * p.tau, c * (1.0 - p.tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::entropy_from_cov;
    use proptest::prelude::*;

    fn eff(k: f64, nt: f64, ns: f64) -> EffectiveChannel {
        EffectiveChannel::new(k, nt, ns).unwrap()
    }

    #[test]
    fn conditional_entropy_examples() {
        let c = conditional_entropy_term(&eff(0.4, 0.7, 0.0));
        assert!((c.mu_plus - 1.2).abs() < 1e-15 && (c.mu_minus - 0.5).abs() < 1e-15);
        assert!((c.value - g_unchecked(0.7)).abs() < 1e-15);
        let c = conditional_entropy_term(&eff(1.0, 0.0, 0.6));
        assert!(c.value.abs() < 1e-12);
        let e = eff(0.25, 0.525, 0.1);
        let c = conditional_entropy_term(&e);
        let direct = entropy_from_cov(&e.cov(0.3)).unwrap();
        assert!((c.value - direct).abs() < 1e-10);
    }

    #[test]
    fn validity_flag() {
        assert!(psk_noise_condition(&eff(0.25, 0.525, 0.1)));
        assert!(!psk_noise_condition(&eff(0.9, 0.0, 0.5)));
        assert!(!conditional_entropy_term(&eff(0.9, 0.0, 0.5)).in_validity_region);
    }

    #[test]
    fn continuous_phase_trivial_cases() {
        let n = Numerics::new(20, 1e-8).unwrap();
        assert_eq!(continuous_phase_mi(&eff(0.25, 0.5, 0.0), &n, 64).unwrap().value, 0.0);
        assert_eq!(continuous_phase_mi(&eff(0.0, 0.5, 0.1), &n, 64).unwrap().value, 0.0);
    }

    #[test]
    fn continuous_phase_agrees_with_pure_fock_difference() {
        let e = eff(0.25, 0.525, 0.1);
        let mut gaps = Vec::new();
        // the gap is the entropy carried by the discarded environment tail
        for tol in [1e-8, 1e-10, 1e-12] {
            let n = Numerics::new(32, tol).unwrap();
            let a = continuous_phase_mi(&e, &n, 64).unwrap();
            let b = crate::fock::psk_ensemble_mi(&e, 64, &n).unwrap();
            assert!(a.value > 0.0);
            gaps.push((a.value - b.value).abs());
        }
        assert!(gaps[0] < 1e-6 && gaps[1] < gaps[0] && gaps[2] < 1e-9, "{gaps:?}");
    }

    #[test]
    fn region_geometry() {
        let r = RateRegion::from_bounds(1.0, 2.0, Some(2.5), SumBranch::XUnconditioned, [2.5, 2.0]).unwrap();
        assert_eq!(r.vertices, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.5), (0.5, 2.0), (0.0, 2.0)]);
        let r = RateRegion::from_bounds(1.0, 2.0, Some(3.5), SumBranch::XUnconditioned, [3.5, 3.0]).unwrap();
        assert_eq!(r.vertices, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 2.0), (0.0, 2.0)]);
        assert!(!r.constraints[2].active);
        let r = RateRegion::from_bounds(0.0, 0.0, Some(0.0), SumBranch::XUnconditioned, [0.0, 0.0]).unwrap();
        assert_eq!(r.vertices, vec![(0.0, 0.0)]);
        let r = RateRegion::from_bounds(1.0, 0.0, Some(1.0), SumBranch::XUnconditioned, [1.0, 1.0]).unwrap();
        assert_eq!(r.vertices, vec![(0.0, 0.0), (1.0, 0.0)]);
        assert!(RateRegion::from_bounds(-1.0, 0.0, None, SumBranch::None, [0.0, 0.0]).is_err());
        let pts =
            RateRegion::from_bounds(1.0, 2.0, Some(2.5), SumBranch::XUnconditioned, [2.5, 2.0]).unwrap().boundary(2);
        assert_eq!(pts.len(), 7);
        assert_eq!(pts[0], (1.0, 0.0));
        assert_eq!(*pts.last().unwrap(), (0.0, 2.0));
    }

    #[test]
    fn rectangle_examples() {
        let p = MacParams::new(0.5, 0.5, 1.0).unwrap();
        let r = covert_rectangle(&p, 0.01).unwrap();
        let x = r.bound(ConstraintKind::XBound).unwrap();
        assert!((x - 0.01 * 100f64.ln() / 6.0).abs() < 1e-15);
        assert!((x - 0.0076753).abs() < 1e-7);
        let r = covert_rectangle(&MacParams::new(0.0, 0.5, 1.0).unwrap(), 0.01).unwrap();
        assert_eq!(r.bound(ConstraintKind::XBound), Some(0.0));
        let solo = covert_rectangle(&MacParams::new(1.0, 0.3, 2.0).unwrap(), 0.05).unwrap();
        let expect = -0.3 / (1.0 + 0.7 * 2.0) * 0.05 * 0.05f64.ln();
        assert!((solo.bound(ConstraintKind::XBound).unwrap() - expect).abs() < 1e-15);
        assert!(covert_rectangle(&p, 1.0).is_err());
        assert!(covert_rectangle(&p, 0.0).is_err());
    }

    #[test]
    fn region_trivial_cases() {
        let n = Numerics::new(16, 1e-8).unwrap();
        let p = MacParams::new(0.5, 0.5, 0.4).unwrap();
        let r = achievable_region(&p, &ModulationConfig::new(0.0, 64).unwrap(), &n).unwrap();
        assert_eq!(r.region.vertices, vec![(0.0, 0.0)]);
        let p = MacParams::new(1.0, 0.5, 0.4).unwrap();
        let r = achievable_region(&p, &ModulationConfig::new(0.1, 64).unwrap(), &n).unwrap();
        assert_eq!(r.region.bound(ConstraintKind::YBound), Some(0.0));
        assert!(r.region.vertices.iter().all(|v| v.1 == 0.0));
        assert!(r.region.vertices.len() == 2);
    }

    #[test]
    fn partial_terms_need_noisy_channel() {
        assert!(partial_closed_form_terms(&eff(0.5, 0.2, 0.1)).is_none());
        assert!(partial_closed_form_terms(&eff(0.2, 0.5, 0.1)).unwrap().is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn conditioning_never_hurts(tau in 0.05..0.95f64, kappa in 0.1..0.9f64, n_b in 0.05..0.6f64, n_s in 0.01..0.15f64) {
            let p = MacParams::new(tau, kappa, n_b).unwrap();
            let m = ModulationConfig::new(n_s, 32).unwrap();
            let n = Numerics::new(16, 1e-6).unwrap();
            for s in [Sender::X, Sender::Y] {
                let c = continuous_phase_mi(&effective_params(&p, &m, s, true).unwrap(), &n, 32).unwrap().value;
                let u = continuous_phase_mi(&effective_params(&p, &m, s, false).unwrap(), &n, 32).unwrap().value;
                prop_assert!(c >= u - 1e-9);
            }
        }

        #[test]
        fn gaussian_conditional_entropy_matches_spectrum(k in 0.0..=1.0f64, nt in 0.0..5.0f64, ns in 0.0..5.0f64) {
            let e = eff(k, nt, ns);
            let direct = entropy_from_cov(&e.cov(0.0)).unwrap();
            prop_assert!((conditional_entropy_term(&e).value - direct).abs() < 1e-9);
        }
    }
}
