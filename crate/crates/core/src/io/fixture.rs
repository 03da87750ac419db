//! Golden values for the phase-modulated information (at twice the working
//! cutoff) and the rate region. `golden_record` recomputes them;
//! `fixtures/golden.rec` holds the frozen copy.

use crate::error::Result;
use crate::fock::Numerics;
use crate::mac::{EffectiveChannel, MacParams, ModulationConfig};
use crate::region::{achievable_region, continuous_phase_mi, ConstraintKind};

use super::Record;

pub const GOLDEN_FILE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden.rec");

pub fn golden_channel() -> EffectiveChannel {
    EffectiveChannel { kappa_eff: 0.25, n_t_eff: 0.525, n_s: 0.1 }
}

pub fn golden_mac() -> (MacParams, ModulationConfig) {
    (MacParams { tau: 0.5, kappa: 0.5, n_b: 1.0 }, ModulationConfig { n_s: 0.1, psk_order: 64 })
}

pub fn golden_numerics() -> Numerics {
    Numerics { cutoff: 24, tail_tol: 1e-8 }
}

pub fn golden_record() -> Result<Record> {
    let num = golden_numerics();
    let mut r = Record::new();
    r.push("", "version", crate::VERSION)?;
    r.push("", "cutoff", num.cutoff)?;
    r.push("", "tail_tol", num.tail_tol)?;

    let e = golden_channel();
    let oracle = Numerics { cutoff: 2 * num.cutoff, ..num };
    let mi = continuous_phase_mi(&e, &oracle, 64)?;
    r.push("phase_mi", "cutoff", oracle.cutoff)?;
    r.push("phase_mi", "kappa_eff", e.kappa_eff)?;
    r.push("phase_mi", "n_t_eff", e.n_t_eff)?;
    r.push("phase_mi", "n_s", e.n_s)?;
    r.push("phase_mi", "psk_order", 64)?;
    r.push("phase_mi", "value", mi.value)?;
    r.push("phase_mi", "conditional_entropy", mi.conditional.value)?;
    r.push("phase_mi", "tail", mi.tail)?;

    let (p, m) = golden_mac();
    let rep = achievable_region(&p, &m, &num)?;
    r.push("region", "tau", p.tau)?;
    r.push("region", "kappa", p.kappa)?;
    r.push("region", "n_b", p.n_b)?;
    r.push("region", "n_s", m.n_s)?;
    for c in &rep.region.constraints {
        r.push("region", c.kind.label(), c.value)?;
    }
    r.push("region", "x_unconditioned", rep.terms.x_unconditioned.value)?;
    r.push("region", "y_unconditioned", rep.terms.y_unconditioned.value)?;
    let sum_active = rep.region.constraints.iter().any(|c| c.kind == ConstraintKind::SumBound && c.active);
    r.push("region", "sum_active", sum_active)?;
    r.push("region", "vertices", rep.region.vertices.len())?;
    Ok(r)
}
