//! TOML run configuration. Unknown keys are rejected at every level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Numerics;
use crate::mac::{MacParams, ModulationConfig};
use crate::planner::{PlanInputs, ScalingInputs};

/// Largest sweep grid accepted.
pub const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every stochastic step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub channel: MacParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<ModulationConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectangle: Option<RectangleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanInputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingInputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub willie: Option<WillieConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleConfig {
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub n: u64,
    pub delta: f64,
    /// Optional operating point to test against the budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WillieConfig {
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    /// Monte Carlo samples per hypothesis; 0 skips the simulation.
    #[serde(default)]
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    Region,
    Rectangle,
    Budget,
    Plan,
    WillieTv,
    WillieMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Tau,
    Kappa,
    NB,
    NS,
    S,
    Alpha,
    Beta,
    N,
    Delta,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Tau => "tau",
            SweepParam::Kappa => "kappa",
            SweepParam::NB => "n_b",
            SweepParam::NS => "n_s",
            SweepParam::S => "s",
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::N => "n",
            SweepParam::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: AxisScale,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.scale {
                    AxisScale::Linear => self.start + t * (self.stop - self.start),
                    AxisScale::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub quantity: SweepQuantity,
    pub axes: Vec<Axis>,
}

impl SweepConfig {
    /// Cartesian grid, last axis fastest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &self.axes {
            let vals = axis.values();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_mc_samples")]
    pub mc_samples: u64,
    #[serde(default = "default_schur_draws")]
    pub schur_draws: usize,
    /// Include the phase-averaged information check (a few seconds).
    #[serde(default = "default_true")]
    pub fock_mi: bool,
}

fn default_mc_samples() -> u64 {
    200_000
}

fn default_schur_draws() -> usize {
    100
}

fn default_true() -> bool {
    true
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { mc_samples: default_mc_samples(), schur_draws: default_schur_draws(), fock_mi: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Report information quantities in bits instead of nats.
    #[serde(default)]
    pub bits: bool,
    /// Extra boundary samples per region edge; 0 lists vertices only.
    #[serde(default)]
    pub boundary_per_edge: usize,
}

fn field(name: &str, e: Error) -> Error {
    match e {
        Error::Infeasible { .. } => e,
        other => Error::Config(format!("{name}: {other}")),
    }
}

fn need<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("missing [{name}] section")))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("config serialization: {e}")))
    }

    /// Every section present, checked against its domain.
    pub fn validate(&self) -> Result<()> {
        self.channel.validate().map_err(|e| field("channel", e))?;
        if let Some(m) = &self.modulation {
            m.validate().map_err(|e| field("modulation", e))?;
        }
        self.numerics.validate().map_err(|e| field("numerics", e))?;
        if let Some(r) = &self.rectangle {
            if !(r.s > 0.0 && r.s < 1.0) {
                return Err(Error::Config(format!("rectangle.s must lie in (0, 1), got {}", r.s)));
            }
        }
        if let Some(b) = &self.budget {
            if b.n == 0 {
                return Err(Error::Config("budget.n must be at least 1".into()));
            }
            if !(0.0..1.0).contains(&b.delta) {
                return Err(Error::Config(format!("budget.delta must lie in [0, 1), got {}", b.delta)));
            }
            let point = [b.alpha, b.beta, b.s];
            if point.iter().any(Option::is_some) && point.iter().any(Option::is_none) {
                return Err(Error::Config("budget.alpha, budget.beta and budget.s go together".into()));
            }
            for (name, v) in [("alpha", b.alpha), ("beta", b.beta), ("s", b.s)] {
                if let Some(v) = v {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::Config(format!("budget.{name} must be finite and >= 0, got {v}")));
                    }
                }
            }
        }
        if let Some(x) = &self.plan {
            x.validate().map_err(|e| field("plan", e))?;
        }
        if let Some(c) = &self.scaling {
            c.validate(&self.channel).map_err(|e| field("scaling", e))?;
        }
        if let Some(w) = &self.willie {
            crate::planner::willie_tv_leading(w.n, w.alpha, w.beta, w.s, &self.channel)
                .map_err(|e| field("willie", e))?;
        }
        if let Some(v) = &self.validate {
            if v.mc_samples == 0 || v.schur_draws == 0 {
                return Err(Error::Config("validate.mc_samples and validate.schur_draws must be positive".into()));
            }
        }
        if let Some(s) = &self.sweep {
            self.validate_sweep(s)?;
        }
        Ok(())
    }

    fn validate_sweep(&self, s: &SweepConfig) -> Result<()> {
        if s.axes.is_empty() {
            return Err(Error::Config("sweep.axes must not be empty".into()));
        }
        let mut total: usize = 1;
        for (i, a) in s.axes.iter().enumerate() {
            if s.axes[..i].iter().any(|b| b.param == a.param) {
                return Err(Error::Config(format!("sweep axis {} repeated", a.param.label())));
            }
            if a.points == 0 || !a.start.is_finite() || !a.stop.is_finite() {
                return Err(Error::Config(format!(
                    "sweep axis {}: need finite bounds and points >= 1",
                    a.param.label()
                )));
            }
            if a.scale == AxisScale::Log && !(a.start > 0.0 && a.stop > 0.0) {
                return Err(Error::Config(format!("sweep axis {}: log scale needs positive bounds", a.param.label())));
            }
            total = total.saturating_mul(a.points);
        }
        if total > MAX_SWEEP_POINTS {
            return Err(Error::Config(format!("sweep grid has {total} points, limit {MAX_SWEEP_POINTS}")));
        }
        let base = match s.quantity {
            SweepQuantity::Region => need(&self.modulation, "modulation").map(|_| ()),
            SweepQuantity::Rectangle => need(&self.rectangle, "rectangle").map(|_| ()),
            SweepQuantity::Budget => need(&self.budget, "budget").map(|_| ()),
            SweepQuantity::Plan => need(&self.plan, "plan").map(|_| ()),
            SweepQuantity::WillieTv => need(&self.willie, "willie").map(|_| ()),
            SweepQuantity::WillieMc => {
                need(&self.willie, "willie")?;
                self.require_seed()?;
                if self.willie.is_some_and(|w| w.samples == 0) {
                    return Err(Error::Config("willie.samples must be positive for willie_mc sweeps".into()));
                }
                Ok(())
            }
        };
        base?;
        // every grid point must itself be a valid configuration
        for point in s.grid() {
            self.at_point(&s.axes, &point)?.validate_point()?;
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        let mut c = self.clone();
        c.sweep = None;
        c.validate().map_err(|e| field("sweep point", e))
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required (seed = ... or --seed)".into()))
    }

    /// Copy with the swept parameters set to `point`.
    pub fn at_point(&self, axes: &[Axis], point: &[f64]) -> Result<RunConfig> {
        let mut c = self.clone();
        for (a, &v) in axes.iter().zip(point) {
            c.set(a.param, v)?;
        }
        Ok(c)
    }

    fn set(&mut self, param: SweepParam, v: f64) -> Result<()> {
        let count = || -> Result<u64> {
            let r = v.round();
            if (1.0..9.0e15).contains(&r) && (v - r).abs() <= 1e-9 * r {
                Ok(r as u64)
            } else {
                Err(Error::Config(format!("sweep value {v} for n is not a positive integer")))
            }
        };
        match param {
            SweepParam::Tau => self.channel.tau = v,
            SweepParam::Kappa => self.channel.kappa = v,
            SweepParam::NB => self.channel.n_b = v,
            SweepParam::NS => {
                if let Some(m) = &mut self.modulation {
                    m.n_s = v;
                }
            }
            SweepParam::S => {
                if let Some(r) = &mut self.rectangle {
                    r.s = v;
                }
                if let Some(x) = &mut self.plan {
                    x.s = v;
                }
                if let Some(w) = &mut self.willie {
                    w.s = v;
                }
                if let Some(b) = &mut self.budget {
                    b.s = b.s.map(|_| v);
                }
            }
            SweepParam::Alpha | SweepParam::Beta => {
                let is_alpha = param == SweepParam::Alpha;
                let pick = |a: &mut f64, b: &mut f64| if is_alpha { *a = v } else { *b = v };
                if let Some(x) = &mut self.plan {
                    pick(&mut x.alpha, &mut x.beta);
                }
                if let Some(w) = &mut self.willie {
                    pick(&mut w.alpha, &mut w.beta);
                }
                if let Some(b) = &mut self.budget {
                    if is_alpha {
                        b.alpha = b.alpha.map(|_| v);
                    } else {
                        b.beta = b.beta.map(|_| v);
                    }
                }
            }
            SweepParam::N => {
                let n = count()?;
                if let Some(x) = &mut self.plan {
                    x.n = n;
                }
                if let Some(w) = &mut self.willie {
                    w.n = n;
                }
                if let Some(b) = &mut self.budget {
                    b.n = n;
                }
            }
            SweepParam::Delta => {
                if let Some(x) = &mut self.plan {
                    x.delta = v;
                }
                if let Some(b) = &mut self.budget {
                    b.delta = v;
                }
            }
        }
        Ok(())
    }

    /// Dotted `key = value` pairs of the resolved configuration, sorted by key.
    pub fn flatten(&self) -> Result<Vec<(String, String)>> {
        let value = toml::Value::try_from(self).map_err(|e| Error::Internal(format!("config serialization: {e}")))?;
        let mut out = Vec::new();
        flatten_into("", &value, &mut out);
        Ok(out)
    }
}

fn flatten_into(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        toml::Value::Table(t) => {
            for (k, inner) in t {
                flatten_into(&join(k), inner, out);
            }
        }
        toml::Value::Array(items) if items.iter().any(|i| i.is_table()) => {
            for (i, inner) in items.iter().enumerate() {
                flatten_into(&join(&i.to_string()), inner, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
