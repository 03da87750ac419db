//! Truncated Fock-space ground truth.
//!
//! Multi-mode states use a row-major layout with mode 0 most significant:
//! the basis state `|n_0, ..., n_{m-1}>` sits at `sum_j n_j d^(m-1-j)`.
//! Truncation never renormalizes; the missing weight is reported as the
//! state's tail.

mod beamsplitter;
mod classical;
mod ensemble;
mod spectral;

pub use beamsplitter::{beamsplitter_fock, mac_mix_fock, thermal_loss_fock, BeamsplitterTable};
pub use classical::{
    kl_divergence, layer1_mode_distributions, photon_distribution_thermal, ModeComponent, PhotonDistribution, Receiver,
};
pub use ensemble::{conditional_state, phase_average, psk_average_state, psk_ensemble_mi, OracleValue};
pub use spectral::{entropy_fock, rel_entropy_fock, spectrum_fock, trace_distance_fock};

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
/// Largest supported cutoff per mode.
pub const MAX_CUTOFF: usize = 64;
/// Largest environment cutoff the thermal-loss oracle will build.
pub const MAX_ENV_CUTOFF: usize = 4096;

/// Cutoff and truncation budget for Fock computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub cutoff: usize,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

impl Numerics {
    pub fn new(cutoff: usize, tail_tol: f64) -> Result<Self> {
        let n = Self { cutoff, tail_tol };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff == 0 || self.cutoff > MAX_CUTOFF {
            return Err(Error::domain(format!("cutoff must lie in 1..={MAX_CUTOFF}, got {}", self.cutoff)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::domain(format!("tail_tol must lie in (0, 1), got {}", self.tail_tol)));
        }
        Ok(())
    }
}

impl Default for Numerics {
    fn default() -> Self {
        Self { cutoff: 24, tail_tol: DEFAULT_TAIL_TOL }
    }
}

/// Smallest cutoff `d` with `r^d <= tol` for a geometric ratio `r`.
pub(crate) fn geometric_cutoff(ratio: f64, tol: f64) -> usize {
    if ratio <= 0.0 {
        return 1;
    }
    (tol.ln() / ratio.ln()).ceil().max(1.0) as usize
}

fn dim(cutoff: usize, modes: usize) -> Result<usize> {
    if cutoff == 0 || modes == 0 {
        return Err(Error::Shape("cutoff and mode count must be positive".into()));
    }
    cutoff
        .checked_pow(modes as u32)
        .filter(|&n| n <= 1 << 22)
        .ok_or_else(|| Error::Shape(format!("{modes} modes at cutoff {cutoff} is too large")))
}

#[inline]
pub(crate) fn stride(cutoff: usize, modes: usize, mode: usize) -> usize {
    cutoff.pow((modes - 1 - mode) as u32)
}

#[inline]
pub(crate) fn digit(index: usize, cutoff: usize, stride: usize) -> usize {
    (index / stride) % cutoff
}

/// Pure state on `modes` modes truncated at `cutoff` photons per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    cutoff: usize,
    modes: usize,
    amplitudes: DVector<C64>,
}

impl FockVector {
    pub fn new(cutoff: usize, modes: usize, amplitudes: DVector<C64>) -> Result<Self> {
        let n = dim(cutoff, modes)?;
        if amplitudes.len() != n {
            return Err(Error::Shape(format!("expected {n} amplitudes, got {}", amplitudes.len())));
        }
        if amplitudes.norm_squared() > 1.0 + 1e-10 {
            return Err(Error::domain("state norm exceeds one"));
        }
        Ok(Self { cutoff, modes, amplitudes })
    }

    /// Fock basis state `|n_0, ..., n_{m-1}>`.
    pub fn basis(cutoff: usize, levels: &[usize]) -> Result<Self> {
        let modes = levels.len();
        let n = dim(cutoff, modes)?;
        if levels.iter().any(|&l| l >= cutoff) {
            return Err(Error::Shape("basis level exceeds cutoff".into()));
        }
        let idx = levels.iter().fold(0, |acc, &l| acc * cutoff + l);
        let mut amps = DVector::zeros(n);
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { cutoff, modes, amplitudes: amps })
    }

    /// Truncated coherent state with complex amplitude `alpha`.
    pub fn coherent(cutoff: usize, alpha: C64) -> Result<Self> {
        dim(cutoff, 1)?;
        let mut amps = DVector::zeros(cutoff);
        let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for k in 0..cutoff {
            amps[k] = c;
            c = c * alpha / ((k + 1) as f64).sqrt();
        }
        Ok(Self { cutoff, modes: 1, amplitudes: amps })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Weight lost to truncation.
    pub fn tail(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::Shape("cutoffs differ".into()));
        }
        let n = dim(self.cutoff, self.modes + other.modes)?;
        let mut amps = DVector::zeros(n);
        let m = other.amplitudes.len();
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.amplitudes.iter().enumerate() {
                amps[i * m + j] = a * b;
            }
        }
        Ok(Self { cutoff: self.cutoff, modes: self.modes + other.modes, amplitudes: amps })
    }

    pub fn to_density(&self) -> FockDensity {
        let v = &self.amplitudes;
        FockDensity { cutoff: self.cutoff, modes: self.modes, matrix: v * v.adjoint() }
    }

    pub(crate) fn from_parts(cutoff: usize, modes: usize, amplitudes: DVector<C64>) -> Self {
        Self { cutoff, modes, amplitudes }
    }
}

/// Density operator on `modes` truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    cutoff: usize,
    modes: usize,
    matrix: DMatrix<C64>,
}

impl FockDensity {
    /// Checks shape, Hermiticity (1e-10) and trace (at most one).
    pub fn new(cutoff: usize, modes: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let n = dim(cutoff, modes)?;
        if matrix.shape() != (n, n) {
            return Err(Error::Shape(format!("expected {n}x{n} density, got {:?}", matrix.shape())));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::domain(format!("density is not Hermitian ({herm:e})")));
        }
        let rho = Self { cutoff, modes, matrix };
        if rho.trace() > 1.0 + 1e-10 {
            return Err(Error::domain(format!("density trace {} exceeds one", rho.trace())));
        }
        Ok(rho)
    }

    /// Diagonal single-mode state from a photon distribution.
    pub fn diagonal(dist: &PhotonDistribution) -> Self {
        let d = dist.probs().len();
        let diag = DVector::from_iterator(d, dist.probs().iter().map(|&p| C64::new(p, 0.0)));
        Self { cutoff: d, modes: 1, matrix: DMatrix::from_diagonal(&diag) }
    }

    /// Truncated thermal state; fails if the tail exceeds `tail_tol`.
    pub fn thermal(n_mean: f64, cutoff: usize, tail_tol: f64) -> Result<Self> {
        let dist = photon_distribution_thermal(n_mean, cutoff)?;
        if dist.tail() > tail_tol {
            return Err(Error::Truncation {
                what: "thermal state".into(),
                tail: dist.tail(),
                tol: tail_tol,
                required: geometric_cutoff(n_mean / (n_mean + 1.0), tail_tol),
            });
        }
        Ok(Self::diagonal(&dist))
    }

    pub(crate) fn from_parts(cutoff: usize, modes: usize, matrix: DMatrix<C64>) -> Self {
        Self { cutoff, modes, matrix }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn tail(&self) -> f64 {
        (1.0 - self.trace()).max(0.0)
    }

    /// Photon-number distribution of one mode.
    pub fn photon_probs(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let st = stride(self.cutoff, self.modes, mode);
        let mut p = vec![0.0; self.cutoff];
        for i in 0..self.matrix.nrows() {
            p[digit(i, self.cutoff, st)] += self.matrix[(i, i)].re;
        }
        Ok(p)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(Error::Shape(format!("mode {mode} out of range for {} modes", self.modes)));
        }
        Ok(())
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::Shape("cutoffs differ".into()));
        }
        dim(self.cutoff, self.modes + other.modes)?;
        Ok(Self { cutoff: self.cutoff, modes: self.modes + other.modes, matrix: self.matrix.kronecker(&other.matrix) })
    }

    /// Reduced state on `keep` (ascending order is preserved as given).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Shape("nothing to keep".into()));
        }
        for &k in keep {
            self.check_mode(k)?;
        }
        let d = self.cutoff;
        let m = self.modes;
        let out_modes = keep.len();
        let n_out = dim(d, out_modes)?;
        let strides: Vec<usize> = (0..m).map(|j| stride(d, m, j)).collect();
        let traced: Vec<usize> = (0..m).filter(|j| !keep.contains(j)).collect();
        let n_tr = d.pow(traced.len() as u32);
        let mut out = DMatrix::zeros(n_out, n_out);
        let index = |kept: usize, tr: usize| -> usize {
            let mut idx = 0;
            let mut rem = kept;
            for (pos, &mode) in keep.iter().enumerate() {
                let s = d.pow((out_modes - 1 - pos) as u32);
                idx += (rem / s) * strides[mode];
                rem %= s;
            }
            let mut rem = tr;
            for (pos, &mode) in traced.iter().enumerate() {
                let s = d.pow((traced.len() - 1 - pos) as u32);
                idx += (rem / s) * strides[mode];
                rem %= s;
            }
            idx
        };
        for a in 0..n_out {
            for b in 0..n_out {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..n_tr {
                    acc += self.matrix[(index(a, t), index(b, t))];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self { cutoff: d, modes: out_modes, matrix: out })
    }

    /// First moments and covariance in the vacuum-equals-identity convention,
    /// read off numerically from ladder-operator expectation values.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.cutoff;
        let m = self.modes;
        let n = self.matrix.nrows();
        let strides: Vec<usize> = (0..m).map(|j| stride(d, m, j)).collect();
        // <a_j>, <a_j a_k>, <a_j^dag a_k>
        let mut a1 = vec![C64::new(0.0, 0.0); m];
        let mut aa = vec![vec![C64::new(0.0, 0.0); m]; m];
        let mut ad_a = vec![vec![C64::new(0.0, 0.0); m]; m];
        // Tr(rho O) = sum_{i,j} rho_{j,i} O_{i,j}; lowering a_j maps column i to i - stride.
        let lower = |i: usize, j: usize| -> Option<(usize, f64)> {
            let nj = digit(i, d, strides[j]);
            (nj > 0).then(|| (i - strides[j], (nj as f64).sqrt()))
        };
        for i in 0..n {
            for j in 0..m {
                if let Some((i1, c1)) = lower(i, j) {
                    // <i1| a_j |i> = c1, contributes rho_{i, i1} c1
                    a1[j] += self.matrix[(i, i1)] * c1;
                    for k in 0..m {
                        if let Some((i2, c2)) = lower(i1, k) {
                            aa[k][j] += self.matrix[(i, i2)] * (c1 * c2);
                        }
                        // a_k^dag a_j |i>: lower j then raise k
                        let nk = digit(i1, d, strides[k]);
                        if nk + 1 < d {
                            let i2 = i1 + strides[k];
                            ad_a[k][j] += self.matrix[(i, i2)] * (c1 * ((nk + 1) as f64).sqrt());
                        }
                    }
                }
            }
        }
        // r_i = u a + conj(u) a^dag with u = 1 (x) or -i (p)
        let u = [C64::new(1.0, 0.0), C64::new(0.0, -1.0)];
        let mut mean = DVector::zeros(2 * m);
        for j in 0..m {
            for q in 0..2 {
                mean[2 * j + q] = 2.0 * (u[q] * a1[j]).re;
            }
        }
        let mut cov = DMatrix::zeros(2 * m, 2 * m);
        for j in 0..m {
            for k in 0..m {
                for qj in 0..2 {
                    for qk in 0..2 {
                        let (uj, uk) = (u[qj], u[qk]);
                        let delta = if j == k { 1.0 } else { 0.0 };
                        // <a_j a_k^dag> = <a_k^dag a_j> + delta
                        let t = uj * uk * aa[j][k]
                            + uj * uk.conj() * (ad_a[k][j] + delta)
                            + uj.conj() * uk * ad_a[j][k]
                            + uj.conj() * uk.conj() * aa[j][k].conj();
                        cov[(2 * j + qj, 2 * k + qk)] = t.re - mean[2 * j + qj] * mean[2 * k + qk];
                    }
                }
            }
        }
        (mean, cov)
    }
}

/// TMSV `sum_k sqrt(n^k / (n+1)^(k+1)) |k, k>` on (signal, idler).
pub fn tmsv_fock(n_s: f64, cutoff: usize, tail_tol: f64) -> Result<FockVector> {
    if !(n_s >= 0.0 && n_s.is_finite()) {
        return Err(Error::domain(format!("n_s must be >= 0, got {n_s}")));
    }
    let n = dim(cutoff, 2)?;
    let ratio = n_s / (n_s + 1.0);
    let tail = ratio.powi(cutoff as i32);
    if tail > tail_tol {
        return Err(Error::Truncation {
            what: "TMSV".into(),
            tail,
            tol: tail_tol,
            required: geometric_cutoff(ratio, tail_tol),
        });
    }
    let mut amps = DVector::zeros(n);
    let norm = 1.0 / (n_s + 1.0);
    for k in 0..cutoff {
        amps[k * cutoff + k] = C64::new((norm * ratio.powi(k as i32)).sqrt(), 0.0);
    }
    Ok(FockVector::from_parts(cutoff, 2, amps))
}

/// Applies `exp(i 2 theta n)` to one mode of a pure state.
pub fn phase_rotate_fock(state: &FockVector, theta: f64, mode: usize) -> Result<FockVector> {
    if mode >= state.modes {
        return Err(Error::Shape(format!("mode {mode} out of range for {} modes", state.modes)));
    }
    let d = state.cutoff;
    let st = stride(d, state.modes, mode);
    let phases: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0, 2.0 * theta * k as f64)).collect();
    let amps = DVector::from_iterator(
        state.amplitudes.len(),
        state.amplitudes.iter().enumerate().map(|(i, a)| a * phases[digit(i, d, st)]),
    );
    Ok(FockVector::from_parts(d, state.modes, amps))
}

/// Applies `exp(i 2 theta n)` to one mode of a density operator.
pub fn phase_rotate_density(rho: &FockDensity, theta: f64, mode: usize) -> Result<FockDensity> {
    rho.check_mode(mode)?;
    let d = rho.cutoff;
    let st = stride(d, rho.modes, mode);
    let phases: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0, 2.0 * theta * k as f64)).collect();
    let n = rho.matrix.nrows();
    let matrix =
        DMatrix::from_fn(n, n, |i, j| rho.matrix[(i, j)] * phases[digit(i, d, st)] * phases[digit(j, d, st)].conj());
    Ok(FockDensity::from_parts(d, rho.modes, matrix))
}
