//! Gaussian-state algebra in the vacuum-equals-identity convention.
//!
//! Quadrature vectors are ordered `(x_1, p_1, ..., x_m, p_m)` with
//! `[x_j, p_j] = 2i`, so the uncertainty relation reads `cov + i Omega >= 0`
//! and a thermal mode with mean photon number `N` has covariance `(2N+1) I`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};

/// Absolute tolerance on the symmetry of user supplied covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Symplectic eigenvalues down to `1 - PHYSICAL_TOL` count as physical.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Thermal-state entropy `g(x) = (x+1) ln(x+1) - x ln x` in nats.
pub fn g_entropy(x: f64) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::domain(format!("g(x) requires finite x >= 0, got {x}")));
    }
    Ok(g_unchecked(x))
}

pub(crate) fn g_unchecked(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * x.ln_1p() - x * x.ln()
}

/// Standard symplectic form `Omega = diag([[0, 1], [-1, 0]], ...)` on `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Real symmetric `2m x 2m` quadrature covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape and symmetry. The stored matrix is exactly symmetric.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c {
            return Err(Error::Shape(format!("covariance must be square, got {r}x{c}")));
        }
        if r == 0 || r % 2 != 0 {
            return Err(Error::Shape(format!("covariance dimension must be even and positive, got {r}")));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariance has non-finite entries"));
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::Shape(format!("covariance is not symmetric (|C - C^T| = {asym:e})")));
        }
        Ok(Self::from_symmetric(symmetrize(&entries)))
    }

    /// Internal constructor for matrices that are symmetric by construction.
    pub(crate) fn from_symmetric(entries: DMatrix<f64>) -> Self {
        let modes = entries.nrows() / 2;
        Self { modes, entries }
    }

    pub fn identity(modes: usize) -> Self {
        Self::from_symmetric(DMatrix::identity(2 * modes, 2 * modes))
    }

    /// Single-mode thermal state with mean photon number `n_mean`.
    pub fn thermal(n_mean: f64) -> Result<Self> {
        if n_mean.is_nan() || n_mean < 0.0 {
            return Err(Error::domain(format!("thermal mean photon number must be >= 0, got {n_mean}")));
        }
        Ok(Self::from_symmetric(DMatrix::identity(2, 2) * (2.0 * n_mean + 1.0)))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// The 2x2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    /// Covariance of the listed modes, in the listed order. Equivalent to a
    /// partial trace over the remaining modes.
    pub fn select_modes(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Shape("mode selection is empty".into()));
        }
        if let Some(&bad) = modes.iter().find(|&&k| k >= self.modes) {
            return Err(Error::Shape(format!("mode {bad} out of range for {} modes", self.modes)));
        }
        let idx = quadrature_indices(modes);
        Ok(Self::from_symmetric(self.entries.select_rows(&idx).select_columns(&idx)))
    }

    /// Block-diagonal combination, `self` first.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let n1 = self.entries.nrows();
        let n2 = other.entries.nrows();
        let mut m = DMatrix::zeros(n1 + n2, n1 + n2);
        m.view_mut((0, 0), (n1, n1)).copy_from(&self.entries);
        m.view_mut((n1, n1), (n2, n2)).copy_from(&other.entries);
        Self::from_symmetric(m)
    }

    pub fn is_physical(&self) -> bool {
        symplectic_eigenvalues(self).map(|s| s.min() >= 1.0 - PHYSICAL_TOL).unwrap_or(false)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.entries.shape() != other.entries.shape() {
            return f64::INFINITY;
        }
        (&self.entries - &other.entries).amax()
    }
}

fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect()
}

/// Ascending symplectic eigenvalues of a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn is_pure(&self) -> bool {
        self.values.iter().all(|v| (v - 1.0).abs() <= PHYSICAL_TOL)
    }
}

/// Moduli of the eigenvalues of `i Omega Lambda`, paired and sorted.
///
/// For positive-definite input the spectrum is obtained from the Hermitian
/// matrix `i L^T Omega L` (`Lambda = L L^T`), which is similar to
/// `i Omega Lambda`. Indefinite input falls back to a general eigen solve.
pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    let m = cov.modes();
    let omega = symplectic_form(m);
    let mut moduli: Vec<f64> = match cov.entries.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let a = l.transpose() * &omega * &l;
            let h = a.map(|v| Complex::new(0.0, v));
            let h = (&h + h.adjoint()).scale(0.5);
            h.symmetric_eigenvalues().iter().map(|v| v.abs()).collect()
        }
        None => {
            let prod = &omega * &cov.entries;
            prod.complex_eigenvalues().iter().map(|z| z.norm()).collect()
        }
    };
    moduli.sort_by(|a, b| a.total_cmp(b));
    let mut values = Vec::with_capacity(m);
    for pair in moduli.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        if (a - b).abs() > 1e-9 * a.max(1.0) {
            return Err(Error::Internal(format!("symplectic eigenvalues failed to pair: {a} vs {b}")));
        }
        values.push(0.5 * (a + b));
    }
    Ok(SymplecticSpectrum { values })
}

/// Von Neumann entropy `sum_i g((nu_i - 1)/2)` of a Gaussian state.
pub fn entropy_from_cov(cov: &CovarianceMatrix) -> Result<f64> {
    let spec = symplectic_eigenvalues(cov)?;
    if spec.min() < 1.0 - PHYSICAL_TOL {
        return Err(Error::Unphysical { min_nu: spec.min() });
    }
    Ok(spec.values().iter().map(|&nu| g_unchecked((nu.max(1.0) - 1.0) / 2.0)).sum())
}

/// First and second moments of a physical Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: CovarianceMatrix,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: CovarianceMatrix) -> Result<Self> {
        if mean.len() != 2 * cov.modes() {
            return Err(Error::Shape(format!(
                "mean has length {} but covariance has {} modes",
                mean.len(),
                cov.modes()
            )));
        }
        let spec = symplectic_eigenvalues(&cov)?;
        if spec.min() < 1.0 - PHYSICAL_TOL {
            return Err(Error::Unphysical { min_nu: spec.min() });
        }
        Ok(Self { mean, cov })
    }

    pub fn zero_mean(cov: CovarianceMatrix) -> Result<Self> {
        let n = 2 * cov.modes();
        Self::new(DVector::zeros(n), cov)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn modes(&self) -> usize {
        self.cov.modes()
    }
}

/// Conditions `state` on an ideal heterodyne measurement (measurement
/// covariance `I`) of `measured` modes with quadrature outcome `outcome`.
///
/// The returned state lives on the remaining modes in ascending order. Its
/// covariance `A - C (B + I)^{-1} C^T` does not depend on the outcome.
pub fn schur_condition_heterodyne(
    state: &GaussianState,
    measured: &[usize],
    outcome: &DVector<f64>,
) -> Result<GaussianState> {
    let m = state.modes();
    if measured.is_empty() {
        return Err(Error::Shape("no modes to measure".into()));
    }
    let mut sorted = measured.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != measured.len() {
        return Err(Error::Shape("measured modes contain duplicates".into()));
    }
    if let Some(&bad) = sorted.iter().find(|&&k| k >= m) {
        return Err(Error::Shape(format!("measured mode {bad} out of range for {m} modes")));
    }
    let retained: Vec<usize> = (0..m).filter(|k| !sorted.contains(k)).collect();
    if retained.is_empty() {
        return Err(Error::Shape("measurement leaves no retained modes".into()));
    }
    if outcome.len() != 2 * measured.len() {
        return Err(Error::Shape(format!(
            "outcome has length {} but {} modes are measured",
            outcome.len(),
            measured.len()
        )));
    }

    let ia = quadrature_indices(&retained);
    let im = quadrature_indices(measured);
    let lam = state.cov().entries();
    let aa = lam.select_rows(&ia).select_columns(&ia);
    let am = lam.select_rows(&ia).select_columns(&im);
    let mm = lam.select_rows(&im).select_columns(&im);
    let shifted = &mm + DMatrix::identity(im.len(), im.len());
    let chol = shifted.cholesky().ok_or_else(|| Error::Internal("measured block plus identity is singular".into()))?;
    // gain = A_M (B + I)^{-1}
    let gain = chol.solve(&am.transpose()).transpose();
    let cov = symmetrize(&(&aa - &gain * am.transpose()));

    let mu = state.mean();
    let mu_a = DVector::from_iterator(ia.len(), ia.iter().map(|&i| mu[i]));
    let mu_m = DVector::from_iterator(im.len(), im.iter().map(|&i| mu[i]));
    let mean = mu_a + &gain * (outcome - mu_m);
    GaussianState::new(mean, CovarianceMatrix::from_symmetric(cov))
}

/// Applies the Gaussian channel `cov -> X cov X^T + Y`, `mean -> X mean`.
///
/// The map must satisfy `Y + i(Omega' - X Omega X^T) >= 0` (to 1e-9).
pub fn apply_gaussian_channel(state: &GaussianState, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<GaussianState> {
    let n_in = 2 * state.modes();
    let (xr, xc) = x.shape();
    if xc != n_in || xr == 0 || xr % 2 != 0 {
        return Err(Error::Shape(format!("X is {xr}x{xc}, expected 2m'x{n_in}")));
    }
    if y.shape() != (xr, xr) {
        return Err(Error::Shape(format!("Y is {:?}, expected {xr}x{xr}", y.shape())));
    }
    if (y - y.transpose()).amax() > SYMMETRY_TOL {
        return Err(Error::Shape("Y is not symmetric".into()));
    }
    let omega_in = symplectic_form(n_in / 2);
    let omega_out = symplectic_form(xr / 2);
    let defect = &omega_out - x * &omega_in * x.transpose();
    let herm = DMatrix::from_fn(xr, xr, |i, j| Complex::new(y[(i, j)], defect[(i, j)]));
    let herm = (&herm + herm.adjoint()).scale(0.5);
    let min_eig = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -PHYSICAL_TOL {
        return Err(Error::ChannelValidity { min_eig });
    }
    let cov = symmetrize(&(x * state.cov().entries() * x.transpose() + y));
    let mean = x * state.mean();
    GaussianState::new(mean, CovarianceMatrix::from_symmetric(cov))
}

/// Two-mode beamsplitter `[[sqrt(t) I, sqrt(1-t) I], [-sqrt(1-t) I, sqrt(t) I]]`.
pub fn beamsplitter_symplectic(t: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("transmissivity must lie in [0, 1], got {t}")));
    }
    let c = t.sqrt();
    let s = (1.0 - t).sqrt();
    let mut m = DMatrix::zeros(4, 4);
    for k in 0..2 {
        m[(k, k)] = c;
        m[(k, 2 + k)] = s;
        m[(2 + k, k)] = -s;
        m[(2 + k, 2 + k)] = c;
    }
    Ok(m)
}

/// Single-mode quadrature rotation by `phi`: `x' = x cos - p sin`, `p' = x sin + p cos`.
pub fn phase_rotation_symplectic(phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Embeds a transformation acting on `targets` (in order) into the
/// identity on `modes` modes.
pub fn embed_local(modes: usize, targets: &[usize], local: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = targets.len();
    if local.shape() != (2 * k, 2 * k) {
        return Err(Error::Shape(format!("local map is {:?} but {k} target modes were given", local.shape())));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= modes) {
        return Err(Error::Shape(format!("target mode {bad} out of range for {modes} modes")));
    }
    let idx = quadrature_indices(targets);
    let mut full = DMatrix::identity(2 * modes, 2 * modes);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            full[(ia, ib)] = local[(a, b)];
        }
    }
    Ok(full)
}
