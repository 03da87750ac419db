use nalgebra::DMatrix;

use super::{FockDensity, C64};
use crate::error::{Error, Result};

/// Entries at or below this magnitude do not couple basis states when the
/// matrix is split into independent blocks.
const ZERO_TOL: f64 = 1e-15;
/// Eigenvalues in `[-NEG_TOL, 0]` are rounding noise.
const NEG_TOL: f64 = 1e-10;
/// Eigenvalues of the reference state at or below this level span its kernel.
const KERNEL_TOL: f64 = 1e-14;
/// Largest weight the first state may put on the reference kernel.
const SUPPORT_TOL: f64 = 1e-10;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of the union of the sparsity patterns.
fn components(mats: &[&DMatrix<C64>]) -> Vec<Vec<usize>> {
    let n = mats[0].nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for m in mats {
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)].norm() > ZERO_TOL || m[(j, i)].norm() > ZERO_TOL {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

fn sub(m: &DMatrix<C64>, idx: &[usize]) -> DMatrix<C64> {
    let s = m.select_rows(idx).select_columns(idx);
    (&s + s.adjoint()).scale(0.5)
}

fn block_eigenvalues(m: &DMatrix<C64>, idx: &[usize]) -> Vec<f64> {
    if idx.len() == 1 {
        return vec![m[(idx[0], idx[0])].re];
    }
    sub(m, idx).symmetric_eigenvalues().iter().copied().collect()
}

fn same_space(a: &FockDensity, b: &FockDensity) -> Result<()> {
    if a.cutoff() != b.cutoff() || a.modes() != b.modes() {
        return Err(Error::Shape("densities live on different spaces".into()));
    }
    Ok(())
}

/// Ascending eigenvalues, computed block by block.
pub fn spectrum_fock(rho: &FockDensity) -> Vec<f64> {
    let m = rho.matrix();
    let mut ev: Vec<f64> = components(&[m]).iter().flat_map(|idx| block_eigenvalues(m, idx)).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Von Neumann entropy in nats.
pub fn entropy_fock(rho: &FockDensity) -> Result<f64> {
    let ev = spectrum_fock(rho);
    if let Some(&lo) = ev.first() {
        if lo < -NEG_TOL {
            return Err(Error::NotPositive(lo));
        }
    }
    Ok(-ev.iter().map(|&l| xlnx(l.max(0.0))).sum::<f64>())
}

/// `(1/2) || rho - sigma ||_1`.
pub fn trace_distance_fock(rho: &FockDensity, sigma: &FockDensity) -> Result<f64> {
    same_space(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let total: f64 = components(&[&diff]).iter().flat_map(|idx| block_eigenvalues(&diff, idx)).map(f64::abs).sum();
    Ok(0.5 * total)
}

/// `Tr rho (ln rho - ln sigma)` in nats.
pub fn rel_entropy_fock(rho: &FockDensity, sigma: &FockDensity) -> Result<f64> {
    same_space(rho, sigma)?;
    let (r, s) = (rho.matrix(), sigma.matrix());
    let mut total = 0.0;
    for idx in components(&[r, s]) {
        for l in block_eigenvalues(r, &idx) {
            if l < -NEG_TOL {
                return Err(Error::NotPositive(l));
            }
            total += xlnx(l.max(0.0));
        }
        let (rb, sb) = (sub(r, &idx), sub(s, &idx));
        let eig = sb.symmetric_eigen();
        let rotated = eig.eigenvectors.adjoint() * &rb * &eig.eigenvectors;
        for (k, &mu) in eig.eigenvalues.iter().enumerate() {
            let w = rotated[(k, k)].re;
            if mu < -NEG_TOL {
                return Err(Error::NotPositive(mu));
            }
            if mu <= KERNEL_TOL && w > SUPPORT_TOL {
                return Err(Error::Support(format!("weight {w:e} outside the support of the reference state")));
            }
            if mu > 0.0 {
                total -= w * mu.ln();
            }
        }
    }
    Ok(total)
}
