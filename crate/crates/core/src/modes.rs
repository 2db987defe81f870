//! Schmidt decomposition of real symmetric kernels sampled on a quadrature grid.
//!
//! Modes follow the 2π normalization used throughout the model:
//! (1/2π)∫φⱼφₖ dω = δⱼₖ, and the eigenproblem is
//! (1/2π)∫K(ω,ω′)φ(ω′)dω′ = λφ(ω), so that K = Σⱼ λⱼ φⱼ(ω)φⱼ(ω′).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::quadrature::Grid;

#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    eigenvalues: Vec<f64>,
    /// One mode per column, sampled on `grid`.
    modes: DMatrix<f64>,
    grid: Grid,
}

impl ModeDecomposition {
    /// Builds a decomposition from already-normalized modes. Columns are
    /// reordered by descending |λ|.
    pub fn from_parts(eigenvalues: Vec<f64>, modes: DMatrix<f64>, grid: Grid) -> Result<Self> {
        if modes.nrows() != grid.len() || modes.ncols() != eigenvalues.len() {
            return Err(Error::domain(format!(
                "{}x{} mode matrix for {} eigenvalues on a {}-node grid",
                modes.nrows(),
                modes.ncols(),
                eigenvalues.len(),
                grid.len()
            )));
        }
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].abs().total_cmp(&eigenvalues[a].abs()));
        let sorted_vals = order.iter().map(|&i| eigenvalues[i]).collect();
        let sorted_modes = DMatrix::from_fn(modes.nrows(), order.len(), |r, c| modes[(r, order[c])]);
        Ok(ModeDecomposition {
            eigenvalues: sorted_vals,
            modes: sorted_modes,
            grid,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn mode(&self, j: usize) -> Vec<f64> {
        self.modes.column(j).iter().copied().collect()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Keeps the first `count` modes.
    pub fn truncated(&self, count: usize) -> ModeDecomposition {
        let count = count.min(self.len());
        ModeDecomposition {
            eigenvalues: self.eigenvalues[..count].to_vec(),
            modes: self.modes.columns(0, count).into_owned(),
            grid: self.grid.clone(),
        }
    }

    /// Σⱼ λⱼ φⱼ(ωᵢ)φⱼ(ωₖ) on the grid.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.modes.nrows(), self.modes.ncols(), |r, c| {
            self.modes[(r, c)] * self.eigenvalues[c]
        });
        &scaled * self.modes.transpose()
    }
}

/// Eigen-decomposes `kernel[(i, k)] = K(ωᵢ, ωₖ)` on `grid`.
///
/// The weight-symmetrized matrix Mᵢₖ = √wᵢ·K(ωᵢ,ωₖ)·√wₖ/2π is diagonalized
/// densely and its eigenvectors mapped back by φ(ωᵢ) = √(2π)·vᵢ/√wᵢ, which
/// carries the 2π normalization automatically. Each mode's sign is fixed so
/// that it is non-negative at the node closest to zero offset (or, for modes
/// vanishing there, at the first significant node to its right).
pub fn decompose_kernel(grid: &Grid, kernel: &DMatrix<f64>) -> Result<ModeDecomposition> {
    let n = grid.len();
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(Error::domain(format!(
            "{}x{} kernel on a {n}-node grid",
            kernel.nrows(),
            kernel.ncols()
        )));
    }
    check_symmetric(kernel)?;

    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, k| sqrt_w[i] * kernel[(i, k)] * sqrt_w[k] / (2.0 * PI));
    // Symmetrize away the round-off the check above tolerates.
    let mut m = (&m + m.transpose()) * 0.5;
    // Entries near underflow (from deep filter stop-bands) make the QR sweeps
    // produce NaN; anything this small cannot move an eigenvalue anyway.
    let floor = m.amax() * 1e-40;
    m.apply(|v| {
        if v.abs() < floor {
            *v = 0.0;
        }
    });
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::domain("kernel has non-finite entries"));
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;

    let scale = (2.0 * PI).sqrt();
    let mut modes = DMatrix::from_fn(n, n, |i, j| scale * eig.eigenvectors[(i, j)] / sqrt_w[i]);
    let center = grid.center_index();
    for j in 0..n {
        let mut col = modes.column_mut(j);
        let peak = col.amax();
        let pivot = (center..n)
            .find(|&i| col[i].abs() > 1e-6 * peak)
            .unwrap_or(center);
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    if !eig.eigenvalues.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("eigensolver returned non-finite eigenvalues".into()));
    }
    ModeDecomposition::from_parts(eig.eigenvalues.iter().copied().collect(), modes, grid.clone())
}

fn check_symmetric(kernel: &DMatrix<f64>) -> Result<()> {
    let scale = kernel.amax();
    let n = kernel.nrows();
    for i in 0..n {
        for k in (i + 1)..n {
            let d = (kernel[(i, k)] - kernel[(k, i)]).abs();
            if d > 1e-10 * scale {
                return Err(Error::domain(format!(
                    "kernel not symmetric at ({i}, {k}): difference {d:e}"
                )));
            }
        }
    }
    Ok(())
}

/// (1/2π)·Σᵢ wᵢ·aᵢ·bᵢ for two modes sampled on `grid`.
pub fn mode_overlap(a: &[f64], b: &[f64], grid: &Grid) -> Result<f64> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::domain(format!(
            "mode lengths {} and {} do not match the {}-node grid",
            a.len(),
            b.len(),
            grid.len()
        )));
    }
    let s: f64 = grid
        .weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum();
    Ok(s / (2.0 * PI))
}

/// Weighted projection vector wᵢ·φ(ωᵢ) used by the double integrals.
pub(crate) fn weighted(grid: &Grid, modes: &DMatrix<f64>) -> DMatrix<f64> {
    let w = DVector::from_column_slice(grid.weights());
    DMatrix::from_fn(modes.nrows(), modes.ncols(), |r, c| w[r] * modes[(r, c)])
}
