//! Lower bounds from a finite window of fragment eigenfunctions.
//!
//! The kinetic energy is split evenly over the `n` nuclei,
//! `A = sum_k A_k` with `A_k = -(1/2n) Laplacian - Z_k / |y - x_k|`. Every
//! fragment eigenvalue at or below the window threshold contributes one basis
//! function `psi_i`, and the shifted eigenvalues of `B = Lambda G` (with
//! `Lambda_ii = lambda_i - lambda~_{k(i)}`) bound the true spectrum from below.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot_compensated, solve_spd, sym_eigen, SymEigen, SymMatrix, GRAM_RATIO_MIN};
use crate::quadrature::QuadSettings;
use crate::specfun::{fragment_eigenvalue, HydrogenicOrbital, MAX_PRINCIPAL};
use crate::twocenter::{gram_matrix, NuclearGeometry};

/// Basis and shifts for the threshold `lambda in [lambda_{j_cut}, lambda_{j_cut+1})`
/// of the largest-charge center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralWindow {
    pub j_cut: u32,
    /// Threshold used for every center, `-n Z_max^2 / (2 j_cut^2)`.
    pub threshold: f64,
    pub basis: Vec<HydrogenicOrbital>,
    /// `lambda~_k`: the first eigenvalue of `A_k` above the threshold.
    pub lambda_tilde: Vec<f64>,
    pub shift: f64,
}

impl SpectralWindow {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `lambda_i - lambda~_{k(i)}` per basis function.
    pub fn gaps(&self) -> DVector<f64> {
        DVector::from_iterator(self.basis.len(), self.basis.iter().map(|o| o.eigenvalue - self.lambda_tilde[o.center]))
    }
}

/// Ordered bounds (hartree) with diagnostics. `restricted`, `upper` and
/// `temple` are filled by the symmetry and variational stages when requested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub j_cut: u32,
    pub dim: usize,
    pub shift: f64,
    pub bounds: Vec<f64>,
    /// `max / min` eigenvalue of the Gram matrix.
    pub gram_condition: f64,
    pub restricted: Option<Vec<f64>>,
    pub upper: Option<f64>,
    pub temple: Option<f64>,
}

/// Enumerates the window basis: centers in order, then `j`, `l`, and signed
/// `m` ascending.
pub fn build_window(geometry: &NuclearGeometry, j_cut: u32) -> Result<SpectralWindow> {
    if j_cut == 0 {
        return Err(Error::domain("window shell must be >= 1"));
    }
    let n = geometry.n();
    let z_max = *geometry.charges().iter().max().unwrap();
    let threshold = fragment_eigenvalue(n, z_max, j_cut);
    let mut basis = Vec::new();
    let mut lambda_tilde = Vec::with_capacity(n);
    for (k, &z) in geometry.charges().iter().enumerate() {
        // lambda_j^k <= threshold  <=>  j <= j_cut Z_k / Z_max
        let j_top = j_cut * z / z_max;
        if j_top > MAX_PRINCIPAL {
            return Err(Error::Unsupported(format!(
                "center {k} needs shells up to j = {j_top}; at most {MAX_PRINCIPAL} are supported"
            )));
        }
        for j in 1..=j_top {
            for l in 0..j {
                for m in -(l as i32)..=l as i32 {
                    basis.push(HydrogenicOrbital::new(k, j, l, m, z, n)?);
                }
            }
        }
        lambda_tilde.push(fragment_eigenvalue(n, z, j_top + 1));
    }
    let shift = lambda_tilde.iter().sum();
    Ok(SpectralWindow { j_cut, threshold, basis, lambda_tilde, shift })
}

fn check_dims(window: &SpectralWindow, g: &SymMatrix) -> Result<()> {
    if g.dim() != window.dim() {
        return Err(Error::Dimension(format!("Gram is {0}x{0}, window has {1} functions", g.dim(), window.dim())));
    }
    Ok(())
}

/// `B_ij = (lambda_i - lambda~_{k(i)}) G_ij`.
pub fn build_b(window: &SpectralWindow, g: &SymMatrix) -> Result<DMatrix<f64>> {
    check_dims(window, g)?;
    let gaps = window.gaps();
    let mut b = g.as_matrix().clone();
    for (i, mut row) in b.row_iter_mut().enumerate() {
        row *= gaps[i];
    }
    Ok(b)
}

/// `A_ij = sum_s (lambda_s - lambda~_{k(s)}) G_is G_sj`.
pub fn build_a(window: &SpectralWindow, g: &SymMatrix) -> Result<SymMatrix> {
    check_dims(window, g)?;
    let gm = g.as_matrix();
    let gaps = window.gaps();
    let n = gm.nrows();
    Ok(SymMatrix::from_upper(n, |i, j| dot_compensated((0..n).map(|s| (gaps[s] * gm[(i, s)], gm[(s, j)])))))
}

/// Eigen-decomposition of the Gram matrix, rejecting a numerically singular one.
pub(crate) fn checked_gram_eigen(g: &SymMatrix) -> Result<SymEigen> {
    let eig = sym_eigen(g);
    let min = eig.values[0];
    let max = eig.values[eig.values.len() - 1];
    if !(min > GRAM_RATIO_MIN * max) {
        return Err(Error::SingularGram { min, max });
    }
    Ok(eig)
}

/// `G^{1/2} Lambda G^{1/2}`, which equals `G^{-1/2} A G^{-1/2}` and is
/// similar to `B`.
pub(crate) fn symmetric_form(window: &SpectralWindow, gram_eigen: &SymEigen) -> Result<SymMatrix> {
    let half = gram_eigen.recompose(f64::sqrt);
    let gaps = window.gaps();
    let scaled = DMatrix::from_fn(half.nrows(), half.ncols(), |i, j| half[(i, j)] * gaps[j]);
    SymMatrix::new(&scaled * &half)
}

/// Shifted eigenvalues of `G^{-1/2} A G^{-1/2}`, ascending.
pub fn lower_bounds(window: &SpectralWindow, g: &SymMatrix) -> Result<BoundReport> {
    check_dims(window, g)?;
    let gram_eigen = checked_gram_eigen(g)?;
    let h = symmetric_form(window, &gram_eigen)?;
    let bounds = sym_eigen(&h).values.iter().map(|v| v + window.shift).collect();
    let n = gram_eigen.values.len();
    Ok(BoundReport {
        j_cut: window.j_cut,
        dim: window.dim(),
        shift: window.shift,
        bounds,
        gram_condition: gram_eigen.values[n - 1] / gram_eigen.values[0],
        restricted: None,
        upper: None,
        temple: None,
    })
}

/// Max-norm residual of `G^{-1} A - B`.
pub fn identity_residual(window: &SpectralWindow, g: &SymMatrix) -> Result<f64> {
    let a = build_a(window, g)?;
    let b = build_b(window, g)?;
    Ok((solve_spd(g, a.as_matrix())? - b).amax())
}

/// Window, Gram matrix and bounds for one geometry.
#[derive(Debug, Clone)]
pub struct WindowProblem {
    pub window: SpectralWindow,
    pub gram: SymMatrix,
}

impl WindowProblem {
    pub fn new(geometry: &NuclearGeometry, j_cut: u32, settings: &QuadSettings) -> Result<Self> {
        let window = build_window(geometry, j_cut)?;
        let gram = gram_matrix(&window.basis, geometry, settings)?;
        Ok(Self { window, gram })
    }

    pub fn lower_bounds(&self) -> Result<BoundReport> {
        lower_bounds(&self.window, &self.gram)
    }
}
