//! Dense symmetric eigensolver and factorizations for the small matrices the
//! bound engines work with (dimension below ~100).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`SymMatrix::new`].
const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest eigenvalue ratio accepted by [`inv_sqrt`].
pub const GRAM_RATIO_MIN: f64 = 1e-12;

/// Dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry to a relative `1e-12` and stores the exact
    /// symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let dev = (&m - m.transpose()).amax();
        if dev > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(dev / scale));
        }
        Ok(Self((&m + m.transpose()) * 0.5))
    }

    /// Builds from the upper triangle of `f(i, j)`, `i <= j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// `V f(D) V^T`.
    pub fn recompose(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, k| {
            self.vectors[(i, k)] * f(self.values[k])
        });
        scaled * self.vectors.transpose()
    }
}

/// Cyclic Jacobi eigen-decomposition.
pub fn sym_eigen(a: &SymMatrix) -> SymEigen {
    let n = a.dim();
    let mut m = a.0.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = m.norm();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

fn check_gram(eig: &SymEigen) -> Result<()> {
    let n = eig.values.len();
    if n == 0 {
        return Ok(());
    }
    let min = eig.values[0];
    let max = eig.values[n - 1];
    if !(min > GRAM_RATIO_MIN * max) {
        return Err(Error::SingularGram { min, max });
    }
    Ok(())
}

/// `G^{-1/2}` for a positive definite `G`.
pub fn inv_sqrt(g: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(g);
    check_gram(&eig)?;
    Ok(SymMatrix(eig.recompose(|d| 1.0 / d.sqrt())))
}

/// `G^{1/2}` for a positive definite `G`, same conditioning check as
/// [`inv_sqrt`].
pub fn sqrt_spd(g: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(g);
    check_gram(&eig)?;
    Ok(SymMatrix(eig.recompose(f64::sqrt)))
}

/// Sum of products in roughly twice working precision (Ogita-Rump-Oishi dot2).
pub fn dot_compensated(terms: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut err) = (0.0f64, 0.0f64);
    for (a, b) in terms {
        let p = a * b;
        let ep = a.mul_add(b, -p);
        let t = sum + p;
        let z = t - sum;
        err += (sum - (t - z)) + (p - z) + ep;
        sum = t;
    }
    sum + err
}

/// Lower Cholesky factor `L` with `G = L L^T`.
pub fn cholesky(g: &SymMatrix) -> Result<DMatrix<f64>> {
    let n = g.dim();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `G X = B` by Cholesky factorization.
pub fn solve_spd(g: &SymMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.dim();
    if b.nrows() != n {
        return Err(Error::Dimension(format!("rhs has {} rows, expected {n}", b.nrows())));
    }
    let l = cholesky(g)?;
    let mut x = cholesky_substitute(&l, b.clone());
    // Refinement with compensated residuals recovers accuracy lost to
    // conditioning.
    for _ in 0..2 {
        let gm = g.as_matrix();
        let residual = DMatrix::from_fn(n, b.ncols(), |i, c| {
            dot_compensated((0..n).map(|k| (-gm[(i, k)], x[(k, c)])).chain(std::iter::once((b[(i, c)], 1.0))))
        });
        x += cholesky_substitute(&l, residual);
    }
    Ok(x)
}

fn cholesky_substitute(l: &DMatrix<f64>, mut x: DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Generalized problem `A c = mu G c` with `G` positive definite, reduced to
/// the standard problem `L^{-1} A L^{-T}`. Eigenvectors are returned in the
/// original coordinates, `G`-orthonormal.
pub fn gen_sym_eigen(a: &SymMatrix, g: &SymMatrix) -> Result<SymEigen> {
    if a.dim() != g.dim() {
        return Err(Error::Dimension(format!("{} vs {}", a.dim(), g.dim())));
    }
    let n = a.dim();
    let l = cholesky(g)?;
    let linv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let reduced = &linv * a.as_matrix() * linv.transpose();
    let eig = sym_eigen(&SymMatrix::new(reduced)?);
    let vectors = linv.transpose() * &eig.vectors;
    debug_assert_eq!(vectors.ncols(), n);
    Ok(SymEigen { values: eig.values, vectors })
}
