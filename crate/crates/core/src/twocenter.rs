//! Two-center overlap integrals of hydrogenic orbitals in prolate spheroidal
//! coordinates, and Gram matrix assembly.
//!
//! For each pair of distinct centers the orbitals are re-expanded in a pair
//! frame whose z-axis runs from the first center to the second. In that frame
//! the azimuthal integral is done in closed form (only equal signed `m`
//! couple), leaving a 2-D integral over `xi in [1, inf)`, `eta in [-1, 1]` with
//! volume element `(R^3 / 8)(xi^2 - eta^2)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::quadrature::{gauss_legendre, QuadRule, QuadSettings, XiIntegrator};
use crate::specfun::{legendre_cs, sh_norm, HydrogenicOrbital, RadialFn, Shell};

/// Positions closer than this are treated as the same center.
const SAME_CENTER: f64 = 1e-10;
const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Nuclear positions (bohr) and integer charges.
#[derive(Debug, Clone, PartialEq)]
pub struct NuclearGeometry {
    positions: Vec<Vector3<f64>>,
    charges: Vec<u32>,
}

impl NuclearGeometry {
    pub fn new(positions: Vec<Vector3<f64>>, charges: Vec<u32>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Geometry("at least one nucleus is required".into()));
        }
        if positions.len() != charges.len() {
            return Err(Error::Geometry(format!("{} positions but {} charges", positions.len(), charges.len())));
        }
        if charges.contains(&0) {
            return Err(Error::Geometry("nuclear charges must be positive".into()));
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Geometry("non-finite nuclear position".into()));
        }
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                if (positions[i] - positions[j]).norm() < SAME_CENTER {
                    return Err(Error::Geometry(format!("nuclei {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { positions, charges })
    }

    /// Two protons on the z-axis at `(0, 0, -r/2)` and `(0, 0, r/2)`.
    pub fn h2_plus(r: f64) -> Result<Self> {
        Self::new(vec![Vector3::new(0.0, 0.0, -0.5 * r), Vector3::new(0.0, 0.0, 0.5 * r)], vec![1, 1])
    }

    /// Three protons on an equilateral triangle of side `r` in the xy-plane,
    /// centroid at the origin.
    pub fn h3_equilateral(r: f64) -> Result<Self> {
        let rho = r / 3f64.sqrt();
        let positions = (0..3)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 3.0;
                Vector3::new(rho * a.cos(), rho * a.sin(), 0.0)
            })
            .collect();
        Self::new(positions, vec![1, 1, 1])
    }

    /// Number of nuclei, which is also the number of fragments the kinetic
    /// energy is split into.
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn charges(&self) -> &[u32] {
        &self.charges
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.positions.iter().sum::<Vector3<f64>>() / self.n() as f64
    }

    /// Centers of the dilated fragment eigenfunctions, `n x_k`.
    pub fn scaled_positions(&self) -> Vec<Vector3<f64>> {
        let n = self.n() as f64;
        self.positions.iter().map(|p| p * n).collect()
    }
}

/// Orthonormal frame for a pair of centers: `p_pair = rotation (p - midpoint)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFrame {
    pub rotation: Matrix3<f64>,
    pub separation: f64,
    pub midpoint: Vector3<f64>,
}

impl PairFrame {
    /// The frame z-axis points from `from` to `to`. The x-axis is the global
    /// axis least parallel to z (lowest index on ties), orthonormalized.
    pub fn between(from: &Vector3<f64>, to: &Vector3<f64>) -> Result<Self> {
        let d = to - from;
        let separation = d.norm();
        if separation < SAME_CENTER {
            return Err(Error::Geometry("pair frame needs two distinct centers".into()));
        }
        let ez = d / separation;
        let mut axis = 0;
        for i in 1..3 {
            if ez[i].abs() < ez[axis].abs() {
                axis = i;
            }
        }
        let mut e = Vector3::zeros();
        e[axis] = 1.0;
        let ex = (e - ez * ez[axis]).normalize();
        let ey = ez.cross(&ex);
        let rotation = Matrix3::from_rows(&[ex.transpose(), ey.transpose(), ez.transpose()]);
        Ok(Self { rotation, separation, midpoint: 0.5 * (from + to) })
    }

    pub fn to_pair(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.midpoint)
    }

    pub fn to_global(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * p + self.midpoint
    }
}

/// Frame for nuclei `k` and `l` of the (unscaled) geometry.
pub fn pair_frame(geometry: &NuclearGeometry, k: usize, l: usize) -> Result<PairFrame> {
    let n = geometry.n();
    if k >= n || l >= n {
        return Err(Error::Geometry(format!("nucleus index out of range ({k}, {l}) for {n} nuclei")));
    }
    if k == l {
        return Err(Error::Geometry("pair frame needs k != l".into()));
    }
    PairFrame::between(&geometry.positions[k], &geometry.positions[l])
}

/// Prolate spheroidal coordinates about foci at `(0, 0, -R/2)` (first) and
/// `(0, 0, R/2)` (second).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpheroidalPoint {
    pub xi: f64,
    pub eta: f64,
    pub phi: f64,
}

impl SpheroidalPoint {
    pub fn to_pair_cartesian(&self, separation: f64) -> Vector3<f64> {
        let half = 0.5 * separation;
        let rho = half * ((self.xi * self.xi - 1.0) * (1.0 - self.eta * self.eta)).max(0.0).sqrt();
        Vector3::new(rho * self.phi.cos(), rho * self.phi.sin(), half * self.xi * self.eta)
    }

    pub fn from_pair_cartesian(p: &Vector3<f64>, separation: f64) -> Self {
        let half = 0.5 * separation;
        let r1 = (p - Vector3::new(0.0, 0.0, -half)).norm();
        let r2 = (p - Vector3::new(0.0, 0.0, half)).norm();
        let phi = p.y.atan2(p.x).rem_euclid(2.0 * PI);
        Self { xi: (r1 + r2) / separation, eta: (r1 - r2) / separation, phi }
    }

    /// Distances `(r_first, r_second) = (R(xi+eta)/2, R(xi-eta)/2)`.
    pub fn focal_distances(&self, separation: f64) -> (f64, f64) {
        (0.5 * separation * (self.xi + self.eta), 0.5 * separation * (self.xi - self.eta))
    }
}

fn check_orthogonal(rot: &Matrix3<f64>) -> Result<()> {
    let dev = (rot.transpose() * rot - Matrix3::identity()).amax();
    if dev > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(dev));
    }
    Ok(())
}

/// Real-harmonic representation of an orthogonal matrix: the
/// `(2l+1) x (2l+1)` matrix `D` with `Y_mu(rot^-1 u) = sum_nu D[mu, nu] Y_nu(u)`.
///
/// Proper rotations are built band by band with the Ivanic-Ruedenberg
/// recursion; an improper matrix is handled as `-1` times a proper rotation,
/// contributing `(-1)^l`.
pub fn real_sh_rotation(l: u32, rot: &Matrix3<f64>) -> Result<DMatrix<f64>> {
    check_orthogonal(rot)?;
    let (proper, parity) =
        if rot.determinant() < 0.0 { (-rot, if l.is_multiple_of(2) { 1.0 } else { -1.0 }) } else { (*rot, 1.0) };
    let mut bands = rotation_bands(l, &proper);
    Ok(bands.swap_remove(l as usize) * parity)
}

/// All bands `0..=lmax` of the rotation.
pub(crate) fn rotation_bands(lmax: u32, rot: &Matrix3<f64>) -> Vec<DMatrix<f64>> {
    // Cartesian component carried by the l = 1 harmonic with signed m.
    let comp = |m: i32| match m {
        -1 => 1,
        0 => 2,
        _ => 0,
    };
    let mut bands = vec![DMatrix::identity(1, 1)];
    if lmax == 0 {
        return bands;
    }
    // Y_mu(R^T u) = (R^T u)_{c(mu)} = sum_nu R[c(nu), c(mu)] Y_nu(u).
    bands.push(DMatrix::from_fn(3, 3, |i, j| rot[(comp(j as i32 - 1), comp(i as i32 - 1))]));
    for l in 2..=lmax as i32 {
        let mut band = DMatrix::zeros((2 * l + 1) as usize, (2 * l + 1) as usize);
        for m in -l..=l {
            for n in -l..=l {
                let (u, v, w) = uvw_coefficients(l, m, n);
                let mut value = 0.0;
                if u != 0.0 {
                    value += u * term_u(&bands, l, m, n);
                }
                if v != 0.0 {
                    value += v * term_v(&bands, l, m, n);
                }
                if w != 0.0 {
                    value += w * term_w(&bands, l, m, n);
                }
                band[((m + l) as usize, (n + l) as usize)] = value;
            }
        }
        bands.push(band);
    }
    bands
}

fn centered(band: &DMatrix<f64>, i: i32, j: i32) -> f64 {
    let off = (band.nrows() as i32 - 1) / 2;
    band[((i + off) as usize, (j + off) as usize)]
}

fn uvw_coefficients(l: i32, m: i32, n: i32) -> (f64, f64, f64) {
    let d = if m == 0 { 1.0 } else { 0.0 };
    let lf = l as f64;
    let ma = m.abs() as f64;
    let denom = if n.abs() == l { 2.0 * lf * (2.0 * lf - 1.0) } else { ((l + n) * (l - n)) as f64 };
    let u = (((l + m) * (l - m)) as f64 / denom).sqrt();
    let v = 0.5 * ((1.0 + d) * (lf + ma - 1.0) * (lf + ma) / denom).sqrt() * (1.0 - 2.0 * d);
    let w = -0.5 * ((lf - ma - 1.0) * (lf - ma) / denom).max(0.0).sqrt() * (1.0 - d);
    (u, v, w)
}

fn term_p(bands: &[DMatrix<f64>], i: i32, a: i32, b: i32, l: i32) -> f64 {
    let r1 = &bands[1];
    let prev = &bands[(l - 1) as usize];
    if b == l {
        centered(r1, i, 1) * centered(prev, a, l - 1) - centered(r1, i, -1) * centered(prev, a, -l + 1)
    } else if b == -l {
        centered(r1, i, 1) * centered(prev, a, -l + 1) + centered(r1, i, -1) * centered(prev, a, l - 1)
    } else {
        centered(r1, i, 0) * centered(prev, a, b)
    }
}

fn term_u(bands: &[DMatrix<f64>], l: i32, m: i32, n: i32) -> f64 {
    term_p(bands, 0, m, n, l)
}

fn term_v(bands: &[DMatrix<f64>], l: i32, m: i32, n: i32) -> f64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    if m == 0 {
        term_p(bands, 1, 1, n, l) + term_p(bands, -1, -1, n, l)
    } else if m > 0 {
        if m == 1 {
            sqrt2 * term_p(bands, 1, 0, n, l)
        } else {
            term_p(bands, 1, m - 1, n, l) - term_p(bands, -1, -m + 1, n, l)
        }
    } else if m == -1 {
        sqrt2 * term_p(bands, -1, 0, n, l)
    } else {
        term_p(bands, 1, m + 1, n, l) + term_p(bands, -1, -m - 1, n, l)
    }
}

fn term_w(bands: &[DMatrix<f64>], l: i32, m: i32, n: i32) -> f64 {
    if m > 0 {
        term_p(bands, 1, m + 1, n, l) + term_p(bands, -1, -m - 1, n, l)
    } else {
        term_p(bands, 1, m - 1, n, l) - term_p(bands, -1, -m + 1, n, l)
    }
}

/// A hydrogenic shell at an arbitrary position with an arbitrary real-harmonic
/// angular part `sum_mu coeffs[mu] Y_mu`, expressed in global axes.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct OrientedOrbital {
    pub position: Vector3<f64>,
    pub shell: Shell,
    pub coeffs: Vec<f64>,
}

impl OrientedOrbital {
    pub fn from_basis(orb: &HydrogenicOrbital, position: Vector3<f64>) -> Self {
        let mut coeffs = vec![0.0; (2 * orb.l + 1) as usize];
        coeffs[orb.m_index()] = 1.0;
        Self { position, shell: orb.shell(), coeffs }
    }
}

/// Precomputed rules for overlap evaluation.
pub struct OverlapEngine {
    eta: QuadRule,
    xi: XiIntegrator,
}

impl OverlapEngine {
    pub fn new(settings: &QuadSettings) -> Result<Self> {
        Ok(Self { eta: gauss_legendre(settings.eta_order)?, xi: XiIntegrator::from_settings(settings)? })
    }

    /// Overlaps `<psi_a, psi_b>` of two shells in the pair frame, one value
    /// per `|m| = 0..=min(l_a, l_b)`, for every combination of the given
    /// shells. Result index: `[ia][ib][m]`.
    pub(crate) fn axial_overlaps(
        &self,
        shells_a: &[Shell],
        shells_b: &[Shell],
        separation: f64,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        let radial_a: Vec<RadialFn> = shells_a.iter().map(Shell::radial).collect();
        let radial_b: Vec<RadialFn> = shells_b.iter().map(Shell::radial).collect();
        let mut layout = Vec::new();
        let mut offset = 0;
        for sa in shells_a {
            let mut row = Vec::new();
            for sb in shells_b {
                let count = sa.l.min(sb.l) as usize + 1;
                row.push((offset, count));
                offset += count;
            }
            layout.push(row);
        }
        let dim = offset;
        let kappa_min = radial_a.iter().map(|r| r.kappa).fold(f64::INFINITY, f64::min)
            + radial_b.iter().map(|r| r.kappa).fold(f64::INFINITY, f64::min);
        let decay = 0.5 * separation * kappa_min;
        let half = 0.5 * separation;
        let lmax_a = shells_a.iter().map(|s| s.l).max().unwrap_or(0) as usize;
        let lmax_b = shells_b.iter().map(|s| s.l).max().unwrap_or(0) as usize;
        let mut va = vec![vec![0.0; lmax_a + 1]; shells_a.len()];
        let mut vb = vec![vec![0.0; lmax_b + 1]; shells_b.len()];

        let integrand = |xi: f64, out: &mut [f64]| {
            out.iter_mut().for_each(|v| *v = 0.0);
            let xi2m1 = (xi - 1.0) * (xi + 1.0);
            for (eta, w_eta) in self.eta.iter() {
                let one_m_eta2 = (1.0 - eta) * (1.0 + eta);
                let root = (xi2m1 * one_m_eta2).sqrt();
                let (sum, diff) = (xi + eta, xi - eta);
                let (ra, rb) = (half * sum, half * diff);
                let (ca, sa_) = ((1.0 + xi * eta) / sum, root / sum);
                let (cb, sb_) = ((xi * eta - 1.0) / diff, root / diff);
                let weight = w_eta * (xi * xi - eta * eta);
                for (k, (s, rad)) in shells_a.iter().zip(&radial_a).enumerate() {
                    let radial = rad.eval(ra);
                    for m in 0..=s.l {
                        va[k][m as usize] = radial * sh_norm(s.l, m) * legendre_cs(s.l, m, ca, sa_);
                    }
                }
                for (k, (s, rad)) in shells_b.iter().zip(&radial_b).enumerate() {
                    let radial = rad.eval(rb);
                    for m in 0..=s.l {
                        vb[k][m as usize] = radial * sh_norm(s.l, m) * legendre_cs(s.l, m, cb, sb_);
                    }
                }
                for (ia, row) in layout.iter().enumerate() {
                    for (ib, &(start, count)) in row.iter().enumerate() {
                        for m in 0..count {
                            out[start + m] += weight * va[ia][m] * vb[ib][m];
                        }
                    }
                }
            }
        };
        let flat = self.xi.integrate_many(dim, decay, integrand)?;
        let volume = separation.powi(3) / 8.0;
        Ok(layout
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(start, count)| {
                        (0..count)
                            .map(|m| {
                                let azimuth = if m == 0 { 2.0 * PI } else { PI };
                                volume * azimuth * flat[start + m]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect())
    }

    /// Radial overlap `int R_a R_b r^2 dr` of two shells on the same center.
    fn radial_overlap(&self, a: &Shell, b: &Shell) -> Result<f64> {
        if a.l != b.l {
            return Ok(0.0);
        }
        if a.charge == b.charge {
            return Ok(if a.j == b.j { 1.0 } else { 0.0 });
        }
        let (ra, rb) = (a.radial(), b.radial());
        // r = x - 1 maps [0, inf) onto the xi integrator's [1, inf).
        self.xi.integrate(ra.kappa + rb.kappa, |x| {
            let r = x - 1.0;
            ra.eval(r) * rb.eval(r) * r * r
        })
    }

    /// Overlap matrix between two orbital lists. With `symmetric`, `left` and
    /// `right` must be the same list and only one triangle of center pairs is
    /// integrated.
    pub(crate) fn overlap_matrix(
        &self,
        left: &[OrientedOrbital],
        right: &[OrientedOrbital],
        symmetric: bool,
    ) -> Result<DMatrix<f64>> {
        let left_centers = group_by_center(left);
        let right_centers = group_by_center(right);
        let mut jobs = Vec::new();
        for (ca, (pa, ia)) in left_centers.iter().enumerate() {
            for (cb, (pb, ib)) in right_centers.iter().enumerate() {
                if symmetric && cb < ca {
                    continue;
                }
                jobs.push((pa, ia, pb, ib));
            }
        }
        let blocks: Vec<Result<Vec<(usize, usize, f64)>>> =
            jobs.par_iter().map(|&(pa, ia, pb, ib)| self.center_block(pa, ia, pb, ib, left, right)).collect();
        let mut out = DMatrix::zeros(left.len(), right.len());
        for block in blocks {
            for (i, j, v) in block? {
                out[(i, j)] = v;
                if symmetric {
                    out[(j, i)] = v;
                }
            }
        }
        Ok(out)
    }

    fn center_block(
        &self,
        pa: &Vector3<f64>,
        ia: &[usize],
        pb: &Vector3<f64>,
        ib: &[usize],
        left: &[OrientedOrbital],
        right: &[OrientedOrbital],
    ) -> Result<Vec<(usize, usize, f64)>> {
        let mut entries = Vec::with_capacity(ia.len() * ib.len());
        if (pa - pb).norm() < SAME_CENTER {
            for &i in ia {
                for &j in ib {
                    let (a, b) = (&left[i], &right[j]);
                    let radial = self.radial_overlap(&a.shell, &b.shell)?;
                    let angular: f64 = if a.shell.l == b.shell.l {
                        a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum()
                    } else {
                        0.0
                    };
                    entries.push((i, j, radial * angular));
                }
            }
            return Ok(entries);
        }
        let frame = PairFrame::between(pa, pb)?;
        let shells_a = distinct_shells(ia.iter().map(|&i| left[i].shell));
        let shells_b = distinct_shells(ib.iter().map(|&j| right[j].shell));
        let table = self.axial_overlaps(&shells_a, &shells_b, frame.separation)?;
        let lmax = shells_a.iter().chain(&shells_b).map(|s| s.l).max().unwrap_or(0);
        let bands = rotation_bands(lmax, &frame.rotation);
        let pair_coeffs = |orb: &OrientedOrbital| -> Vec<f64> {
            let d = &bands[orb.shell.l as usize];
            (0..d.ncols()).map(|nu| (0..d.nrows()).map(|mu| orb.coeffs[mu] * d[(mu, nu)]).sum()).collect()
        };
        let ca: Vec<Vec<f64>> = ia.iter().map(|&i| pair_coeffs(&left[i])).collect();
        let cb: Vec<Vec<f64>> = ib.iter().map(|&j| pair_coeffs(&right[j])).collect();
        for (x, &i) in ia.iter().enumerate() {
            let sa = shells_a.iter().position(|s| *s == left[i].shell).unwrap();
            let la = left[i].shell.l as i32;
            for (y, &j) in ib.iter().enumerate() {
                let sb = shells_b.iter().position(|s| *s == right[j].shell).unwrap();
                let lb = right[j].shell.l as i32;
                let axial = &table[sa][sb];
                let mut v = 0.0;
                for m in -la.min(lb)..=la.min(lb) {
                    v += ca[x][(m + la) as usize] * cb[y][(m + lb) as usize] * axial[m.unsigned_abs() as usize];
                }
                entries.push((i, j, v));
            }
        }
        Ok(entries)
    }
}

fn group_by_center(orbs: &[OrientedOrbital]) -> Vec<(Vector3<f64>, Vec<usize>)> {
    let mut groups: Vec<(Vector3<f64>, Vec<usize>)> = Vec::new();
    for (i, o) in orbs.iter().enumerate() {
        match groups.iter_mut().find(|(p, _)| (p - o.position).norm() < SAME_CENTER) {
            Some((_, idx)) => idx.push(i),
            None => groups.push((o.position, vec![i])),
        }
    }
    groups
}

fn distinct_shells(shells: impl Iterator<Item = Shell>) -> Vec<Shell> {
    let mut seen = BTreeMap::new();
    for s in shells {
        let n = seen.len();
        seen.entry((s.j, s.l, s.charge)).or_insert((n, s));
    }
    let mut v: Vec<(usize, Shell)> = seen.into_values().collect();
    v.sort_by_key(|(n, _)| *n);
    v.into_iter().map(|(_, s)| s).collect()
}

/// Overlap `<psi_a, psi_b>` of two basis orbitals of `geometry`. With
/// `use_scaled` the orbitals sit at the dilated centers `n x_k`, which is the
/// inner product of the fragment eigenfunctions.
pub fn overlap_pair(
    a: &HydrogenicOrbital,
    b: &HydrogenicOrbital,
    geometry: &NuclearGeometry,
    use_scaled: bool,
    settings: &QuadSettings,
) -> Result<f64> {
    let positions = if use_scaled { geometry.scaled_positions() } else { geometry.positions().to_vec() };
    let pos = |o: &HydrogenicOrbital| {
        positions
            .get(o.center)
            .copied()
            .ok_or_else(|| Error::Geometry(format!("orbital center {} out of range", o.center)))
    };
    let left = [OrientedOrbital::from_basis(a, pos(a)?)];
    let right = [OrientedOrbital::from_basis(b, pos(b)?)];
    let engine = OverlapEngine::new(settings)?;
    Ok(engine.overlap_matrix(&left, &right, false)?[(0, 0)])
}

pub(crate) fn oriented_basis(basis: &[HydrogenicOrbital], geometry: &NuclearGeometry) -> Result<Vec<OrientedOrbital>> {
    let positions = geometry.scaled_positions();
    basis
        .iter()
        .map(|o| {
            positions
                .get(o.center)
                .map(|p| OrientedOrbital::from_basis(o, *p))
                .ok_or_else(|| Error::Geometry(format!("orbital center {} out of range", o.center)))
        })
        .collect()
}

/// Gram matrix `G_ij = <psi_i, psi_j>` of the fragment eigenfunctions (dilated
/// centers).
pub fn gram_matrix(
    basis: &[HydrogenicOrbital],
    geometry: &NuclearGeometry,
    settings: &QuadSettings,
) -> Result<SymMatrix> {
    if basis.is_empty() {
        return Err(Error::Dimension("empty basis".into()));
    }
    let oriented = oriented_basis(basis, geometry)?;
    let engine = OverlapEngine::new(settings)?;
    SymMatrix::new(engine.overlap_matrix(&oriented, &oriented, true)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::real_sph_harm_dir;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s_1s(w: f64) -> f64 {
        (-w).exp() * (1.0 + w + w * w / 3.0)
    }

    fn test_rotation(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        let r = nalgebra::Rotation3::from_euler_angles(a, b, c);
        *r.matrix()
    }

    #[test]
    fn pair_frame_examples() {
        let g =
            NuclearGeometry::new(vec![Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.0, 0.0, 1.0)], vec![1, 1]).unwrap();
        let f = pair_frame(&g, 0, 1).unwrap();
        assert!((f.rotation - Matrix3::identity()).amax() < 1e-15);
        assert_abs_diff_eq!(f.separation, 2.0, epsilon = 1e-15);
        let g = NuclearGeometry::new(vec![Vector3::zeros(), Vector3::new(3.0, 0.0, 0.0)], vec![1, 1]).unwrap();
        let f = pair_frame(&g, 0, 1).unwrap();
        assert_abs_diff_eq!(f.separation, 3.0, epsilon = 1e-15);
        assert!((f.rotation.row(2).transpose() - Vector3::x()).norm() < 1e-15);
        assert!(pair_frame(&g, 1, 1).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(NuclearGeometry::new(vec![], vec![]).is_err());
        assert!(NuclearGeometry::new(vec![Vector3::zeros(), Vector3::zeros()], vec![1, 1]).is_err());
        assert!(NuclearGeometry::new(vec![Vector3::zeros()], vec![0]).is_err());
        assert!(NuclearGeometry::new(vec![Vector3::zeros()], vec![1, 2]).is_err());
    }

    proptest! {
        #[test]
        fn frame_maps_nuclei_to_axis(ax in -3.0f64..3.0, ay in -3.0f64..3.0, az in -3.0f64..3.0,
                                     bx in -3.0f64..3.0, by in -3.0f64..3.0, bz in -3.0f64..3.0) {
            let (a, b) = (Vector3::new(ax, ay, az), Vector3::new(bx, by, bz));
            prop_assume!((a - b).norm() > 1e-3);
            let f = PairFrame::between(&a, &b).unwrap();
            prop_assert!((f.rotation.transpose() * f.rotation - Matrix3::identity()).amax() < 1e-13);
            prop_assert!((f.rotation.determinant() - 1.0).abs() < 1e-13);
            let half = 0.5 * f.separation;
            prop_assert!((f.to_pair(&a) - Vector3::new(0.0, 0.0, -half)).norm() < 1e-12);
            prop_assert!((f.to_pair(&b) - Vector3::new(0.0, 0.0, half)).norm() < 1e-12);
        }

        #[test]
        fn spheroidal_round_trip(xi in 1.0f64..30.0, eta in -1.0f64..1.0, phi in 0.0f64..std::f64::consts::TAU, sep in 0.1f64..12.0) {
            let p = SpheroidalPoint { xi, eta, phi };
            let c = p.to_pair_cartesian(sep);
            let (rk, rl) = p.focal_distances(sep);
            let dk = (c - Vector3::new(0.0, 0.0, -0.5 * sep)).norm();
            let dl = (c - Vector3::new(0.0, 0.0, 0.5 * sep)).norm();
            let scale = xi.max(1.0) * sep;
            prop_assert!((dk - rk).abs() < 1e-12 * scale);
            prop_assert!((dl - rl).abs() < 1e-12 * scale);
            let back = SpheroidalPoint::from_pair_cartesian(&c, sep);
            prop_assert!((back.xi - xi).abs() < 1e-9 * xi && (back.eta - eta).abs() < 1e-9);
        }

        #[test]
        fn sh_rotation_pointwise(a in -3.1f64..3.1, b in -1.5f64..1.5, c in -3.1f64..3.1,
                                 ux in -1.0f64..1.0, uy in -1.0f64..1.0, uz in -1.0f64..1.0, l in 0u32..=6) {
            let u = Vector3::new(ux, uy, uz);
            prop_assume!(u.norm() > 1e-3);
            let rot = test_rotation(a, b, c);
            let d = real_sh_rotation(l, &rot).unwrap();
            let li = l as i32;
            let rotated = rot.transpose() * u;
            for mu in -li..=li {
                let lhs = real_sph_harm_dir(l, mu, &rotated);
                let rhs: f64 = (-li..=li)
                    .map(|nu| d[((mu + li) as usize, (nu + li) as usize)] * real_sph_harm_dir(l, nu, &u))
                    .sum();
                prop_assert!((lhs - rhs).abs() < 1e-12, "l={} mu={} {} vs {}", l, mu, lhs, rhs);
            }
            let dtd = d.transpose() * &d;
            prop_assert!((dtd - DMatrix::identity(d.nrows(), d.nrows())).amax() < 1e-12);
        }
    }

    #[test]
    fn sh_rotation_examples() {
        for l in 0..=6 {
            let d = real_sh_rotation(l, &Matrix3::identity()).unwrap();
            assert!((d - DMatrix::identity((2 * l + 1) as usize, (2 * l + 1) as usize)).amax() < 1e-14);
        }
        let c2z = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        let d = real_sh_rotation(1, &c2z).unwrap();
        // (p_y, p_z, p_x) ordering
        assert!((d - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, -1.0]))).amax() < 1e-15);
        let inversion = -Matrix3::<f64>::identity();
        let d = real_sh_rotation(3, &inversion).unwrap();
        assert!((d + DMatrix::identity(7, 7)).amax() < 1e-14);
        assert!(matches!(real_sh_rotation(1, &(Matrix3::identity() * 1.1)), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn improper_rotation_pointwise() {
        let rot = -test_rotation(0.3, -0.7, 1.9);
        let u = Vector3::new(0.2, -0.4, 0.7);
        for l in 0..=4u32 {
            let d = real_sh_rotation(l, &rot).unwrap();
            let li = l as i32;
            for mu in -li..=li {
                let lhs = real_sph_harm_dir(l, mu, &(rot.transpose() * u));
                let rhs: f64 = (-li..=li)
                    .map(|nu| d[((mu + li) as usize, (nu + li) as usize)] * real_sph_harm_dir(l, nu, &u))
                    .sum();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }

    fn h2(r: f64) -> NuclearGeometry {
        NuclearGeometry::h2_plus(r).unwrap()
    }

    fn orb(center: usize, j: u32, l: u32, m: i32, n: usize) -> HydrogenicOrbital {
        HydrogenicOrbital::new(center, j, l, m, 1, n).unwrap()
    }

    #[test]
    fn one_s_overlap_closed_form() {
        let q = QuadSettings::default();
        // Scaled separation 2 * 1.0 = 2.0
        let s = overlap_pair(&orb(0, 1, 0, 0, 2), &orb(1, 1, 0, 0, 2), &h2(1.0), true, &q).unwrap();
        assert_abs_diff_eq!(s, s_1s(2.0), epsilon = 1e-12);
        assert_abs_diff_eq!(s, 0.5864529, epsilon = 1e-7);
        for &w in &[0.2, 0.4, 1.0, 3.7, 8.0, 12.0, 12.6] {
            let s = overlap_pair(&orb(0, 1, 0, 0, 2), &orb(1, 1, 0, 0, 2), &h2(w), false, &q).unwrap();
            assert_abs_diff_eq!(s, s_1s(w), epsilon = 1e-12);
        }
        let same = overlap_pair(&orb(0, 2, 1, 1, 2), &orb(0, 2, 1, 1, 2), &h2(1.0), true, &q).unwrap();
        assert_eq!(same, 1.0);
    }

    #[test]
    fn p_orbital_parity_and_phi_orthogonality() {
        let q = QuadSettings::default();
        let g = h2(1.3);
        let ab = overlap_pair(&orb(0, 1, 0, 0, 2), &orb(1, 2, 1, 0, 2), &g, true, &q).unwrap();
        let ba = overlap_pair(&orb(1, 1, 0, 0, 2), &orb(0, 2, 1, 0, 2), &g, true, &q).unwrap();
        assert!(ab.abs() > 1e-3);
        assert_abs_diff_eq!(ab, -ba, epsilon = 1e-13);
        let sx = overlap_pair(&orb(0, 1, 0, 0, 2), &orb(1, 2, 1, 1, 2), &g, true, &q).unwrap();
        assert_abs_diff_eq!(sx, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_center_gram_is_identity() {
        let g = NuclearGeometry::new(vec![Vector3::new(0.4, -0.2, 1.0)], vec![1]).unwrap();
        let basis: Vec<HydrogenicOrbital> = (1..=2u32)
            .flat_map(|j| (0..j).flat_map(move |l| (-(l as i32)..=l as i32).map(move |m| (j, l, m))))
            .map(|(j, l, m)| orb(0, j, l, m, 1))
            .collect();
        assert_eq!(basis.len(), 5);
        let gm = gram_matrix(&basis, &g, &QuadSettings::default()).unwrap();
        assert!((gm.as_matrix() - DMatrix::identity(5, 5)).amax() < 1e-15);
    }

    #[test]
    fn two_center_gram_example() {
        let basis = [orb(0, 1, 0, 0, 2), orb(1, 1, 0, 0, 2)];
        let gm = gram_matrix(&basis, &h2(1.0), &QuadSettings::default()).unwrap();
        assert_abs_diff_eq!(gm[(0, 1)], 0.5864529, epsilon = 1e-7);
        assert_abs_diff_eq!(gm[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unequal_charge_same_center_radial_overlap() {
        // <1s(Z=1)|1s(Z=2)> = 8 * 2^{3/2} / 27
        let engine = OverlapEngine::new(&QuadSettings::default()).unwrap();
        let v = engine.radial_overlap(&Shell { j: 1, l: 0, charge: 1 }, &Shell { j: 1, l: 0, charge: 2 }).unwrap();
        assert_abs_diff_eq!(v, 16.0 * 2f64.sqrt() / 27.0, epsilon = 1e-12);
    }
}
