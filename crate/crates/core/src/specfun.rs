//! Orthogonal polynomials, real spherical harmonics and normalized hydrogenic
//! orbitals.
//!
//! Conventions used throughout the crate:
//!
//! * `P_l^m` carries no Condon-Shortley phase, so `P_1^1(x) = +sqrt(1 - x^2)`.
//! * Real harmonics are labelled by a signed `m`: `m > 0` is the cosine
//!   flavor `cos(m phi)`, `m < 0` the sine flavor `sin(|m| phi)`. Within a
//!   shell they are indexed by `m + l`, so `l = 1` is ordered `(p_y, p_z, p_x)`.
//! * Radial functions use the modern generalized Laguerre polynomial
//!   `L_n^(alpha)` and are normalized to unit `L^2` norm with a positive
//!   leading small-`r` coefficient.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest principal quantum number supported by the orbital machinery.
pub const MAX_PRINCIPAL: u32 = 6;

/// Associated Legendre function `P_l^m(x)` without the Condon-Shortley phase.
pub fn assoc_legendre(l: u32, m: u32, x: f64) -> Result<f64> {
    if m > l {
        return Err(Error::domain(format!("assoc_legendre: m = {m} exceeds l = {l}")));
    }
    if !(x.abs() <= 1.0) {
        return Err(Error::domain(format!("assoc_legendre: |x| = {} > 1", x.abs())));
    }
    let s = ((1.0 - x) * (1.0 + x)).sqrt();
    Ok(legendre_cs(l, m, x, s))
}

/// `P_l^m` evaluated from `cos(theta)` and `sin(theta) >= 0` supplied
/// separately, which avoids the cancellation in `sqrt(1 - c^2)` near the poles.
///
/// Upward recurrence in `l` starting from `P_m^m = (2m-1)!! s^m`.
pub(crate) fn legendre_cs(l: u32, m: u32, c: f64, s: f64) -> f64 {
    debug_assert!(m <= l);
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= (2 * k + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut p_prev = pmm;
    let mut p_cur = c * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * c * p_cur - (ll + m - 1) as f64 * p_prev) / (ll - m) as f64;
        p_prev = p_cur;
        p_cur = next;
    }
    p_cur
}

/// Modern generalized Laguerre polynomial `L_n^(alpha)(x)`, by the three-term
/// recurrence.
pub fn gen_laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut l_prev = 1.0;
    let mut l_cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * l_cur - (k + alpha) * l_prev) / (k + 1.0);
        l_prev = l_cur;
        l_cur = next;
    }
    l_cur
}

/// Associated Laguerre polynomial `L_q^p(x)` in the older convention
/// `L_q^p = d^p/dx^p [e^x d^q/dx^q (x^q e^-x)]`, the one in which the
/// hydrogenic radial factor reads `L_{j+l}^{2l+1}`.
///
/// Related to the modern polynomial by `L_q^p = (-1)^p q! L_{q-p}^(p)`.
pub fn assoc_laguerre(q: u32, p: u32, x: f64) -> Result<f64> {
    if p > q {
        return Err(Error::domain(format!("assoc_laguerre: p = {p} exceeds q = {q}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("assoc_laguerre: x = {x} is negative")));
    }
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * factorial(q) * gen_laguerre(q - p, p as f64, x))
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Normalization of the real harmonic with `|m| = m_abs`, including the
/// `sqrt(2)` of the cosine/sine flavors.
pub fn sh_norm(l: u32, m_abs: u32) -> f64 {
    let ratio = factorial(l - m_abs) / factorial(l + m_abs);
    let base = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
    if m_abs == 0 {
        base
    } else {
        base * std::f64::consts::SQRT_2
    }
}

fn check_label(l: u32, m: i32) -> Result<()> {
    if m.unsigned_abs() > l {
        return Err(Error::domain(format!("real harmonic label m = {m} invalid for l = {l}")));
    }
    Ok(())
}

/// Real spherical harmonic, orthonormal on the unit sphere.
pub fn real_sph_harm(l: u32, m: i32, theta: f64, phi: f64) -> Result<f64> {
    check_label(l, m)?;
    let (s, c) = theta.sin_cos();
    Ok(real_sph_harm_cs(l, m, c, s.abs(), phi))
}

pub(crate) fn real_sph_harm_cs(l: u32, m: i32, c: f64, s: f64, phi: f64) -> f64 {
    let ma = m.unsigned_abs();
    let azimuthal = match m.signum() {
        0 => 1.0,
        1 => (ma as f64 * phi).cos(),
        _ => (ma as f64 * phi).sin(),
    };
    sh_norm(l, ma) * legendre_cs(l, ma, c, s) * azimuthal
}

/// Real harmonic evaluated at a direction given by a (not necessarily unit)
/// Cartesian vector. The zero vector is mapped to the north pole.
pub fn real_sph_harm_dir(l: u32, m: i32, v: &Vector3<f64>) -> f64 {
    let r = v.norm();
    if r == 0.0 {
        return real_sph_harm_cs(l, m, 1.0, 0.0, 0.0);
    }
    let rho = (v.x * v.x + v.y * v.y).sqrt();
    let phi = v.y.atan2(v.x);
    real_sph_harm_cs(l, m, v.z / r, rho / r, phi)
}

fn check_quantum_numbers(j: u32, l: u32) -> Result<()> {
    if j == 0 || j > MAX_PRINCIPAL {
        return Err(Error::domain(format!("principal quantum number j = {j} outside 1..={MAX_PRINCIPAL}")));
    }
    if l >= j {
        return Err(Error::domain(format!("l = {l} must be below j = {j}")));
    }
    Ok(())
}

/// Hydrogenic radial function `R_jl(Z, r)` with `int R^2 r^2 dr = 1`.
pub fn radial_r(j: u32, l: u32, charge: u32, r: f64) -> Result<f64> {
    check_quantum_numbers(j, l)?;
    if charge == 0 {
        return Err(Error::domain("nuclear charge must be positive"));
    }
    if !(r >= 0.0) {
        return Err(Error::domain(format!("radius {r} is negative")));
    }
    Ok(RadialFn::new(j, l, charge as f64).eval(r))
}

/// Precomputed normalized hydrogenic radial function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RadialFn {
    pub j: u32,
    pub l: u32,
    /// Radial decay rate `Z / j`; the function behaves like `exp(-kappa r)`.
    pub kappa: f64,
    norm: f64,
}

impl RadialFn {
    pub fn new(j: u32, l: u32, charge: f64) -> Self {
        let jf = j as f64;
        let k = 2.0 * charge / jf;
        let norm = (k.powi(3) * factorial(j - l - 1) / (2.0 * jf * factorial(j + l))).sqrt();
        Self { j, l, kappa: charge / jf, norm }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let rho = 2.0 * self.kappa * r;
        self.norm
            * rho.powi(self.l as i32)
            * (-0.5 * rho).exp()
            * gen_laguerre(self.j - self.l - 1, (2 * self.l + 1) as f64, rho)
    }
}

/// One hydrogenic shell `(j, l)` on a nucleus of charge `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shell {
    pub j: u32,
    pub l: u32,
    pub charge: u32,
}

impl Shell {
    pub(crate) fn radial(&self) -> RadialFn {
        RadialFn::new(self.j, self.l, self.charge as f64)
    }
}

/// One basis function: a hydrogenic eigenfunction on a given nucleus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydrogenicOrbital {
    /// Index into the nuclear list.
    pub center: usize,
    pub j: u32,
    pub l: u32,
    /// Signed real-harmonic label (see module docs).
    pub m: i32,
    pub charge: u32,
    /// Eigenvalue of the fragment operator `-(1/2n) Laplacian - Z/r` in hartree,
    /// `-n Z^2 / (2 j^2)`.
    pub eigenvalue: f64,
}

impl HydrogenicOrbital {
    /// `n` is the number of nuclei the kinetic energy is shared between.
    pub fn new(center: usize, j: u32, l: u32, m: i32, charge: u32, n: usize) -> Result<Self> {
        check_quantum_numbers(j, l)?;
        check_label(l, m)?;
        if charge == 0 {
            return Err(Error::domain("nuclear charge must be positive"));
        }
        Ok(Self { center, j, l, m, charge, eigenvalue: fragment_eigenvalue(n, charge, j) })
    }

    pub fn shell(&self) -> Shell {
        Shell { j: self.j, l: self.l, charge: self.charge }
    }

    /// Index of the real harmonic inside its `2l + 1` shell.
    pub fn m_index(&self) -> usize {
        (self.m + self.l as i32) as usize
    }
}

/// `-n Z^2 / (2 j^2)`.
pub fn fragment_eigenvalue(n: usize, charge: u32, j: u32) -> f64 {
    let z = charge as f64;
    -(n as f64) * z * z / (2.0 * (j * j) as f64)
}

/// Orbital value at `point`, with polar coordinates taken about
/// `center_position`.
pub fn orbital_value(orb: &HydrogenicOrbital, point: &Vector3<f64>, center_position: &Vector3<f64>) -> f64 {
    let d = point - center_position;
    let r = d.norm();
    let radial = RadialFn::new(orb.j, orb.l, orb.charge as f64);
    if r == 0.0 {
        return if orb.l == 0 { radial.eval(0.0) * sh_norm(0, 0) } else { 0.0 };
    }
    radial.eval(r) * real_sph_harm_dir(orb.l, orb.m, &d)
}
