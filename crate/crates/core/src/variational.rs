//! Variational upper bounds for one-electron systems and Temple's lower bound.
//!
//! The two-center trial is `psi = exp(-alpha R xi / 2)(1 + beta R^2 eta^2 / 4)`
//! in prolate spheroidal coordinates. `A psi` is formed analytically, so the
//! mean and `<psi, A^2 psi> = |A psi|^2` are plain 2-D quadratures.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gen_sym_eigen, SymMatrix};
use crate::optim::{golden_section, NelderMead};
use crate::quadrature::{gauss_legendre, QuadRule, QuadSettings, XiIntegrator};
use crate::registry::Registry;
use crate::twocenter::NuclearGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialParams {
    pub alpha: f64,
    pub beta: f64,
    /// Internuclear distance (bohr).
    pub r: f64,
}

/// `exp(-a xi - g eta)(1 + b eta^2)` for charges `za` at `z = -R/2` and `zb`
/// at `z = +R/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProlateTrial {
    pub a: f64,
    pub b: f64,
    pub g: f64,
    pub r: f64,
    pub za: f64,
    pub zb: f64,
}

impl ProlateTrial {
    /// The symmetric two-proton trial.
    pub fn new(p: &TrialParams) -> Result<Self> {
        if !(p.alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be positive, got {}", p.alpha)));
        }
        if !(p.r > 0.0) {
            return Err(Error::domain(format!("R must be positive, got {}", p.r)));
        }
        Ok(Self { a: 0.5 * p.alpha * p.r, b: 0.25 * p.beta * p.r * p.r, g: 0.0, r: p.r, za: 1.0, zb: 1.0 })
    }

    pub fn psi(&self, xi: f64, eta: f64) -> f64 {
        (-self.a * xi - self.g * eta).exp() * (1.0 + self.b * eta * eta)
    }

    /// `(psi, T)` with `A psi = T / (xi^2 - eta^2)`.
    pub fn psi_and_t(&self, xi: f64, eta: f64) -> (f64, f64) {
        let Self { a, b, g, r, za, zb } = *self;
        let x = (-a * xi).exp();
        let e = (-g * eta).exp();
        let p = 1.0 + b * eta * eta;
        let h = e * p;
        let l_xi = x * (a * a * (xi - 1.0) * (xi + 1.0) - 2.0 * a * xi);
        let dh = e * (-g * p + 2.0 * b * eta);
        let ddh = e * (g * g * p - 4.0 * g * b * eta + 2.0 * b);
        let l_eta = (1.0 - eta) * (1.0 + eta) * ddh - 2.0 * eta * dh;
        let t = -(2.0 / (r * r)) * (h * l_xi + x * l_eta) - (2.0 / r) * (za * (xi - eta) + zb * (xi + eta)) * x * h;
        (x * h, t)
    }

    /// `(A psi)(xi, eta)`.
    pub fn apply(&self, xi: f64, eta: f64) -> f64 {
        let (_, t) = self.psi_and_t(xi, eta);
        t / ((xi - eta) * (xi + eta))
    }

    /// Cartesian evaluation in the pair frame (nuclei on the z-axis).
    pub fn psi_cartesian(&self, p: &Vector3<f64>) -> f64 {
        let half = 0.5 * self.r;
        let ra = (p - Vector3::new(0.0, 0.0, -half)).norm();
        let rb = (p - Vector3::new(0.0, 0.0, half)).norm();
        self.psi((ra + rb) / self.r, (ra - rb) / self.r)
    }

    fn volume(&self) -> f64 {
        2.0 * PI * self.r.powi(3) / 8.0
    }
}

/// Normalized moments of a trial function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub norm2: f64,
    pub mean: f64,
    pub second_moment: Option<f64>,
}

impl Moments {
    pub fn variance(&self) -> Option<f64> {
        self.second_moment.map(|s| s - self.mean * self.mean)
    }
}

struct Rules {
    eta: QuadRule,
    xi: XiIntegrator,
    corner: QuadRule,
    corner_fine: QuadRule,
    tol: f64,
}

impl Rules {
    fn new(settings: &QuadSettings) -> Result<Self> {
        Ok(Self {
            eta: gauss_legendre(settings.eta_order)?,
            xi: XiIntegrator::from_settings(settings)?,
            corner: gauss_legendre(settings.xi_order)?,
            corner_fine: gauss_legendre(2 * settings.xi_order)?,
            tol: settings.tol,
        })
    }
}

fn norm_and_energy(trial: &ProlateTrial, rules: &Rules) -> Result<(f64, f64)> {
    let decay = 2.0 * trial.a;
    let v = rules.xi.integrate_many(2, decay, |xi, out| {
        out[0] = 0.0;
        out[1] = 0.0;
        for (eta, w) in rules.eta.iter() {
            let (psi, t) = trial.psi_and_t(xi, eta);
            out[0] += w * (xi - eta) * (xi + eta) * psi * psi;
            out[1] += w * psi * t;
        }
    })?;
    Ok((trial.volume() * v[0], trial.volume() * v[1]))
}

/// `int int T^2 / (xi^2 - eta^2)` over `xi in [1, 2]`, `eta in [-1, 1]`. The
/// corners `(1, +-1)` are the nuclei; each unit square is split into two
/// triangles and Duffy-transformed, which removes the `1 / (u + v)` factor.
fn corner_squares(trial: &ProlateTrial, rule: &QuadRule) -> f64 {
    let mut total = 0.0;
    for sigma in [1.0, -1.0] {
        let f = |u: f64, v: f64| {
            let (_, t) = trial.psi_and_t(1.0 + u, sigma * (1.0 - v));
            t * t / ((u + v) * (2.0 + u - v))
        };
        for (u, wu) in rule.iter_mapped(0.0, 1.0) {
            for (s, ws) in rule.iter_mapped(0.0, 1.0) {
                total += wu * ws * u * (f(u, u * s) + f(u * s, u));
            }
        }
    }
    total
}

fn squared_norm_of_image(trial: &ProlateTrial, rules: &Rules) -> Result<f64> {
    let coarse = corner_squares(trial, &rules.corner);
    let fine = corner_squares(trial, &rules.corner_fine);
    if (coarse - fine).abs() > 1e2 * rules.tol * fine.abs() {
        return Err(Error::Quadrature { coarse, refined: fine });
    }
    // xi = x + 1 with x in [1, inf) covers xi >= 2.
    let tail = rules.xi.integrate(2.0 * trial.a, |x| {
        let xi = x + 1.0;
        rules
            .eta
            .iter()
            .map(|(eta, w)| {
                let (_, t) = trial.psi_and_t(xi, eta);
                w * t * t / ((xi - eta) * (xi + eta))
            })
            .sum()
    })?;
    Ok(trial.volume() * (fine + tail))
}

/// Norm and normalized moments of a general prolate trial.
pub fn trial_moments(trial: &ProlateTrial, with_second: bool, settings: &QuadSettings) -> Result<Moments> {
    let rules = Rules::new(settings)?;
    moments_with(trial, with_second, &rules)
}

fn moments_with(trial: &ProlateTrial, with_second: bool, rules: &Rules) -> Result<Moments> {
    let (norm2, energy) = norm_and_energy(trial, rules)?;
    let second_moment = if with_second { Some(squared_norm_of_image(trial, rules)? / norm2) } else { None };
    Ok(Moments { norm2, mean: energy / norm2, second_moment })
}

/// `(|psi|^2, <psi, A psi> / |psi|^2)`.
pub fn rayleigh(params: &TrialParams, settings: &QuadSettings) -> Result<(f64, f64)> {
    let m = trial_moments(&ProlateTrial::new(params)?, false, settings)?;
    Ok((m.norm2, m.mean))
}

/// `<psi, A^2 psi> / |psi|^2`.
pub fn second_moment(params: &TrialParams, settings: &QuadSettings) -> Result<f64> {
    let m = trial_moments(&ProlateTrial::new(params)?, true, settings)?;
    Ok(m.second_moment.unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TempleInput {
    pub mean: f64,
    pub second_moment: f64,
    pub mu2_lb: f64,
}

/// `mean - variance / (mu2_lb - mean)`, valid only when `mean < mu2_lb`.
pub fn temple_bound(input: &TempleInput) -> Result<f64> {
    let TempleInput { mean, second_moment, mu2_lb } = *input;
    if !(mean < mu2_lb) {
        return Err(Error::TempleInapplicable { mean, mu2_lb });
    }
    let variance = second_moment - mean * mean;
    if variance < -1e-12 * second_moment.abs().max(1.0) {
        return Err(Error::NegativeVariance(variance));
    }
    Ok(mean - variance.max(0.0) / (mu2_lb - mean))
}

/// Multistart grid for the two trial parameters.
pub const ALPHA_STARTS: [f64; 3] = [0.8, 1.2, 1.6];
pub const BETA_STARTS: [f64; 3] = [-0.2, 0.0, 0.3];

fn starts() -> Vec<Vec<f64>> {
    ALPHA_STARTS.iter().flat_map(|&a| BETA_STARTS.iter().map(move |&b| vec![a, b])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimized {
    pub params: TrialParams,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes the Rayleigh quotient over `(alpha, beta)`.
pub fn optimize_upper_bound(r: f64, settings: &QuadSettings) -> Result<Optimized> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("R must be positive, got {r}")));
    }
    let rules = Rules::new(settings)?;
    let objective = |x: &[f64]| {
        let p = TrialParams { alpha: x[0], beta: x[1], r };
        ProlateTrial::new(&p).and_then(|t| moments_with(&t, false, &rules)).map_or(f64::INFINITY, |m| m.mean)
    };
    let m = NelderMead::default().multistart(objective, &starts());
    Ok(Optimized {
        params: TrialParams { alpha: m.x[0], beta: m.x[1], r },
        value: m.value,
        evaluations: m.evaluations,
        converged: m.converged,
    })
}

/// Maximizes Temple's bound over `(alpha, beta)` among trials meeting its
/// precondition.
pub fn optimize_temple(r: f64, mu2_lb: f64, settings: &QuadSettings) -> Result<Optimized> {
    let rules = Rules::new(settings)?;
    let objective = |x: &[f64]| {
        let p = TrialParams { alpha: x[0], beta: x[1], r };
        ProlateTrial::new(&p)
            .and_then(|t| moments_with(&t, true, &rules))
            .and_then(|m| temple_bound(&TempleInput { mean: m.mean, second_moment: m.second_moment.unwrap(), mu2_lb }))
            .map_or(f64::INFINITY, |v| -v)
    };
    let m = NelderMead::default().multistart(objective, &starts());
    if !m.value.is_finite() {
        // Report the mean at the central start.
        let centre = TrialParams { alpha: ALPHA_STARTS[1], beta: BETA_STARTS[1], r };
        let mean = moments_with(&ProlateTrial::new(&centre)?, false, &rules)?.mean;
        return Err(Error::TempleInapplicable { mean, mu2_lb });
    }
    Ok(Optimized {
        params: TrialParams { alpha: m.x[0], beta: m.x[1], r },
        value: -m.value,
        evaluations: m.evaluations,
        converged: m.converged,
    })
}

/// An upper bound together with what Temple's inequality needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBound {
    pub method: &'static str,
    pub value: f64,
    pub params: Vec<f64>,
    /// Normalized `<psi, A^2 psi>` of the optimal trial, when available.
    pub second_moment: Option<f64>,
    pub converged: bool,
}

pub trait UpperBoundMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports(&self, geometry: &NuclearGeometry) -> bool;

    fn upper_bound(&self, geometry: &NuclearGeometry, settings: &QuadSettings) -> Result<UpperBound>;

    fn provides_temple(&self) -> bool {
        false
    }

    /// First-eigenvalue lower bound from Temple's inequality, if the method
    /// provides second moments.
    fn temple(&self, _geometry: &NuclearGeometry, _mu2_lb: f64, _settings: &QuadSettings) -> Result<Option<f64>> {
        Ok(None)
    }
}

/// The two-parameter prolate trial for two protons.
pub struct ProlateTwoParam;

impl ProlateTwoParam {
    fn separation(geometry: &NuclearGeometry) -> Result<f64> {
        if !Self.supports(geometry) {
            return Err(Error::Unsupported("prolate-two-param needs exactly two unit charges".into()));
        }
        Ok((geometry.positions()[1] - geometry.positions()[0]).norm())
    }
}

impl UpperBoundMethod for ProlateTwoParam {
    fn name(&self) -> &'static str {
        "prolate-two-param"
    }

    fn supports(&self, geometry: &NuclearGeometry) -> bool {
        geometry.n() == 2 && geometry.charges() == [1, 1]
    }

    fn upper_bound(&self, geometry: &NuclearGeometry, settings: &QuadSettings) -> Result<UpperBound> {
        let r = Self::separation(geometry)?;
        let opt = optimize_upper_bound(r, settings)?;
        let second = second_moment(&opt.params, settings)?;
        Ok(UpperBound {
            method: self.name(),
            value: opt.value,
            params: vec![opt.params.alpha, opt.params.beta],
            second_moment: Some(second),
            converged: opt.converged,
        })
    }

    fn provides_temple(&self) -> bool {
        true
    }

    fn temple(&self, geometry: &NuclearGeometry, mu2_lb: f64, settings: &QuadSettings) -> Result<Option<f64>> {
        let r = Self::separation(geometry)?;
        Ok(Some(optimize_temple(r, mu2_lb, settings)?.value))
    }
}

/// Ritz bound from one 1s function per nucleus with a shared exponent.
pub struct Symmetric1s;

/// `<1s_a | 1s_b>` at `w = zeta R`.
fn s1s(w: f64) -> f64 {
    (-w).exp() * (1.0 + w + w * w / 3.0)
}

/// `<1s_a | 1/r_c | 1s_b>` for distinct `a`, `b`, `c` by spherical
/// coordinates about `c`, with radial panels broken at both other centers.
fn three_center(zeta: f64, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, rules: &ThreeCenterRules) -> f64 {
    let norm = zeta.powi(3) / PI;
    let (da, db) = ((a - c).norm(), (b - c).norm());
    let mut breaks = vec![0.0, da.min(db), da.max(db)];
    let mut top = da.max(db);
    for _ in 0..8 {
        top += 6.0 / zeta;
        breaks.push(top);
    }
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] - w[0] < 1e-14 {
            continue;
        }
        for (r, wr) in rules.radial.iter_mapped(w[0], w[1]) {
            let mut shell = 0.0;
            for (ct, wt) in rules.polar.iter() {
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                for (ph, wp) in rules.azimuth.iter_mapped(0.0, 2.0 * PI) {
                    let p = c + r * Vector3::new(st * ph.cos(), st * ph.sin(), ct);
                    shell += wt * wp * (-zeta * ((p - a).norm() + (p - b).norm())).exp();
                }
            }
            total += wr * r * shell;
        }
    }
    norm * total
}

struct ThreeCenterRules {
    radial: QuadRule,
    polar: QuadRule,
    azimuth: QuadRule,
}

/// Lowest Ritz value for exponent `zeta`.
fn lcao_energy(zeta: f64, geometry: &NuclearGeometry, rules: &ThreeCenterRules) -> Result<f64> {
    let x = geometry.positions();
    let z: Vec<f64> = geometry.charges().iter().map(|&q| q as f64).collect();
    let n = geometry.n();
    let mut s = DMatrix::zeros(n, n);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let rij = (x[i] - x[j]).norm();
            let w = zeta * rij;
            let (sij, onsite) = if i == j { (1.0, zeta) } else { (s1s(w), zeta * (-w).exp() * (1.0 + w)) };
            // -1/2 Laplacian 1s_j = -zeta^2/2 1s_j + zeta / r_j 1s_j
            let mut hij = -0.5 * zeta * zeta * sij + zeta * onsite;
            for c in 0..n {
                let v = if i == j {
                    if c == i {
                        zeta
                    } else {
                        let w = zeta * (x[c] - x[i]).norm();
                        (1.0 - (-2.0 * w).exp() * (1.0 + w)) / (x[c] - x[i]).norm()
                    }
                } else if c == i || c == j {
                    onsite
                } else {
                    three_center(zeta, &x[i], &x[j], &x[c], rules)
                };
                hij -= z[c] * v;
            }
            s[(i, j)] = sij;
            s[(j, i)] = sij;
            h[(i, j)] = hij;
            h[(j, i)] = hij;
        }
    }
    let eig = gen_sym_eigen(&SymMatrix::new(h)?, &SymMatrix::new(s)?)?;
    Ok(eig.values[0])
}

impl UpperBoundMethod for Symmetric1s {
    fn name(&self) -> &'static str {
        "symmetric-1s"
    }

    fn supports(&self, _geometry: &NuclearGeometry) -> bool {
        true
    }

    fn upper_bound(&self, geometry: &NuclearGeometry, _settings: &QuadSettings) -> Result<UpperBound> {
        let rules =
            ThreeCenterRules { radial: gauss_legendre(32)?, polar: gauss_legendre(48)?, azimuth: gauss_legendre(48)? };
        let mut failure = None;
        let m = golden_section(
            |zeta| match lcao_energy(zeta, geometry, &rules) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            0.2,
            3.5,
            1e-7,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(UpperBound { method: self.name(), value: m.value, params: m.x, second_moment: None, converged: m.converged })
    }
}

pub fn upper_bound_methods() -> Registry<dyn UpperBoundMethod> {
    let mut r: Registry<dyn UpperBoundMethod> = Registry::new();
    r.register("prolate-two-param", Arc::new(ProlateTwoParam));
    r.register("symmetric-1s", Arc::new(Symmetric1s));
    r
}

/// `prolate-two-param` where it applies, else `symmetric-1s`.
pub fn default_method(geometry: &NuclearGeometry) -> Arc<dyn UpperBoundMethod> {
    if ProlateTwoParam.supports(geometry) {
        Arc::new(ProlateTwoParam)
    } else {
        Arc::new(Symmetric1s)
    }
}
