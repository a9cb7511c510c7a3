//! Gauss-Legendre rules and the composite scheme for `[1, inf)` integrals in
//! the spheroidal `xi` coordinate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ORDER: usize = 512;
/// Cap on the number of geometrically growing `xi` panels.
const MAX_PANELS: usize = 48;
/// The `xi` extent always reaches at least `decay * (xi - 1) = MIN_DECAY_SPAN`.
const MIN_DECAY_SPAN: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Interval {
    Finite { a: f64, b: f64 },
    SemiInfinite { a: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    interval: Interval,
}

impl QuadRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Nodes and weights affinely mapped from `[-1, 1]` onto `[a, b]`.
    pub fn iter_mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.iter().map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter_mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre rule on `[-1, 1]`; nodes by Newton iteration on the
/// Legendre recurrence, returned in increasing order.
pub fn gauss_legendre(order: usize) -> Result<QuadRule> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::domain(format!("Gauss-Legendre order {order} outside 1..={MAX_ORDER}")));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Roots of P_n in decreasing order: cos(pi (i + 3/4) / (n + 1/2)).
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                converged = true;
                break;
            }
        }
        let (p, dp) = legendre_and_derivative(n, x);
        // Newton may oscillate in the last ulp; only a real residual is fatal.
        if !converged && p.abs() > 1e-13 * dp.abs() {
            return Err(Error::GaussLegendre(order));
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule { nodes, weights, interval: Interval::Finite { a: -1.0, b: 1.0 } })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature orders and tolerance shared by every integral module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadSettings {
    /// Gauss-Legendre order in the spheroidal `eta` coordinate.
    pub eta_order: usize,
    /// Gauss-Legendre order per `xi` panel.
    pub xi_order: usize,
    /// Relative tolerance for the `xi` tail and the doubling check.
    pub tol: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { eta_order: 64, xi_order: 48, tol: 1e-12 }
    }
}

/// Composite Gauss-Legendre integration over `[1, inf)` of a vector-valued
/// integrand that decays like `exp(-decay xi)`.
///
/// Panels are `[1, 1+h], [1+h, 1+3h], [1+3h, 1+7h], ...` with `h = 1/decay`,
/// extended until the last panel contributes less than `tol` relative to the
/// accumulated value. The integral is then recomputed once with every panel
/// halved and the order doubled; the refined result is returned when the two
/// agree within `tol`.
///
/// `f(xi, out)` must overwrite `out` with the integrand values at `xi`.
pub struct XiIntegrator {
    coarse: QuadRule,
    fine: QuadRule,
    tol: f64,
}

impl XiIntegrator {
    pub fn new(order: usize, tol: f64) -> Result<Self> {
        Ok(Self { coarse: gauss_legendre(order)?, fine: gauss_legendre(2 * order)?, tol })
    }

    pub fn from_settings(settings: &QuadSettings) -> Result<Self> {
        Self::new(settings.xi_order, settings.tol)
    }

    pub fn integrate_many<F>(&self, dim: usize, decay: f64, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &mut [f64]),
    {
        if !(decay > 0.0) || !decay.is_finite() {
            return Err(Error::domain(format!("xi integration needs a positive decay rate, got {decay}")));
        }
        let h = 1.0 / decay;
        let mut scratch = vec![0.0; dim];
        let mut coarse = vec![0.0; dim];
        let mut panel = vec![0.0; dim];
        let mut edges = vec![1.0];
        let mut converged = false;
        for k in 0..MAX_PANELS {
            let a = *edges.last().unwrap();
            let b = 1.0 + ((1u64 << (k + 1)) - 1) as f64 * h;
            panel.iter_mut().for_each(|v| *v = 0.0);
            accumulate(&self.coarse, a, b, &mut f, &mut scratch, &mut panel);
            for (c, p) in coarse.iter_mut().zip(&panel) {
                *c += p;
            }
            edges.push(b);
            let acc = max_abs(&coarse);
            let last = max_abs(&panel);
            if decay * (b - 1.0) >= MIN_DECAY_SPAN && last <= self.tol * acc {
                converged = true;
                break;
            }
        }
        if !converged {
            let (i, _) = worst(&coarse, &panel);
            return Err(Error::Quadrature { coarse: coarse[i], refined: coarse[i] + panel[i] });
        }

        let mut fine = vec![0.0; dim];
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mid = 0.5 * (a + b);
            accumulate(&self.fine, a, mid, &mut f, &mut scratch, &mut fine);
            accumulate(&self.fine, mid, b, &mut f, &mut scratch, &mut fine);
        }
        let scale = max_abs(&fine);
        let (i, diff) = worst(&fine, &coarse);
        if diff > self.tol * scale {
            return Err(Error::Quadrature { coarse: coarse[i], refined: fine[i] });
        }
        Ok(fine)
    }

    pub fn integrate(&self, decay: f64, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        self.integrate_many(1, decay, |x, out| out[0] = f(x)).map(|v| v[0])
    }
}

fn accumulate<F>(rule: &QuadRule, a: f64, b: f64, f: &mut F, scratch: &mut [f64], acc: &mut [f64])
where
    F: FnMut(f64, &mut [f64]),
{
    for (x, w) in rule.iter_mapped(a, b) {
        f(x, scratch);
        for (s, v) in acc.iter_mut().zip(scratch.iter()) {
            *s += w * v;
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn worst(a: &[f64], b: &[f64]) -> (usize, f64) {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best })
}

/// Scalar convenience wrapper around [`XiIntegrator`] with the default order.
pub fn integrate_xi(f: impl FnMut(f64) -> f64, decay: f64, tol: f64) -> Result<f64> {
    XiIntegrator::new(QuadSettings::default().xi_order, tol)?.integrate(decay, f)
}
