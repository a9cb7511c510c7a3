//! Row drivers for the standard H2+ and H3^{2+} sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::lowerbound::WindowProblem;
use crate::quadrature::QuadSettings;
use crate::symmetry::{bounds_with_group, D2hProvider, GroupProvider};
use crate::twocenter::NuclearGeometry;
use crate::variational::{optimize_temple, optimize_upper_bound, Symmetric1s, UpperBoundMethod};

pub const H2_R: [f64; 12] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.4, 1.8, 2.2, 2.6, 3.0, 4.0, 6.0];
pub const H3_R: [f64; 13] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.4, 1.8, 2.2, 2.6, 3.0, 3.4, 3.8, 4.2];

/// Lowest bound for windows `j = 1, 2, 3`.
fn first_bounds(geometry: &NuclearGeometry, settings: &QuadSettings) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, j) in out.iter_mut().zip(1..=3) {
        *slot = WindowProblem::new(geometry, j, settings)?.lower_bounds()?.bounds[0];
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondLevelRow {
    pub r: f64,
    /// First bound, unrestricted.
    pub mu1_lb: f64,
    /// First bound restricted to the totally symmetric subspace.
    pub mu1_lb_x: f64,
    pub mu2_lb: f64,
    pub mu2_lb_x: f64,
}

/// Second-level bounds of H2+ with window `j = 2`, with and without D2h.
pub fn second_level_row(r: f64, settings: &QuadSettings) -> Result<SecondLevelRow> {
    let geometry = NuclearGeometry::h2_plus(r)?;
    let problem = WindowProblem::new(&geometry, 2, settings)?;
    let group = D2hProvider.group(&geometry)?;
    let report = bounds_with_group(&problem.window, &geometry, &problem.gram, group.as_ref(), settings)?;
    let restricted = report.restricted.unwrap_or_default();
    Ok(SecondLevelRow {
        r,
        mu1_lb: report.bounds[0],
        mu1_lb_x: restricted[0],
        mu2_lb: report.bounds[1],
        mu2_lb_x: restricted[1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H2Row {
    pub r: f64,
    pub lb: [f64; 3],
    pub mu1_ub: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Temple bound with the restricted second-level bound.
    pub mu1_lb: f64,
    pub mu2_lb_x: f64,
}

pub fn h2_row(r: f64, settings: &QuadSettings) -> Result<H2Row> {
    let geometry = NuclearGeometry::h2_plus(r)?;
    let lb = first_bounds(&geometry, settings)?;
    let ub = optimize_upper_bound(r, settings)?;
    let mu2_lb_x = second_level_row(r, settings)?.mu2_lb_x;
    let temple = optimize_temple(r, mu2_lb_x, settings)?;
    Ok(H2Row { r, lb, mu1_ub: ub.value, alpha: ub.params.alpha, beta: ub.params.beta, mu1_lb: temple.value, mu2_lb_x })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H3Row {
    pub r: f64,
    pub lb: [f64; 3],
    /// Ritz value from one 1s function per proton with a shared exponent.
    pub mu1_ub: f64,
}

pub fn h3_row(r: f64, settings: &QuadSettings) -> Result<H3Row> {
    let geometry = NuclearGeometry::h3_equilateral(r)?;
    let lb = first_bounds(&geometry, settings)?;
    let ub = Symmetric1s.upper_bound(&geometry, settings)?;
    Ok(H3Row { r, lb, mu1_ub: ub.value })
}

/// Evaluates `row` for every R in parallel, preserving input order.
pub fn sweep<T: Send>(rs: &[f64], row: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    rs.par_iter().map(|&r| row(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_level_anchor() {
        let row = second_level_row(1.0, &QuadSettings::default()).unwrap();
        assert!((row.mu2_lb + 0.6954).abs() < 1e-4);
        assert!((row.mu2_lb_x + 0.4807).abs() < 1e-4);
        assert!((row.mu1_lb - row.mu1_lb_x).abs() < 1e-10);
    }

    #[test]
    fn sweep_preserves_order() {
        let out = sweep(&[3.0, 1.0, 2.0], |r| Ok(r * 2.0)).unwrap();
        assert_eq!(out, vec![6.0, 2.0, 4.0]);
    }
}
