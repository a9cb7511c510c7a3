//! Derivative-free minimizers.

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    pub max_evaluations: usize,
    /// Initial simplex edge along each coordinate.
    pub step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { f_tol: 1e-8, max_evaluations: 2000, step: 0.1 }
    }
}

impl NelderMead {
    /// Standard coefficients (1, 2, 1/2, 1/2). Non-finite values are treated
    /// as `+inf`, which keeps the simplex inside the feasible region.
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, start: &[f64]) -> Minimum {
        let dim = start.len();
        let evaluations = std::cell::Cell::new(0);
        let mut eval = |x: &[f64]| {
            evaluations.set(evaluations.get() + 1);
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((start.to_vec(), eval(start)));
        for i in 0..dim {
            let mut x = start.to_vec();
            x[i] += self.step;
            let v = eval(&x);
            simplex.push((x, v));
        }
        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[dim].1);
            if best == f64::INFINITY {
                break;
            }
            if (worst - best).abs() <= self.f_tol {
                converged = true;
                break;
            }
            if evaluations.get() >= self.max_evaluations {
                break;
            }
            let centroid: Vec<f64> =
                (0..dim).map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64).collect();
            let toward = |t: f64| -> Vec<f64> {
                (0..dim).map(|k| centroid[k] + t * (simplex[dim].0[k] - centroid[k])).collect()
            };
            let xr = toward(-1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = toward(-2.0);
                let fe = eval(&xe);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst {
                let x = toward(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = toward(0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < fr.min(worst) {
                simplex[dim] = (xc, fc);
                continue;
            }
            let x0 = simplex[0].0.clone();
            for entry in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = (0..dim).map(|k| x0[k] + 0.5 * (entry.0[k] - x0[k])).collect();
                let v = eval(&x);
                *entry = (x, v);
            }
        }
        let (x, value) = simplex.swap_remove(0);
        Minimum { x, value, evaluations: evaluations.get(), converged }
    }

    /// Runs from every start and keeps the lowest minimum; ties go to the
    /// earliest start.
    pub fn multistart(&self, mut f: impl FnMut(&[f64]) -> f64, starts: &[Vec<f64>]) -> Minimum {
        let mut best: Option<Minimum> = None;
        let mut total = 0;
        for s in starts {
            let m = self.minimize(&mut f, s);
            total += m.evaluations;
            if best.as_ref().is_none_or(|b| m.value < b.value) {
                best = Some(m);
            }
        }
        let mut best = best.expect("at least one start");
        best.evaluations = total;
        best
    }
}

/// Golden-section search for a minimum of a unimodal function on `[a, b]`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, x_tol: f64) -> Minimum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evaluations = 2;
    while (b - a).abs() > x_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Minimum { x: vec![x], value, evaluations, converged: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead { f_tol: 1e-14, max_evaluations: 10_000, step: 0.5 };
        let m = nm.minimize(|x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2), &[-1.2, 1.0]);
        assert!(m.converged);
        assert_abs_diff_eq!(m.x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(m.x[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let nm = NelderMead::default();
        let m = nm.minimize(|x| if x[0] <= 0.0 { f64::NAN } else { x[0] - x[0].ln() }, &[0.05]);
        assert_abs_diff_eq!(m.x[0], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn infeasible_start_stops_early() {
        let m = NelderMead::default().minimize(|_| f64::NAN, &[1.0, 2.0]);
        assert!(!m.converged);
        assert_eq!(m.evaluations, 3);
    }

    #[test]
    fn multistart_picks_global() {
        let f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2) + 0.1 * x[0];
        let m = NelderMead::default().multistart(f, &[vec![1.5], vec![-1.5]]);
        assert!(m.x[0] < 0.0);
    }

    #[test]
    fn golden_quadratic() {
        let m = golden_section(|x| (x - 0.7).powi(2), 0.0, 3.0, 1e-9);
        assert_abs_diff_eq!(m.x[0], 0.7, epsilon = 1e-8);
    }
}
