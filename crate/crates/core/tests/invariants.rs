//! Cross-module invariants: independent overlap quadrature, Gram and B
//! properties on the tabulated geometries, geometric invariance of the
//! bounds, representation identities, and Temple's inequality.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use proptest::prelude::*;
use spectral_bounds::linalg::sym_eigen;
use spectral_bounds::lowerbound::{build_b, WindowProblem};
use spectral_bounds::quadrature::{gauss_legendre, QuadSettings};
use spectral_bounds::specfun::{orbital_value, HydrogenicOrbital};
use spectral_bounds::symmetry::{bounds_with_group, d2h_group, D2hProvider, GroupProvider, Representation};
use spectral_bounds::tables::{H2_R, H3_R};
use spectral_bounds::twocenter::{overlap_pair, NuclearGeometry};
use spectral_bounds::variational::{temple_bound, TempleInput};

fn q() -> QuadSettings {
    QuadSettings::default()
}

/// `<a|b>` by brute-force prolate quadrature in a frame built here, with
/// Cartesian orbital values.
fn overlap_oracle(a: &HydrogenicOrbital, pa: Vector3<f64>, b: &HydrogenicOrbital, pb: Vector3<f64>) -> f64 {
    let r = (pb - pa).norm();
    let ez = (pb - pa) / r;
    let seed = if ez.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let ex = (seed - ez * ez.dot(&seed)).normalize();
    let ey = ez.cross(&ex);
    let mid = 0.5 * (pa + pb);
    let rule = gauss_legendre(40).unwrap();
    let phi_rule = gauss_legendre(48).unwrap();
    let mut xi_breaks = vec![1.0, 1.05, 1.2, 1.5, 2.0];
    while *xi_breaks.last().unwrap() < 80.0 / r {
        let top = *xi_breaks.last().unwrap();
        xi_breaks.push(top * 1.5);
    }
    let mut total = 0.0;
    for w in xi_breaks.windows(2) {
        for (xi, wx) in rule.iter_mapped(w[0], w[1]) {
            for (eta, we) in rule.iter() {
                let rho = 0.5 * r * ((xi * xi - 1.0) * (1.0 - eta * eta)).sqrt();
                let z = 0.5 * r * xi * eta;
                for (phi, wp) in phi_rule.iter_mapped(0.0, 2.0 * PI) {
                    let p = mid + ez * z + ex * (rho * phi.cos()) + ey * (rho * phi.sin());
                    let jac = r.powi(3) / 8.0 * (xi * xi - eta * eta);
                    total += wx * we * wp * jac * orbital_value(a, &p, &pa) * orbital_value(b, &p, &pb);
                }
            }
        }
    }
    total
}

#[test]
fn off_axis_overlaps_match_cartesian_quadrature() {
    let pa = Vector3::new(0.3, -0.2, 0.1);
    let pb = Vector3::new(1.0, 0.5, 1.1);
    let geometry = NuclearGeometry::new(vec![pa, pb], vec![1, 2]).unwrap();
    let cases = [((2, 1, 1), (3, 2, -2)), ((2, 1, -1), (2, 1, 0)), ((3, 2, 1), (1, 0, 0)), ((3, 1, 0), (3, 2, 2))];
    for ((ja, la, ma), (jb, lb, mb)) in cases {
        let a = HydrogenicOrbital::new(0, ja, la, ma, 1, 2).unwrap();
        let b = HydrogenicOrbital::new(1, jb, lb, mb, 2, 2).unwrap();
        let ours = overlap_pair(&a, &b, &geometry, false, &q()).unwrap();
        let oracle = overlap_oracle(&a, pa, &b, pb);
        assert!((ours - oracle).abs() < 1e-6, "{:?} {:?}: {ours} vs {oracle}", (ja, la, ma), (jb, lb, mb));
    }
}

fn table_geometries() -> Vec<NuclearGeometry> {
    H2_R.iter()
        .map(|&r| NuclearGeometry::h2_plus(r).unwrap())
        .chain(H3_R.iter().map(|&r| NuclearGeometry::h3_equilateral(r).unwrap()))
        .collect()
}

#[test]
fn gram_is_spd_with_unit_diagonal_on_table_geometries() {
    for g in table_geometries() {
        let p = WindowProblem::new(&g, 3, &q()).unwrap();
        let m = p.gram.as_matrix();
        assert!(sym_eigen(&p.gram).values[0] > 0.0);
        for i in 0..m.nrows() {
            assert!((m[(i, i)] - 1.0).abs() < 1e-12);
            for j in 0..m.ncols() {
                assert!(m[(i, j)].abs() <= 1.0 + 1e-12);
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }
}

#[test]
fn bounds_are_eigenvalues_of_b() {
    for g in [NuclearGeometry::h2_plus(1.4).unwrap(), NuclearGeometry::h3_equilateral(2.2).unwrap()] {
        let p = WindowProblem::new(&g, 3, &q()).unwrap();
        let report = p.lower_bounds().unwrap();
        let b = build_b(&p.window, &p.gram).unwrap();
        let eig = b.complex_eigenvalues();
        assert!(eig.iter().all(|z| z.im.abs() < 1e-8));
        let mut re: Vec<f64> = eig.iter().map(|z| z.re + p.window.shift).collect();
        re.sort_by(f64::total_cmp);
        for (x, y) in re.iter().zip(&report.bounds) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

fn bounds_of(g: &NuclearGeometry, j: u32) -> Vec<f64> {
    WindowProblem::new(g, j, &q()).unwrap().lower_bounds().unwrap().bounds
}

#[test]
fn relabelling_nuclei_leaves_bounds_unchanged() {
    let g = NuclearGeometry::h3_equilateral(1.8).unwrap();
    let p = g.positions();
    let cycled = NuclearGeometry::new(vec![p[1], p[2], p[0]], vec![1, 1, 1]).unwrap();
    let swapped = NuclearGeometry::new(vec![p[2], p[1], p[0]], vec![1, 1, 1]).unwrap();
    let base = bounds_of(&g, 2);
    for other in [cycled, swapped] {
        for (x, y) in base.iter().zip(bounds_of(&other, 2)) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn rigid_motions_leave_bounds_unchanged(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in 0.0f64..PI,
        shift in proptest::array::uniform3(-2.0f64..2.0), r in 0.5f64..3.0,
    ) {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(ax, ay, az)), angle);
        let g = NuclearGeometry::h3_equilateral(r).unwrap();
        let moved = NuclearGeometry::new(
            g.positions().iter().map(|p| rot * p + Vector3::from(shift)).collect(),
            vec![1, 1, 1],
        ).unwrap();
        for (x, y) in bounds_of(&g, 2).iter().zip(bounds_of(&moved, 2)) {
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn temple_is_monotone_and_below_mean(
        mean in -2.0f64..-0.5, var in 0.0f64..0.1, gap in 0.05f64..1.0, step in 0.0f64..1.0,
    ) {
        let input = |mu2_lb| TempleInput { mean, second_moment: var + mean * mean, mu2_lb };
        let lo = temple_bound(&input(mean + gap)).unwrap();
        let hi = temple_bound(&input(mean + gap + step)).unwrap();
        prop_assert!(hi >= lo);
        prop_assert!(lo <= mean);
        prop_assert!(temple_bound(&input(mean - gap)).is_err());
    }
}

#[test]
fn d2h_representation_is_a_homomorphism_and_paths_agree() {
    let g = NuclearGeometry::h2_plus(1.4).unwrap();
    let p = WindowProblem::new(&g, 3, &q()).unwrap();
    let group = d2h_group(&Vector3::z(), &g.centroid()).unwrap();
    let rep = Representation::new(&p.window, &g, &p.gram, &q()).unwrap();
    let mats: Vec<_> = group.elements().iter().map(|e| rep.rep_matrix(e, group.origin()).unwrap().matrix).collect();
    for (ia, a) in group.elements().iter().enumerate() {
        let fast = rep.signed_permutation(a, group.origin()).unwrap().expect("axis-aligned");
        let general = rep.general(a, group.origin()).unwrap();
        assert!((&fast - &general).amax() < 1e-8);
        for (ib, b) in group.elements().iter().enumerate() {
            let ab = group.index_of(&(a * b)).unwrap();
            assert!((&mats[ia] * &mats[ib] - &mats[ab]).amax() < 1e-8);
        }
    }
}

#[test]
fn restricted_bounds_do_not_depend_on_orientation() {
    let r = 1.8;
    let aligned = NuclearGeometry::h2_plus(r).unwrap();
    let dir = Vector3::new(0.4, -0.3, 0.8).normalize();
    let center = Vector3::new(0.2, 0.1, -0.3);
    let tilted = NuclearGeometry::new(vec![center - 0.5 * r * dir, center + 0.5 * r * dir], vec![1, 1]).unwrap();
    let restricted = |g: &NuclearGeometry| {
        let p = WindowProblem::new(g, 2, &q()).unwrap();
        let group = D2hProvider.group(g).unwrap();
        bounds_with_group(&p.window, g, &p.gram, group.as_ref(), &q()).unwrap().restricted.unwrap()
    };
    let (a, b) = (restricted(&aligned), restricted(&tilted));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn reflections_through_the_axis_plane_are_involutions() {
    let g = NuclearGeometry::h2_plus(1.0).unwrap();
    let p = WindowProblem::new(&g, 3, &q()).unwrap();
    let rep = Representation::new(&p.window, &g, &p.gram, &q()).unwrap();
    let sigma = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
    let u = rep.rep_matrix(&sigma, Vector3::zeros()).unwrap().matrix;
    let id = nalgebra::DMatrix::<f64>::identity(u.nrows(), u.ncols());
    assert!((&u * &u - id).amax() < 1e-10);
}
