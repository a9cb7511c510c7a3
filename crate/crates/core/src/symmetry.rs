//! Point-group representations on the window basis and bounds restricted to
//! the totally symmetric subspace.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, sym_eigen, SymMatrix};
use crate::lowerbound::{build_b, checked_gram_eigen, lower_bounds, symmetric_form, BoundReport, SpectralWindow};
use crate::quadrature::QuadSettings;
use crate::registry::Registry;
use crate::twocenter::{oriented_basis, real_sh_rotation, NuclearGeometry, OrientedOrbital, OverlapEngine, PairFrame};

const GROUP_TOL: f64 = 1e-10;
const PATH_TOL: f64 = 1e-8;
const IDEMPOTENCE_TOL: f64 = 1e-10;
const COMMUTATION_TOL: f64 = 1e-8;

/// Finite group of orthogonal maps acting about `origin` (unscaled bohr).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    name: String,
    elements: Vec<Matrix3<f64>>,
    origin: Vector3<f64>,
}

impl GroupSpec {
    /// Validates orthogonality, presence of the identity and closure.
    pub fn new(name: impl Into<String>, elements: Vec<Matrix3<f64>>, origin: Vector3<f64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Group("no elements".into()));
        }
        for (i, g) in elements.iter().enumerate() {
            let dev = (g.transpose() * g - Matrix3::identity()).amax();
            if dev > GROUP_TOL {
                return Err(Error::Group(format!("element {i} is not orthogonal (deviation {dev:e})")));
            }
        }
        let find = |m: &Matrix3<f64>| elements.iter().position(|g| (g - m).amax() < GROUP_TOL);
        if find(&Matrix3::identity()).is_none() {
            return Err(Error::Group("identity missing".into()));
        }
        for (i, g) in elements.iter().enumerate() {
            for (j, h) in elements.iter().enumerate() {
                if find(&(g * h)).is_none() {
                    return Err(Error::Group(format!("not closed: product of elements {i} and {j}")));
                }
            }
        }
        Ok(Self { name: name.into(), elements, origin })
    }

    pub fn trivial(origin: Vector3<f64>) -> Self {
        Self { name: "C1".into(), elements: vec![Matrix3::identity()], origin }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[Matrix3<f64>] {
        &self.elements
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of the element equal to `m`, if any.
    pub fn index_of(&self, m: &Matrix3<f64>) -> Option<usize> {
        self.elements.iter().position(|g| (g - m).amax() < GROUP_TOL)
    }

    /// Nuclear permutation induced by each element: `g` sends nucleus `k`
    /// to nucleus `perm[k]`.
    pub fn permutations(&self, geometry: &NuclearGeometry) -> Result<Vec<Vec<usize>>> {
        self.elements.iter().map(|g| induced_permutation(g, self.origin, geometry)).collect()
    }
}

fn induced_permutation(g: &Matrix3<f64>, origin: Vector3<f64>, geometry: &NuclearGeometry) -> Result<Vec<usize>> {
    let scale = geometry.positions().iter().map(|p| (p - origin).norm()).fold(1.0, f64::max);
    geometry
        .positions()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let image = origin + g * (p - origin);
            geometry
                .positions()
                .iter()
                .enumerate()
                .find(|(l, q)| {
                    (*q - image).norm() < GROUP_TOL * scale && geometry.charges()[*l] == geometry.charges()[k]
                })
                .map(|(l, _)| l)
                .ok_or_else(|| Error::Group(format!("element does not map nucleus {k} onto a nucleus")))
        })
        .collect()
}

/// The eight elements `F diag(s) F^T`, `s in {+1,-1}^3`, where `F` has the
/// unit `axis` as third column and the remaining columns follow the pair
/// frame completion. The identity comes first.
pub fn d2h_group(axis: &Vector3<f64>, center: &Vector3<f64>) -> Result<GroupSpec> {
    if !(axis.norm() > 1e-12) {
        return Err(Error::Group("D2h axis must be nonzero".into()));
    }
    let f = PairFrame::between(&Vector3::zeros(), axis)?.rotation.transpose();
    let mut elements = Vec::with_capacity(8);
    for bits in 0..8u32 {
        let s = Vector3::from_fn(|i, _| if bits >> i & 1 == 1 { -1.0 } else { 1.0 });
        elements.push(f * Matrix3::from_diagonal(&s) * f.transpose());
    }
    GroupSpec::new("D2h", elements, *center)
}

/// Representation matrix `U(g)` on the window basis:
/// `U(g) psi_l = sum_i U[i, l] psi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrix {
    pub matrix: DMatrix<f64>,
}

fn diagonal_signs(g: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let off = (0..3).flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)));
    let is_diag = off.into_iter().all(|(i, j)| g[(i, j)].abs() < 1e-14);
    is_diag.then(|| Vector3::new(g[(0, 0)].signum(), g[(1, 1)].signum(), g[(2, 2)].signum()))
}

/// Sign picked up by the real harmonic `Y_{l,m}` under `(x,y,z) -> (sx x, sy y, sz z)`.
pub(crate) fn reflection_parity(l: u32, m: i32, s: &Vector3<f64>) -> f64 {
    let ma = m.unsigned_abs();
    let mut v = s.z.powi((l + ma) as i32) * s.x.powi(ma as i32);
    if m < 0 {
        v *= s.x * s.y;
    }
    v
}

/// Builds representation matrices of a group on a window basis.
pub struct Representation<'a> {
    window: &'a SpectralWindow,
    geometry: &'a NuclearGeometry,
    gram: &'a SymMatrix,
    engine: OverlapEngine,
    oriented: Vec<OrientedOrbital>,
    index: HashMap<(usize, u32, u32, i32), usize>,
}

impl<'a> Representation<'a> {
    pub fn new(
        window: &'a SpectralWindow,
        geometry: &'a NuclearGeometry,
        gram: &'a SymMatrix,
        settings: &QuadSettings,
    ) -> Result<Self> {
        if gram.dim() != window.dim() {
            return Err(Error::Dimension("Gram does not match window".into()));
        }
        let index = window.basis.iter().enumerate().map(|(i, o)| ((o.center, o.j, o.l, o.m), i)).collect();
        Ok(Self {
            window,
            geometry,
            gram,
            engine: OverlapEngine::new(settings)?,
            oriented: oriented_basis(&window.basis, geometry)?,
            index,
        })
    }

    /// Signed-permutation form, available when `g` is diagonal in global axes.
    pub fn signed_permutation(&self, g: &Matrix3<f64>, origin: Vector3<f64>) -> Result<Option<DMatrix<f64>>> {
        let Some(s) = diagonal_signs(g) else {
            return Ok(None);
        };
        let perm = induced_permutation(g, origin, self.geometry)?;
        let m = self.window.dim();
        let mut out = DMatrix::zeros(m, m);
        for (col, o) in self.window.basis.iter().enumerate() {
            let row = self
                .index
                .get(&(perm[o.center], o.j, o.l, o.m))
                .ok_or_else(|| Error::Group(format!("image of basis function {col} is outside the window")))?;
            out[(*row, col)] = reflection_parity(o.l, o.m, &s);
        }
        Ok(Some(out))
    }

    /// `G^{-1} W` with `W_jl = <psi_j, U(g) psi_l>`.
    pub fn general(&self, g: &Matrix3<f64>, origin: Vector3<f64>) -> Result<DMatrix<f64>> {
        induced_permutation(g, origin, self.geometry)?;
        let n = self.geometry.n() as f64;
        let scaled_origin = origin * n;
        let lmax = self.window.basis.iter().map(|o| o.l).max().unwrap_or(0);
        let d: Vec<DMatrix<f64>> = (0..=lmax).map(|l| real_sh_rotation(l, g)).collect::<Result<_>>()?;
        let transformed: Vec<OrientedOrbital> = self
            .oriented
            .iter()
            .map(|o| {
                let dl = &d[o.shell.l as usize];
                let coeffs =
                    (0..dl.ncols()).map(|nu| (0..dl.nrows()).map(|mu| o.coeffs[mu] * dl[(mu, nu)]).sum()).collect();
                OrientedOrbital { position: scaled_origin + g * (o.position - scaled_origin), shell: o.shell, coeffs }
            })
            .collect();
        let w = self.engine.overlap_matrix(&self.oriented, &transformed, false)?;
        solve_spd(self.gram, &w)
    }

    /// `U(g)`, cross-checking the signed-permutation path against the general
    /// formula whenever the former applies.
    pub fn rep_matrix(&self, g: &Matrix3<f64>, origin: Vector3<f64>) -> Result<RepMatrix> {
        let general = self.general(g, origin)?;
        if let Some(fast) = self.signed_permutation(g, origin)? {
            let dev = (&fast - &general).amax();
            if dev > PATH_TOL {
                return Err(Error::RepresentationMismatch(dev));
            }
            return Ok(RepMatrix { matrix: fast });
        }
        Ok(RepMatrix { matrix: general })
    }

    pub fn group(&self, group: &GroupSpec) -> Result<Vec<RepMatrix>> {
        group.elements().iter().map(|g| self.rep_matrix(g, group.origin())).collect()
    }
}

/// `U(g)` for a single element.
pub fn rep_matrix(
    g: &Matrix3<f64>,
    origin: Vector3<f64>,
    window: &SpectralWindow,
    geometry: &NuclearGeometry,
    gram: &SymMatrix,
    settings: &QuadSettings,
) -> Result<RepMatrix> {
    Representation::new(window, geometry, gram, settings)?.rep_matrix(g, origin)
}

/// `P = (1/|G|) sum_g U(g)`, checked for idempotence.
pub fn trivial_projector(reps: &[RepMatrix]) -> Result<DMatrix<f64>> {
    let first = reps.first().ok_or_else(|| Error::Group("empty representation".into()))?;
    let mut p = DMatrix::zeros(first.matrix.nrows(), first.matrix.ncols());
    for r in reps {
        p += &r.matrix;
    }
    p /= reps.len() as f64;
    let residual = (&p * &p - &p).amax();
    if residual > IDEMPOTENCE_TOL {
        return Err(Error::NotIdempotent(residual));
    }
    Ok(p)
}

/// Bounds on the whole space and on the range of `projector`. The restricted
/// spectrum is taken on an orthonormal basis of that range, so the kernel
/// contributes no spurious levels.
pub fn symmetric_lower_bounds(
    window: &SpectralWindow,
    gram: &SymMatrix,
    projector: &DMatrix<f64>,
) -> Result<BoundReport> {
    let b = build_b(window, gram)?;
    if projector.nrows() != b.nrows() || projector.ncols() != b.ncols() {
        return Err(Error::Dimension("projector does not match window".into()));
    }
    let commutator = (&b * projector - projector * &b).amax();
    if commutator > COMMUTATION_TOL {
        return Err(Error::Commutation(commutator));
    }
    let gram_eigen = checked_gram_eigen(gram)?;
    let half = gram_eigen.recompose(f64::sqrt);
    let inv_half = gram_eigen.recompose(|v| 1.0 / v.sqrt());
    let p_sym = &half * projector * &inv_half;
    let p_sym = SymMatrix::new(0.5 * (&p_sym + p_sym.transpose()))?;
    let eig = sym_eigen(&p_sym);
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > 0.5).collect();
    let mut report = lower_bounds(window, gram)?;
    if keep.is_empty() {
        report.restricted = Some(Vec::new());
        return Ok(report);
    }
    let q = DMatrix::from_fn(eig.vectors.nrows(), keep.len(), |i, c| eig.vectors[(i, keep[c])]);
    let h = symmetric_form(window, &gram_eigen)?;
    let restricted = SymMatrix::new(q.transpose() * h.as_matrix() * &q)?;
    report.restricted = Some(sym_eigen(&restricted).values.iter().map(|v| v + window.shift).collect());
    Ok(report)
}

/// Supplies the point group used for restricted bounds.
pub trait GroupProvider: Send + Sync {
    fn name(&self) -> &'static str;

    /// `None` means no restriction.
    fn group(&self, geometry: &NuclearGeometry) -> Result<Option<GroupSpec>>;
}

pub struct NoGroup;

impl GroupProvider for NoGroup {
    fn name(&self) -> &'static str {
        "none"
    }

    fn group(&self, _geometry: &NuclearGeometry) -> Result<Option<GroupSpec>> {
        Ok(None)
    }
}

/// D2h about the centroid with the molecular axis of a linear geometry.
pub struct D2hProvider;

impl GroupProvider for D2hProvider {
    fn name(&self) -> &'static str {
        "D2h"
    }

    fn group(&self, geometry: &NuclearGeometry) -> Result<Option<GroupSpec>> {
        let p = geometry.positions();
        if p.len() < 2 {
            return Err(Error::Unsupported("D2h needs at least two nuclei to fix an axis".into()));
        }
        let axis = p[1] - p[0];
        let unit = axis.normalize();
        for q in &p[2..] {
            if (q - p[0]).cross(&unit).norm() > GROUP_TOL * (q - p[0]).norm().max(1.0) {
                return Err(Error::Unsupported("D2h provider expects a linear geometry".into()));
            }
        }
        let group = d2h_group(&axis, &geometry.centroid())?;
        group.permutations(geometry)?;
        Ok(Some(group))
    }
}

/// A fixed, user-supplied group.
pub struct ExplicitGroup(pub GroupSpec);

impl GroupProvider for ExplicitGroup {
    fn name(&self) -> &'static str {
        "explicit"
    }

    fn group(&self, geometry: &NuclearGeometry) -> Result<Option<GroupSpec>> {
        self.0.permutations(geometry)?;
        Ok(Some(self.0.clone()))
    }
}

pub fn group_providers() -> Registry<dyn GroupProvider> {
    let mut r: Registry<dyn GroupProvider> = Registry::new();
    r.register("none", Arc::new(NoGroup));
    r.register("D2h", Arc::new(D2hProvider));
    r
}

/// Unrestricted and, when `group` is given, restricted bounds.
pub fn bounds_with_group(
    window: &SpectralWindow,
    geometry: &NuclearGeometry,
    gram: &SymMatrix,
    group: Option<&GroupSpec>,
    settings: &QuadSettings,
) -> Result<BoundReport> {
    match group {
        None => lower_bounds(window, gram),
        Some(group) => {
            let reps = Representation::new(window, geometry, gram, settings)?.group(group)?;
            let p = trivial_projector(&reps)?;
            symmetric_lower_bounds(window, gram, &p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowerbound::WindowProblem;
    use approx::assert_abs_diff_eq;

    fn h2(r: f64) -> NuclearGeometry {
        NuclearGeometry::h2_plus(r).unwrap()
    }

    fn z_group() -> GroupSpec {
        d2h_group(&Vector3::z(), &Vector3::zeros()).unwrap()
    }

    #[test]
    fn d2h_examples() {
        let g = z_group();
        assert_eq!(g.order(), 8);
        assert_eq!(g.elements()[0], Matrix3::identity());
        for e in g.elements() {
            assert!((e * e - Matrix3::identity()).amax() < 1e-15);
        }
        let c2: Vec<Matrix3<f64>> = g
            .elements()
            .iter()
            .filter(|e| (e.determinant() - 1.0).abs() < 1e-12 && (*e - Matrix3::identity()).amax() > 0.5)
            .copied()
            .collect();
        assert_eq!(c2.len(), 3);
        assert!((c2[0] * c2[1] * c2[2] - Matrix3::identity()).amax() < 1e-15);
        assert!(g.index_of(&-Matrix3::identity()).is_some());
        let tilted = d2h_group(&Vector3::new(1.0, 2.0, -0.5), &Vector3::new(0.3, 0.0, 1.0)).unwrap();
        assert_eq!(tilted.order(), 8);
        assert!(d2h_group(&Vector3::zeros(), &Vector3::zeros()).is_err());
    }

    #[test]
    fn group_validation() {
        let bad = vec![
            Matrix3::identity(),
            Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0)),
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0)),
        ];
        assert!(matches!(GroupSpec::new("x", bad, Vector3::zeros()), Err(Error::Group(_))));
        let no_id = vec![-Matrix3::identity()];
        assert!(GroupSpec::new("x", no_id, Vector3::zeros()).is_err());
    }

    #[test]
    fn parity_matches_rotation_matrices() {
        for bits in 0..8u32 {
            let s = Vector3::from_fn(|i, _| if bits >> i & 1 == 1 { -1.0 } else { 1.0 });
            let g = Matrix3::from_diagonal(&s);
            for l in 0..=4u32 {
                let d = real_sh_rotation(l, &g).unwrap();
                for m in -(l as i32)..=l as i32 {
                    let i = (m + l as i32) as usize;
                    assert_abs_diff_eq!(d[(i, i)], reflection_parity(l, m, &s), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn inversion_swaps_centers() {
        let q = QuadSettings::default();
        let geom = h2(1.0);
        let p = WindowProblem::new(&geom, 1, &q).unwrap();
        let rep = Representation::new(&p.window, &geom, &p.gram, &q).unwrap();
        let u = rep.rep_matrix(&-Matrix3::identity(), Vector3::zeros()).unwrap();
        assert_eq!(u.matrix, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let id = rep.rep_matrix(&Matrix3::identity(), Vector3::zeros()).unwrap();
        assert_eq!(id.matrix, DMatrix::identity(2, 2));

        let p = WindowProblem::new(&geom, 2, &q).unwrap();
        let rep = Representation::new(&p.window, &geom, &p.gram, &q).unwrap();
        let u = rep.rep_matrix(&-Matrix3::identity(), Vector3::zeros()).unwrap();
        let pz = |c: usize| p.window.basis.iter().position(|o| o.center == c && o.l == 1 && o.m == 0).unwrap();
        assert_eq!(u.matrix[(pz(1), pz(0))], -1.0);
        assert_eq!(u.matrix[(pz(0), pz(1))], -1.0);
    }

    #[test]
    fn projector_examples() {
        let q = QuadSettings::default();
        let geom = h2(1.0);
        let p = WindowProblem::new(&geom, 1, &q).unwrap();
        let reps = Representation::new(&p.window, &geom, &p.gram, &q).unwrap().group(&z_group()).unwrap();
        let proj = trivial_projector(&reps).unwrap();
        assert!((&proj - DMatrix::from_element(2, 2, 0.5)).amax() < 1e-15);
        let trivial = trivial_projector(&[RepMatrix { matrix: DMatrix::identity(3, 3) }]).unwrap();
        assert_eq!(trivial, DMatrix::identity(3, 3));
        let bad = RepMatrix { matrix: DMatrix::from_element(2, 2, 1.0) };
        assert!(matches!(trivial_projector(&[bad]), Err(Error::NotIdempotent(_))));
    }

    #[test]
    fn restricted_bounds_anchor() {
        let q = QuadSettings::default();
        let geom = h2(1.0);
        let p = WindowProblem::new(&geom, 2, &q).unwrap();
        let r = bounds_with_group(&p.window, &geom, &p.gram, Some(&z_group()), &q).unwrap();
        let restricted = r.restricted.unwrap();
        assert_abs_diff_eq!(restricted[1], -0.4807, epsilon = 5e-5);
        assert_abs_diff_eq!(restricted[0], r.bounds[0], epsilon = 1e-10);
        let trace: f64 = restricted.len() as f64;
        assert!(trace >= 1.0 && restricted.len() < r.bounds.len());
    }

    #[test]
    fn d2h_provider_rejects_bent_geometry() {
        let g3 = NuclearGeometry::h3_equilateral(1.0).unwrap();
        assert!(D2hProvider.group(&g3).is_err());
        let g = D2hProvider.group(&h2(1.4)).unwrap().unwrap();
        assert_eq!(g.permutations(&h2(1.4)).unwrap().len(), 8);
        assert!(NoGroup.group(&g3).unwrap().is_none());
    }
}
