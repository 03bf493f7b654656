//! Element operators, global assembly and boundary conditions.
//!
//! Each control point carries five unknowns in the order
//! `(u, v, w, theta_x, theta_y)`, global index `5 * point + dof`.

use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix5, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::BandMatrix;
use crate::nurbs::{build_patch, Edge, ElementTopology, NurbsPatch, PlateGeometry, ShapeFunctions};
use crate::plate_model::{PlateSection, ShearCorrection};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

pub const DOFS_PER_POINT: usize = 5;

/// Relative asymmetry tolerated in matrices that must be symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dof {
    U = 0,
    V = 1,
    W = 2,
    ThetaX = 3,
    ThetaY = 4,
}

/// Global numbering of the unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    num_points: usize,
}

impl DofMap {
    pub fn new(num_points: usize) -> Self {
        Self { num_points }
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn len(&self) -> usize {
        DOFS_PER_POINT * self.num_points
    }

    pub fn is_empty(&self) -> bool {
        self.num_points == 0
    }

    pub fn index(&self, point: usize, dof: Dof) -> usize {
        DOFS_PER_POINT * point + dof as usize
    }
}

/// Shape functions at a Gauss point together with `weight * det J`.
#[derive(Debug, Clone)]
pub struct QuadraturePoint {
    pub shape: ShapeFunctions,
    pub weight: f64,
}

/// Patch, elements and cached quadrature data for one mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub geometry: PlateGeometry,
    pub patch: NurbsPatch,
    pub topology: ElementTopology,
    pub dofs: DofMap,
    points: Vec<Vec<QuadraturePoint>>,
    diameters: Vec<f64>,
}

impl Discretization {
    /// Open-uniform mesh of `degree` with `control_points` per direction.
    pub fn new(geometry: PlateGeometry, degree: (usize, usize), control_points: (usize, usize)) -> Result<Self> {
        let (patch, topology) = build_patch(&geometry, degree, control_points)?;
        Self::from_patch(geometry, patch, topology)
    }

    pub fn from_patch(geometry: PlateGeometry, patch: NurbsPatch, topology: ElementTopology) -> Result<Self> {
        let rule_xi = GaussLegendre::new(patch.knots_xi.degree() + 1);
        let rule_eta = GaussLegendre::new(patch.knots_eta.degree() + 1);
        let mut points = Vec::with_capacity(topology.len());
        let mut diameters = Vec::with_capacity(topology.len());
        for element in &topology.elements {
            let mut pts = Vec::new();
            for (xi, eta, w) in element.quadrature(&rule_xi, &rule_eta) {
                let shape = patch.shape_functions_on_span(element.span.0, element.span.1, xi, eta)?;
                let weight = w * shape.det_jacobian;
                pts.push(QuadraturePoint { shape, weight });
            }
            points.push(pts);
            diameters.push(patch.element_diameter(element)?);
        }
        let dofs = DofMap::new(patch.num_control_points());
        Ok(Self { geometry, patch, topology, dofs, points, diameters })
    }

    pub fn num_elements(&self) -> usize {
        self.topology.len()
    }

    pub fn quadrature(&self, element: usize) -> &[QuadraturePoint] {
        &self.points[element]
    }

    /// Largest diagonal of the element in physical space.
    pub fn diameter(&self, element: usize) -> f64 {
        self.diameters[element]
    }

    /// Half bandwidth of the global operators.
    pub fn half_bandwidth(&self) -> usize {
        let reach = self
            .topology
            .elements
            .iter()
            .map(|e| {
                let lo = e.support.iter().min().copied().unwrap_or(0);
                let hi = e.support.iter().max().copied().unwrap_or(0);
                hi - lo
            })
            .max()
            .unwrap_or(0);
        DOFS_PER_POINT * reach + DOFS_PER_POINT - 1
    }

    /// Global dof indices of an element, point-major.
    pub fn element_dofs(&self, element: usize) -> Vec<usize> {
        self.topology.elements[element]
            .support
            .iter()
            .flat_map(|&p| (0..DOFS_PER_POINT).map(move |d| DOFS_PER_POINT * p + d))
            .collect()
    }

    /// Area from the cached quadrature.
    pub fn area(&self) -> f64 {
        self.points.iter().flatten().map(|q| q.weight).sum()
    }

    /// Displacements, generalized strains and position at `(xi, eta)`.
    pub fn evaluate(&self, xi: f64, eta: f64, solution: &[f64]) -> Result<FieldSample> {
        if solution.len() != self.dofs.len() {
            return Err(Error::Internal(format!(
                "solution has {} entries, mesh has {} dofs",
                solution.len(),
                self.dofs.len()
            )));
        }
        let sf = self.patch.shape_functions(xi, eta)?;
        let mut s = FieldSample {
            point: sf.point,
            displacement: [0.0; DOFS_PER_POINT],
            membrane_strain: Vector3::zeros(),
            curvature: Vector3::zeros(),
        };
        for (k, &p) in sf.support.iter().enumerate() {
            let d = &solution[DOFS_PER_POINT * p..DOFS_PER_POINT * (p + 1)];
            for i in 0..DOFS_PER_POINT {
                s.displacement[i] += sf.values[k] * d[i];
            }
            let (nx, ny) = (sf.dx[k], sf.dy[k]);
            s.membrane_strain += Vector3::new(nx * d[0], ny * d[1], ny * d[0] + nx * d[1]);
            s.curvature += Vector3::new(nx * d[3], ny * d[4], ny * d[3] + nx * d[4]);
        }
        Ok(s)
    }
}

/// Solution fields at one point of the mid-surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: [f64; 2],
    /// `(u, v, w, theta_x, theta_y)`.
    pub displacement: [f64; DOFS_PER_POINT],
    pub membrane_strain: Vector3<f64>,
    pub curvature: Vector3<f64>,
}

fn to_dense3(m: &nalgebra::Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 3, m.as_slice())
}

/// Strain-displacement operators `(membrane, bending, shear)` at a point.
fn strain_operators(sf: &ShapeFunctions) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let nd = DOFS_PER_POINT * sf.support.len();
    let mut bp = DMatrix::zeros(3, nd);
    let mut bb = DMatrix::zeros(3, nd);
    let mut bs = DMatrix::zeros(2, nd);
    for k in 0..sf.support.len() {
        let c = DOFS_PER_POINT * k;
        let (n, nx, ny) = (sf.values[k], sf.dx[k], sf.dy[k]);
        bp[(0, c)] = nx;
        bp[(1, c + 1)] = ny;
        bp[(2, c)] = ny;
        bp[(2, c + 1)] = nx;
        bb[(0, c + 3)] = nx;
        bb[(1, c + 4)] = ny;
        bb[(2, c + 3)] = ny;
        bb[(2, c + 4)] = nx;
        bs[(0, c + 2)] = nx;
        bs[(0, c + 3)] = n;
        bs[(1, c + 2)] = ny;
        bs[(1, c + 4)] = n;
    }
    (bp, bb, bs)
}

/// Element stiffness from membrane, coupling, bending and shear energy.
pub fn element_stiffness(disc: &Discretization, element: usize, section: &PlateSection) -> DMatrix<f64> {
    let a = to_dense3(&section.a);
    let b = to_dense3(&section.b);
    let d = to_dense3(&section.d);
    let e = DMatrix::from_column_slice(2, 2, section.shear.as_slice());
    let nd = DOFS_PER_POINT * disc.topology.elements[element].support.len();
    let mut ke = DMatrix::zeros(nd, nd);
    for qp in disc.quadrature(element) {
        let (bp, bb, bs) = strain_operators(&qp.shape);
        let n = &a * &bp + &b * &bb;
        let m = &b * &bp + &d * &bb;
        let q = &e * &bs;
        ke += (bp.transpose() * n + bb.transpose() * m + bs.transpose() * q) * qp.weight;
    }
    ke
}

/// Consistent mass: translational inertia on `u, v, w`, rotary on the rotations.
pub fn element_mass(disc: &Discretization, element: usize, section: &PlateSection) -> DMatrix<f64> {
    let nl = disc.topology.elements[element].support.len();
    let mut me = DMatrix::zeros(DOFS_PER_POINT * nl, DOFS_PER_POINT * nl);
    for qp in disc.quadrature(element) {
        let r = &qp.shape.values;
        for i in 0..nl {
            for j in 0..nl {
                let base = r[i] * r[j] * qp.weight;
                for dof in 0..3 {
                    me[(5 * i + dof, 5 * j + dof)] += base * section.mass;
                }
                for dof in 3..5 {
                    me[(5 * i + dof, 5 * j + dof)] += base * section.rotary_inertia;
                }
            }
        }
    }
    me
}

/// Geometric stiffness of the in-plane resultant tensor `prestress`
/// (`[[N_xx, N_xy], [N_xy, N_yy]]`); the rotation gradients enter with the
/// weight `h^2 / 12`.
pub fn element_geometric(disc: &Discretization, element: usize, prestress: &Matrix2<f64>, h: f64) -> DMatrix<f64> {
    let nl = disc.topology.elements[element].support.len();
    let mut kg = DMatrix::zeros(DOFS_PER_POINT * nl, DOFS_PER_POINT * nl);
    if prestress.iter().all(|&v| v == 0.0) {
        return kg;
    }
    let rot = h * h / 12.0;
    for qp in disc.quadrature(element) {
        let sf = &qp.shape;
        for i in 0..nl {
            for j in 0..nl {
                let gi = [sf.dx[i], sf.dy[i]];
                let gj = [sf.dx[j], sf.dy[j]];
                let mut g = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        g += gi[r] * prestress[(r, c)] * gj[c];
                    }
                }
                g *= qp.weight;
                kg[(5 * i + 2, 5 * j + 2)] += g;
                kg[(5 * i + 3, 5 * j + 3)] += rot * g;
                kg[(5 * i + 4, 5 * j + 4)] += rot * g;
            }
        }
    }
    kg
}

/// Piston-theory aerodynamic operator per unit pressure parameter:
/// `int N_a (N_b,x cos t + N_b,y sin t)` on the deflection unknowns.
pub fn element_aero(disc: &Discretization, element: usize, flow_angle_deg: f64) -> DMatrix<f64> {
    let (s, c) = flow_angle_deg.to_radians().sin_cos();
    let nl = disc.topology.elements[element].support.len();
    let mut ae = DMatrix::zeros(DOFS_PER_POINT * nl, DOFS_PER_POINT * nl);
    for qp in disc.quadrature(element) {
        let sf = &qp.shape;
        for i in 0..nl {
            for j in 0..nl {
                ae[(5 * i + 2, 5 * j + 2)] += sf.values[i] * (sf.dx[j] * c + sf.dy[j] * s) * qp.weight;
            }
        }
    }
    ae
}

/// Aerodynamic damping operator `int N_a N_b` on the deflection unknowns.
pub fn element_aero_damping(disc: &Discretization, element: usize) -> DMatrix<f64> {
    let nl = disc.topology.elements[element].support.len();
    let mut ce = DMatrix::zeros(DOFS_PER_POINT * nl, DOFS_PER_POINT * nl);
    for qp in disc.quadrature(element) {
        let r = &qp.shape.values;
        for i in 0..nl {
            for j in 0..nl {
                ce[(5 * i + 2, 5 * j + 2)] += r[i] * r[j] * qp.weight;
            }
        }
    }
    ce
}

/// Consistent nodal forces of a uniform transverse pressure.
pub fn element_load(disc: &Discretization, element: usize, pressure: f64) -> Vec<f64> {
    let nl = disc.topology.elements[element].support.len();
    let mut fe = vec![0.0; DOFS_PER_POINT * nl];
    for qp in disc.quadrature(element) {
        for i in 0..nl {
            fe[5 * i + 2] += qp.shape.values[i] * pressure * qp.weight;
        }
    }
    fe
}

/// Equivalent nodal forces of the thermal resultants of `section`.
pub fn element_thermal_load(disc: &Discretization, element: usize, section: &PlateSection) -> Vec<f64> {
    let nl = disc.topology.elements[element].support.len();
    let n = nalgebra::DVector::from_column_slice(section.thermal_force.as_slice());
    let m = nalgebra::DVector::from_column_slice(section.thermal_moment.as_slice());
    let mut fe = nalgebra::DVector::zeros(DOFS_PER_POINT * nl);
    for qp in disc.quadrature(element) {
        let (bp, bb, _) = strain_operators(&qp.shape);
        fe += (bp.transpose() * &n + bb.transpose() * &m) * qp.weight;
    }
    fe.as_slice().to_vec()
}

/// Scatter-adds element matrices into a band matrix. Element matrices are
/// computed in parallel; the scatter is serial.
pub fn assemble<F>(disc: &Discretization, symmetric: bool, element_matrix: F) -> Result<BandMatrix>
where
    F: Fn(usize) -> Result<DMatrix<f64>> + Sync,
{
    let mats: Vec<DMatrix<f64>> =
        (0..disc.num_elements()).into_par_iter().map(&element_matrix).collect::<Result<_>>()?;
    let bw = disc.half_bandwidth();
    let mut global = BandMatrix::symmetric_zeros(disc.dofs.len(), bw);
    for (e, ke) in mats.iter().enumerate() {
        let dofs = disc.element_dofs(e);
        if ke.nrows() != dofs.len() || ke.ncols() != dofs.len() {
            return Err(Error::Internal(format!(
                "element {e} matrix is {}x{}, expected {}",
                ke.nrows(),
                ke.ncols(),
                dofs.len()
            )));
        }
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                let v = ke[(i, j)];
                if v != 0.0 {
                    global.add(gi, gj, v)?;
                }
            }
        }
    }
    if symmetric {
        let asym = global.asymmetry();
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::Internal(format!(
                "assembled matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOLERANCE:.0e}"
            )));
        }
        global.symmetrize();
    }
    Ok(global)
}

pub fn assemble_vector<F>(disc: &Discretization, element_vector: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Vec<f64>,
{
    let mut global = vec![0.0; disc.dofs.len()];
    for e in 0..disc.num_elements() {
        for (v, g) in element_vector(e).into_iter().zip(disc.element_dofs(e)) {
            global[g] += v;
        }
    }
    Ok(global)
}

/// Stiffness with the shear factor evaluated per element size.
pub fn stiffness_matrix(
    disc: &Discretization,
    section: &PlateSection,
    shear: &ShearCorrection,
    h: f64,
) -> Result<BandMatrix> {
    assemble(disc, true, |e| {
        let s = section.for_element(shear, h, disc.diameter(e));
        Ok(element_stiffness(disc, e, &s))
    })
}

pub fn mass_matrix(disc: &Discretization, section: &PlateSection) -> Result<BandMatrix> {
    assemble(disc, true, |e| Ok(element_mass(disc, e, section)))
}

pub fn geometric_matrix(disc: &Discretization, prestress: &Matrix2<f64>, h: f64) -> Result<BandMatrix> {
    assemble(disc, true, |e| Ok(element_geometric(disc, e, prestress, h)))
}

pub fn aero_matrix(disc: &Discretization, flow_angle_deg: f64) -> Result<BandMatrix> {
    assemble(disc, false, |e| Ok(element_aero(disc, e, flow_angle_deg)))
}

pub fn aero_damping_matrix(disc: &Discretization) -> Result<BandMatrix> {
    assemble(disc, true, |e| Ok(element_aero_damping(disc, e)))
}

pub fn uniform_load_vector(disc: &Discretization, pressure: f64) -> Result<Vec<f64>> {
    assemble_vector(disc, |e| element_load(disc, e, pressure))
}

pub fn thermal_load_vector(disc: &Discretization, section: &PlateSection) -> Result<Vec<f64>> {
    assemble_vector(disc, |e| element_thermal_load(disc, e, section))
}

/// Assembled plate operators. Optional members are present only when the
/// analysis needs them.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub stiffness: BandMatrix,
    pub mass: Option<BandMatrix>,
    pub geometric: Option<BandMatrix>,
    pub aero: Option<BandMatrix>,
    pub aero_damping: Option<BandMatrix>,
    pub load: Option<Vec<f64>>,
}

impl GlobalSystem {
    pub fn new(stiffness: BandMatrix) -> Self {
        Self { stiffness, mass: None, geometric: None, aero: None, aero_damping: None, load: None }
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }
}

/// 5x5 nodal rotation with `[[c, s], [-s, c]]` blocks on `(u, v)` and
/// `(theta_x, theta_y)`; local = `L` global.
pub fn nodal_transform(angle_deg: f64) -> Matrix5<f64> {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let mut l = Matrix5::identity();
    for off in [0, 3] {
        l[(off, off)] = c;
        l[(off, off + 1)] = s;
        l[(off + 1, off)] = -s;
        l[(off + 1, off + 1)] = c;
    }
    l
}

/// Congruence `T A T^T` rotating the unknowns of `points` into the local
/// frame `transform`.
pub fn apply_skew_transform(matrix: &BandMatrix, points: &[usize], transform: &Matrix5<f64>) -> Result<BandMatrix> {
    let n = matrix.dim();
    let mut rotated = vec![false; n / DOFS_PER_POINT];
    for &p in points {
        rotated[p] = true;
    }
    // Column j of T^T, i.e. the local dofs fed by global dof j.
    let feeds = |g: usize| -> Vec<(usize, f64)> {
        let p = g / DOFS_PER_POINT;
        let d = g % DOFS_PER_POINT;
        if rotated[p] {
            (0..DOFS_PER_POINT)
                .filter(|&r| transform[(r, d)] != 0.0)
                .map(|r| (DOFS_PER_POINT * p + r, transform[(r, d)]))
                .collect()
        } else {
            vec![(g, 1.0)]
        }
    };
    let mut out = BandMatrix::zeros(n, matrix.lower(), matrix.upper());
    for (i, j, v) in matrix.entries() {
        if v == 0.0 {
            continue;
        }
        for (i2, ci) in feeds(i) {
            for &(j2, cj) in &feeds(j) {
                out.add(i2, j2, ci * v * cj)?;
            }
        }
    }
    Ok(out)
}

/// Support condition of one plate edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeSupport {
    Free,
    SimplySupported,
    Clamped,
}

/// In-plane restraint on simply supported edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InPlaneRestraint {
    /// Both in-plane displacements held.
    #[default]
    Immovable,
    /// Only the displacement along the edge held.
    Tangential,
    /// Only the displacement normal to the edge held.
    Normal,
    /// In-plane displacements left free.
    Free,
}

/// Edge conditions in the order left (`xi = 0`), bottom (`eta = 0`),
/// right, top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub edges: [EdgeSupport; 4],
    pub in_plane: InPlaneRestraint,
}

impl BoundarySpec {
    pub fn uniform(support: EdgeSupport) -> Self {
        Self { edges: [support; 4], in_plane: InPlaneRestraint::default() }
    }

    pub fn simply_supported() -> Self {
        Self::uniform(EdgeSupport::SimplySupported)
    }

    pub fn clamped() -> Self {
        Self::uniform(EdgeSupport::Clamped)
    }

    pub fn with_in_plane(mut self, in_plane: InPlaneRestraint) -> Self {
        self.in_plane = in_plane;
        self
    }

    pub fn support(&self, edge: Edge) -> EdgeSupport {
        match edge {
            Edge::Left => self.edges[0],
            Edge::Bottom => self.edges[1],
            Edge::Right => self.edges[2],
            Edge::Top => self.edges[3],
        }
    }

    /// Four-letter code such as `SSSS` or `CFFF`.
    pub fn code(&self) -> String {
        self.edges
            .iter()
            .map(|e| match e {
                EdgeSupport::Free => 'F',
                EdgeSupport::SimplySupported => 'S',
                EdgeSupport::Clamped => 'C',
            })
            .collect()
    }
}

impl FromStr for BoundarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<char> = s.trim().chars().collect();
        if letters.len() != 4 {
            return Err(Error::Configuration(format!(
                "boundary code '{s}' must have exactly four letters from S, C, F"
            )));
        }
        let mut edges = [EdgeSupport::Free; 4];
        for (slot, c) in edges.iter_mut().zip(letters) {
            *slot = match c.to_ascii_uppercase() {
                'S' => EdgeSupport::SimplySupported,
                'C' => EdgeSupport::Clamped,
                'F' => EdgeSupport::Free,
                other => {
                    return Err(Error::Configuration(format!(
                        "unknown edge condition '{other}' in boundary code '{s}'"
                    )))
                }
            };
        }
        Ok(Self { edges, in_plane: InPlaneRestraint::default() })
    }
}

#[derive(Debug, Clone, Default)]
struct PointRestraint {
    w: bool,
    in_plane: Vec<[f64; 2]>,
    rotation: Vec<[f64; 2]>,
}

/// Pair status after collecting the constrained directions.
enum PairFreedom {
    Both,
    Along([f64; 2]),
    None,
}

fn pair_freedom(dirs: &[[f64; 2]]) -> PairFreedom {
    let Some(first) = dirs.first() else {
        return PairFreedom::Both;
    };
    for d in &dirs[1..] {
        if (first[0] * d[1] - first[1] * d[0]).abs() > 1e-9 {
            return PairFreedom::None;
        }
    }
    let len = first[0].hypot(first[1]);
    PairFreedom::Along([-first[1] / len, first[0] / len])
}

/// Numbers the free part of the unknown pair starting at `first`.
fn number_pair(first: usize, dirs: &[[f64; 2]], map: &mut [Option<(usize, f64)>], next: &mut usize) {
    match pair_freedom(dirs) {
        PairFreedom::Both => {
            map[first] = Some((*next, 1.0));
            map[first + 1] = Some((*next + 1, 1.0));
            *next += 2;
        }
        PairFreedom::Along(f) => {
            map[first] = (f[0] != 0.0).then_some((*next, f[0]));
            map[first + 1] = (f[1] != 0.0).then_some((*next, f[1]));
            *next += 1;
        }
        PairFreedom::None => {}
    }
}

/// Elimination of constrained unknowns.
///
/// A point whose edge frame is rotated keeps one unknown for a partially
/// restrained `(u, v)` or `(theta_x, theta_y)` pair: the component along the
/// unrestrained direction. Every global unknown therefore maps to at most one
/// reduced unknown, `global = coefficient * reduced`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    map: Vec<Option<(usize, f64)>>,
    num_free: usize,
}

impl Constraints {
    pub fn unconstrained(n: usize) -> Self {
        Self { map: (0..n).map(|i| Some((i, 1.0))).collect(), num_free: n }
    }

    pub fn build(disc: &Discretization, spec: &BoundarySpec) -> Result<Self> {
        let patch = &disc.patch;
        let mut state = vec![PointRestraint::default(); patch.num_control_points()];
        for edge in Edge::ALL {
            let support = spec.support(edge);
            if support == EdgeSupport::Free {
                continue;
            }
            let t = patch.edge_tangent(edge);
            for p in patch.edge_points(edge) {
                let s = &mut state[p];
                s.w = true;
                match support {
                    EdgeSupport::Clamped => {
                        s.in_plane.extend([[1.0, 0.0], [0.0, 1.0]]);
                        s.rotation.extend([[1.0, 0.0], [0.0, 1.0]]);
                    }
                    EdgeSupport::SimplySupported => {
                        s.rotation.push(t);
                        match spec.in_plane {
                            InPlaneRestraint::Immovable => s.in_plane.extend([[1.0, 0.0], [0.0, 1.0]]),
                            InPlaneRestraint::Tangential => s.in_plane.push(t),
                            InPlaneRestraint::Normal => s.in_plane.push([t[1], -t[0]]),
                            InPlaneRestraint::Free => {}
                        }
                    }
                    EdgeSupport::Free => unreachable!(),
                }
            }
        }
        let n = disc.dofs.len();
        let mut map = vec![None; n];
        let mut next = 0;
        for (p, s) in state.iter().enumerate() {
            let base = DOFS_PER_POINT * p;
            number_pair(base, &s.in_plane, &mut map, &mut next);
            if !s.w {
                map[base + 2] = Some((next, 1.0));
                next += 1;
            }
            number_pair(base + 3, &s.rotation, &mut map, &mut next);
        }
        if next == 0 {
            return Err(Error::Configuration("boundary conditions remove every unknown".into()));
        }
        Ok(Self { map, num_free: next })
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn num_full(&self) -> usize {
        self.map.len()
    }

    /// `T^T A T` in reduced numbering.
    pub fn reduce_matrix(&self, a: &BandMatrix) -> Result<BandMatrix> {
        if a.dim() != self.map.len() {
            return Err(Error::Internal("matrix size does not match the constraint map".into()));
        }
        let mut out = BandMatrix::zeros(self.num_free, a.lower(), a.upper());
        for (i, j, v) in a.entries() {
            if v == 0.0 {
                continue;
            }
            if let (Some((ri, ci)), Some((rj, cj))) = (self.map[i], self.map[j]) {
                out.add(ri, rj, ci * v * cj)?;
            }
        }
        Ok(out)
    }

    /// `T^T f`.
    pub fn reduce_vector(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_free];
        for (g, m) in self.map.iter().enumerate() {
            if let Some((r, c)) = m {
                out[*r] += c * f[g];
            }
        }
        out
    }

    /// `T x`: global unknowns from reduced ones.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|m| m.map_or(0.0, |(r, c)| c * x[r])).collect()
    }
}

/// Eliminates the constrained unknowns from every operator of `system`.
pub fn apply_bcs(system: &GlobalSystem, constraints: &Constraints) -> Result<GlobalSystem> {
    let reduce = |m: &Option<BandMatrix>| m.as_ref().map(|m| constraints.reduce_matrix(m)).transpose();
    Ok(GlobalSystem {
        stiffness: constraints.reduce_matrix(&system.stiffness)?,
        mass: reduce(&system.mass)?,
        geometric: reduce(&system.geometric)?,
        aero: reduce(&system.aero)?,
        aero_damping: reduce(&system.aero_damping)?,
        load: system.load.as_ref().map(|f| constraints.reduce_vector(f)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{FgmMaterial, Homogenization, PhaseProperties};
    use crate::plate_model::compute_section;

    fn fgm_section(h: f64) -> PlateSection {
        let mat =
            FgmMaterial::new(PhaseProperties::ALUMINA, PhaseProperties::ALUMINUM, 1.0, Homogenization::MoriTanaka)
                .unwrap();
        compute_section(&mat, h, &ShearCorrection::default(), 1.0, None).unwrap()
    }

    fn mesh(psi: f64, cp: usize) -> Discretization {
        let g = PlateGeometry { a: 1.0, b: 0.8, skew_deg: psi };
        Discretization::new(g, (2, 2), (cp, cp)).unwrap()
    }

    fn quad(m: &DMatrix<f64>, x: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        (v.transpose() * m * &v)[(0, 0)]
    }

    fn rigid_modes(disc: &Discretization, e: usize) -> Vec<Vec<f64>> {
        let pts = &disc.topology.elements[e].support;
        let cps = &disc.patch.control_points;
        let mk = |f: &dyn Fn([f64; 2]) -> [f64; 5]| -> Vec<f64> { pts.iter().flat_map(|&p| f(cps[p])).collect() };
        vec![
            mk(&|_| [1.0, 0.0, 0.0, 0.0, 0.0]),
            mk(&|_| [0.0, 1.0, 0.0, 0.0, 0.0]),
            mk(&|x| [-x[1], x[0], 0.0, 0.0, 0.0]),
            mk(&|_| [0.0, 0.0, 1.0, 0.0, 0.0]),
            mk(&|x| [0.0, 0.0, -x[0], 1.0, 0.0]),
            mk(&|x| [0.0, 0.0, -x[1], 0.0, 1.0]),
        ]
    }

    #[test]
    fn element_rigid_modes_have_no_energy() {
        let disc = mesh(20.0, 5);
        let section = fgm_section(0.05);
        for e in 0..disc.num_elements() {
            let ke = element_stiffness(&disc, e, &section);
            let scale = ke.amax();
            for mode in rigid_modes(&disc, e) {
                let kd = &ke * nalgebra::DVector::from_column_slice(&mode);
                assert!(kd.amax() < 1e-9 * scale, "element {e}");
            }
        }
    }

    #[test]
    fn total_mass_and_load() {
        let disc = mesh(30.0, 6);
        let section = fgm_section(0.02);
        let area = 0.8 * 30f64.to_radians().cos();
        let m = mass_matrix(&disc, &section).unwrap();
        let ones: Vec<f64> = (0..disc.dofs.num_points()).flat_map(|_| [0.0, 0.0, 1.0, 0.0, 0.0]).collect();
        let mw = m.mul_vec(&ones);
        let total: f64 = ones.iter().zip(&mw).map(|(a, b)| a * b).sum();
        assert!((total - section.mass * area).abs() < 1e-12 * section.mass * area);
        let f = uniform_load_vector(&disc, 3.5).unwrap();
        let sum: f64 = f.iter().sum();
        assert!((sum - 3.5 * area).abs() < 1e-12 * 3.5 * area);
        assert!(uniform_load_vector(&disc, 0.0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_prestress_gives_zero_geometric_matrix() {
        let disc = mesh(0.0, 4);
        let kg = element_geometric(&disc, 0, &Matrix2::zeros(), 0.1);
        assert_eq!(kg.amax(), 0.0);
    }

    #[test]
    fn aero_matrix_is_unsymmetric_and_kills_constants() {
        let disc = mesh(0.0, 4);
        let ae = element_aero(&disc, 0, 0.0);
        assert!((&ae - ae.transpose()).amax() > 1e-6 * ae.amax());
        let constant: Vec<f64> = (0..9).flat_map(|_| [0.0, 0.0, 1.0, 0.0, 0.0]).collect();
        let col = &ae * nalgebra::DVector::from_column_slice(&constant);
        assert!(col.amax() < 1e-13);
    }

    #[test]
    fn geometric_energy_matches_direct_quadrature() {
        // Uniform N_xx = 1 on one element, a smooth field sampled at the control points.
        let disc = mesh(0.0, 3);
        let h = 0.1;
        let kg = element_geometric(&disc, 0, &Matrix2::new(1.0, 0.0, 0.0, 0.0), h);
        let cps = &disc.patch.control_points;
        let x: Vec<f64> = disc.topology.elements[0]
            .support
            .iter()
            .flat_map(|&p| {
                let [a, b] = cps[p];
                [0.0, 0.0, a * a + b, a * b, 2.0 * a]
            })
            .collect();
        let mut direct = 0.0;
        for qp in disc.quadrature(0) {
            let sf = &qp.shape;
            let (mut wx, mut tx, mut ty) = (0.0, 0.0, 0.0);
            for k in 0..sf.support.len() {
                wx += sf.dx[k] * x[5 * k + 2];
                tx += sf.dx[k] * x[5 * k + 3];
                ty += sf.dx[k] * x[5 * k + 4];
            }
            direct += qp.weight * (wx * wx + h * h / 12.0 * (tx * tx + ty * ty));
        }
        assert!((quad(&kg, &x) - direct).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn unconstrained_stiffness_has_six_rigid_modes() {
        let disc = mesh(15.0, 4);
        let section = fgm_section(0.05);
        let k = stiffness_matrix(&disc, &section, &ShearCorrection::default(), 0.05).unwrap().to_dense();
        let ev = nalgebra::SymmetricEigen::new(k).eigenvalues;
        let max = ev.amax();
        let small = ev.iter().filter(|&&v| v.abs() < 1e-8 * max).count();
        assert_eq!(small, 6);
        assert!(ev.iter().all(|&v| v > -1e-8 * max));
    }

    #[test]
    fn boundary_code_round_trip() {
        let spec: BoundarySpec = "cfff".parse().unwrap();
        assert_eq!(spec.code(), "CFFF");
        assert!("SSS".parse::<BoundarySpec>().is_err());
        assert!("SSXS".parse::<BoundarySpec>().is_err());
    }

    #[test]
    fn clamped_removes_all_edge_unknowns() {
        let disc = mesh(0.0, 5);
        let c = Constraints::build(&disc, &BoundarySpec::clamped()).unwrap();
        assert_eq!(c.num_free(), 5 * 9);
        let free = Constraints::build(&disc, &BoundarySpec::uniform(EdgeSupport::Free)).unwrap();
        assert_eq!(free.num_free(), 5 * 25);
    }

    #[test]
    fn nodal_transform_is_orthogonal() {
        let l = nodal_transform(37.0);
        assert!((l.transpose() * l - Matrix5::identity()).amax() < 1e-15);
        assert_eq!(nodal_transform(0.0), Matrix5::identity());
    }

    #[test]
    fn constraint_map_equals_transform_then_delete() {
        // Skew left edge of a simply supported plate with tangential in-plane restraint.
        let psi = 30.0;
        let disc = mesh(psi, 4);
        let section = fgm_section(0.05);
        let k = stiffness_matrix(&disc, &section, &ShearCorrection::default(), 0.05).unwrap();
        let spec = BoundarySpec {
            edges: [EdgeSupport::SimplySupported, EdgeSupport::Free, EdgeSupport::Free, EdgeSupport::Free],
            in_plane: InPlaneRestraint::Tangential,
        };
        let c = Constraints::build(&disc, &spec).unwrap();
        let reduced = c.reduce_matrix(&k).unwrap().to_dense();
        // Local frame whose second axis is the edge tangent (sin psi, cos psi).
        let l = nodal_transform(-psi);
        let pts = disc.patch.edge_points(Edge::Left);
        let rotated = apply_skew_transform(&k, &pts, &l).unwrap().to_dense();
        let mut keep = Vec::new();
        for p in 0..disc.dofs.num_points() {
            for d in 0..5 {
                let on_edge = pts.contains(&p);
                let drop = on_edge && (d == 1 || d == 2 || d == 4);
                if !drop {
                    keep.push(5 * p + d);
                }
            }
        }
        assert_eq!(keep.len(), reduced.nrows());
        let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| rotated[(keep[i], keep[j])]);
        // The two bases may differ by the sign of a free direction, which is
        // an orthogonal similarity: diagonals and spectra must agree.
        let scale = sub.amax();
        for i in 0..keep.len() {
            assert!((reduced[(i, i)] - sub[(i, i)]).abs() < 1e-10 * scale, "diagonal {i}");
        }
        let mut e1: Vec<f64> = nalgebra::SymmetricEigen::new(reduced).eigenvalues.iter().cloned().collect();
        let mut e2: Vec<f64> = nalgebra::SymmetricEigen::new(sub).eigenvalues.iter().cloned().collect();
        e1.sort_by(f64::total_cmp);
        e2.sort_by(f64::total_cmp);
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn skew_transform_preserves_spectrum() {
        let disc = mesh(10.0, 3);
        let section = fgm_section(0.1);
        let k = stiffness_matrix(&disc, &section, &ShearCorrection::default(), 0.1).unwrap();
        let pts: Vec<usize> = (0..disc.dofs.num_points()).step_by(2).collect();
        let r = apply_skew_transform(&k, &pts, &nodal_transform(25.0)).unwrap();
        let mut e1: Vec<f64> = nalgebra::SymmetricEigen::new(k.to_dense()).eigenvalues.iter().cloned().collect();
        let mut e2: Vec<f64> = nalgebra::SymmetricEigen::new(r.to_dense()).eigenvalues.iter().cloned().collect();
        e1.sort_by(f64::total_cmp);
        e2.sort_by(f64::total_cmp);
        let scale = e1[e1.len() - 1];
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn reduced_system_is_positive_definite() {
        let disc = mesh(45.0, 5);
        let section = fgm_section(0.05);
        let k = stiffness_matrix(&disc, &section, &ShearCorrection::default(), 0.05).unwrap();
        for spec in [BoundarySpec::simply_supported(), BoundarySpec::clamped()] {
            for ip in [InPlaneRestraint::Immovable, InPlaneRestraint::Tangential] {
                let c = Constraints::build(&disc, &spec.with_in_plane(ip)).unwrap();
                assert!(c.reduce_matrix(&k).unwrap().cholesky().is_ok());
            }
        }
    }
}
