//! B-spline and NURBS bases, tensor-product patches and element extraction.
//!
//! Two evaluation routes are provided. [`bspline_basis`] and
//! [`basis_derivative`] evaluate a single function by the Cox-de Boor
//! recursion and are meant for checking. [`KnotVector::basis_ders`] computes
//! all non-zero functions on a span together with their first derivatives
//! and is what the assembly uses.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Non-decreasing knot sequence together with the polynomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Configuration("degree must be at least 1".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Configuration("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Configuration("knot vector must be non-decreasing".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Configuration(format!(
                "{} knots cannot support {} basis functions of degree {degree}",
                knots.len(),
                degree + 1
            )));
        }
        if knots[degree] >= knots[knots.len() - 1 - degree] {
            return Err(Error::Configuration("knot vector has an empty parameter domain".into()));
        }
        Ok(Self { knots, degree })
    }

    /// Open knot vector with uniformly spaced interior knots.
    pub fn open_uniform(degree: usize, num_basis: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Configuration("degree must be at least 1".into()));
        }
        if num_basis < degree + 1 {
            return Err(Error::Configuration(format!(
                "{num_basis} control points per direction cannot carry degree {degree}; need at least {}",
                degree + 1
            )));
        }
        let spans = num_basis - degree;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..spans).map(|k| k as f64 / spans as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(knots, degree)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// First and last knot of the valid parameter domain.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.num_basis()])
    }

    /// True when both ends repeat `p + 1` times.
    pub fn is_clamped(&self) -> bool {
        let p = self.degree;
        let n = self.knots.len();
        self.knots[..=p].iter().all(|&k| k == self.knots[0])
            && self.knots[n - p - 1..].iter().all(|&k| k == self.knots[n - 1])
    }

    /// Index `s` with `knots[s] <= xi < knots[s + 1]`; the right end of the
    /// domain belongs to the last non-empty span.
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        let tol = 1e-13 * (hi - lo);
        if !(xi >= lo - tol && xi <= hi + tol) {
            return Err(Error::Domain(format!("parameter {xi} outside [{lo}, {hi}]")));
        }
        let n = self.num_basis();
        if xi >= hi {
            let mut s = n - 1;
            while self.knots[s] >= self.knots[s + 1] {
                s -= 1;
            }
            return Ok(s);
        }
        let xi = xi.max(lo);
        // Binary search over [p, n).
        let (mut low, mut high) = (self.degree, n);
        while high - low > 1 {
            let mid = (low + high) / 2;
            if xi < self.knots[mid] {
                high = mid;
            } else {
                low = mid;
            }
        }
        Ok(low)
    }

    /// Values and first derivatives of the `p + 1` functions that are
    /// non-zero on `span`, i.e. `N_{span-p..=span}`.
    pub fn basis_ders(&self, span: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.degree;
        let u = &self.knots;
        // ndu[j][r]: upper triangle holds basis values, lower the knot differences.
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = xi - u[span + 1 - j];
            right[j] = u[span + j] - xi;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let values: Vec<f64> = (0..=p).map(|j| ndu[j][p]).collect();
        // First derivative: p * (N_{r,p-1}/(u_{r+p}-u_r) - N_{r+1,p-1}/(u_{r+p+1}-u_{r+1})).
        let mut ders = vec![0.0; p + 1];
        for r in 0..=p {
            let mut d = 0.0;
            if r >= 1 {
                d += ndu[r - 1][p - 1] / ndu[p][r - 1];
            }
            if r < p {
                d -= ndu[r][p - 1] / ndu[p][r];
            }
            ders[r] = d * p as f64;
        }
        (values, ders)
    }

    /// Distinct non-empty knot intervals `(span index, lo, hi)`.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        (self.degree..self.num_basis())
            .filter(|&s| self.knots[s] < self.knots[s + 1])
            .map(|s| (s, self.knots[s], self.knots[s + 1]))
            .collect()
    }

    /// Greville abscissae, one per basis function.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis()).map(|i| self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64).collect()
    }
}

/// `N_{i,p}(xi)` by the Cox-de Boor recursion, with `0/0 := 0`.
pub fn bspline_basis(kv: &KnotVector, i: usize, p: usize, xi: f64) -> Result<f64> {
    let u = kv.knots();
    if i + p + 1 >= u.len() {
        return Err(Error::Domain(format!(
            "basis index {i} of degree {p} needs knot {} but only {} exist",
            i + p + 1,
            u.len()
        )));
    }
    let (first, last) = (u[0], u[u.len() - 1]);
    if !(xi >= first && xi <= last) {
        return Err(Error::Domain(format!("parameter {xi} outside [{first}, {last}]")));
    }
    Ok(cox_de_boor(u, i, p, xi))
}

fn cox_de_boor(u: &[f64], i: usize, p: usize, xi: f64) -> f64 {
    if p == 0 {
        let last = u[u.len() - 1];
        let inside = u[i] <= xi && xi < u[i + 1];
        let closes_domain = xi == last && u[i + 1] == last && u[i] < u[i + 1];
        return if inside || closes_domain { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let d1 = u[i + p] - u[i];
    if d1 != 0.0 {
        value += (xi - u[i]) / d1 * cox_de_boor(u, i, p - 1, xi);
    }
    let d2 = u[i + p + 1] - u[i + 1];
    if d2 != 0.0 {
        value += (u[i + p + 1] - xi) / d2 * cox_de_boor(u, i + 1, p - 1, xi);
    }
    value
}

/// First derivative `dN_{i,p}/dxi` from the lower-degree recursion.
pub fn basis_derivative(kv: &KnotVector, i: usize, p: usize, xi: f64) -> Result<f64> {
    bspline_basis(kv, i, p, xi)?;
    if p == 0 {
        return Ok(0.0);
    }
    let u = kv.knots();
    let mut d = 0.0;
    let d1 = u[i + p] - u[i];
    if d1 != 0.0 {
        d += p as f64 / d1 * cox_de_boor(u, i, p - 1, xi);
    }
    let d2 = u[i + p + 1] - u[i + 1];
    if d2 != 0.0 {
        d -= p as f64 / d2 * cox_de_boor(u, i + 1, p - 1, xi);
    }
    Ok(d)
}

/// Rational tensor-product patch describing the plate mid-surface.
///
/// Control points are stored with the `xi` index running fastest:
/// `index = i + j * n_xi`.
#[derive(Debug, Clone)]
pub struct NurbsPatch {
    pub knots_xi: KnotVector,
    pub knots_eta: KnotVector,
    pub control_points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Rational basis functions on one span with parametric derivatives.
#[derive(Debug, Clone)]
pub struct RationalBasis {
    /// Global control point indices of the supported functions.
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub d_dxi: Vec<f64>,
    pub d_deta: Vec<f64>,
}

/// Mapped point with its Jacobian `d(x, y)/d(xi, eta)`.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub point: [f64; 2],
    pub jacobian: Matrix2<f64>,
}

/// Basis functions with physical derivatives at a point of the patch.
#[derive(Debug, Clone)]
pub struct ShapeFunctions {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub point: [f64; 2],
    pub det_jacobian: f64,
}

impl NurbsPatch {
    pub fn new(
        knots_xi: KnotVector,
        knots_eta: KnotVector,
        control_points: Vec<[f64; 2]>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let count = knots_xi.num_basis() * knots_eta.num_basis();
        if control_points.len() != count || weights.len() != count {
            return Err(Error::Configuration(format!(
                "control net has {} points and {} weights, knot vectors require {count}",
                control_points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Configuration("NURBS weights must be positive".into()));
        }
        Ok(Self { knots_xi, knots_eta, control_points, weights })
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.knots_xi.num_basis(), self.knots_eta.num_basis())
    }

    pub fn num_control_points(&self) -> usize {
        self.control_points.len()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.knots_xi.num_basis()
    }

    pub fn basis(&self, xi: f64, eta: f64) -> Result<RationalBasis> {
        let si = self.knots_xi.find_span(xi)?;
        let sj = self.knots_eta.find_span(eta)?;
        self.basis_on_span(si, sj, xi, eta)
    }

    fn basis_on_span(&self, si: usize, sj: usize, xi: f64, eta: f64) -> Result<RationalBasis> {
        let (p, q) = (self.knots_xi.degree(), self.knots_eta.degree());
        let (nx, dnx) = self.knots_xi.basis_ders(si, xi);
        let (ny, dny) = self.knots_eta.basis_ders(sj, eta);
        let len = (p + 1) * (q + 1);
        let mut support = Vec::with_capacity(len);
        let mut values = Vec::with_capacity(len);
        let mut d_dxi = Vec::with_capacity(len);
        let mut d_deta = Vec::with_capacity(len);
        let (mut w, mut w_xi, mut w_eta) = (0.0, 0.0, 0.0);
        for a in 0..=q {
            for b in 0..=p {
                let idx = self.index(si - p + b, sj - q + a);
                let wt = self.weights[idx];
                let (v, vx, ve) = (nx[b] * ny[a] * wt, dnx[b] * ny[a] * wt, nx[b] * dny[a] * wt);
                w += v;
                w_xi += vx;
                w_eta += ve;
                support.push(idx);
                values.push(v);
                d_dxi.push(vx);
                d_deta.push(ve);
            }
        }
        if !(w > 0.0) {
            return Err(Error::Geometry(format!("weight function vanishes at ({xi}, {eta})")));
        }
        for k in 0..len {
            let v = values[k];
            d_dxi[k] = (d_dxi[k] - v * w_xi / w) / w;
            d_deta[k] = (d_deta[k] - v * w_eta / w) / w;
            values[k] = v / w;
        }
        Ok(RationalBasis { support, values, d_dxi, d_deta })
    }

    fn map(&self, basis: &RationalBasis) -> SurfacePoint {
        let mut point = [0.0; 2];
        let mut jac = Matrix2::zeros();
        for (k, &idx) in basis.support.iter().enumerate() {
            let cp = self.control_points[idx];
            for d in 0..2 {
                point[d] += basis.values[k] * cp[d];
                jac[(d, 0)] += basis.d_dxi[k] * cp[d];
                jac[(d, 1)] += basis.d_deta[k] * cp[d];
            }
        }
        SurfacePoint { point, jacobian: jac }
    }

    /// Physical point and Jacobian at `(xi, eta)`.
    pub fn surface_eval(&self, xi: f64, eta: f64) -> Result<SurfacePoint> {
        let basis = self.basis(xi, eta)?;
        let sp = self.map(&basis);
        let det = sp.jacobian.determinant();
        if !(det > 0.0) {
            return Err(Error::Geometry(format!("Jacobian determinant {det} at ({xi}, {eta})")));
        }
        Ok(sp)
    }

    /// Basis functions with derivatives in physical coordinates.
    pub fn shape_functions(&self, xi: f64, eta: f64) -> Result<ShapeFunctions> {
        let si = self.knots_xi.find_span(xi)?;
        let sj = self.knots_eta.find_span(eta)?;
        self.shape_functions_on_span(si, sj, xi, eta)
    }

    pub(crate) fn shape_functions_on_span(&self, si: usize, sj: usize, xi: f64, eta: f64) -> Result<ShapeFunctions> {
        let basis = self.basis_on_span(si, sj, xi, eta)?;
        let sp = self.map(&basis);
        let det = sp.jacobian.determinant();
        if !(det > 0.0) {
            return Err(Error::Geometry(format!("Jacobian determinant {det} at ({xi}, {eta})")));
        }
        // [N_x, N_y]^T = J^{-T} [N_xi, N_eta]^T
        let inv =
            sp.jacobian.try_inverse().ok_or_else(|| Error::Geometry(format!("singular Jacobian at ({xi}, {eta})")))?;
        let n = basis.values.len();
        let mut dx = Vec::with_capacity(n);
        let mut dy = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = (basis.d_dxi[k], basis.d_deta[k]);
            dx.push(inv[(0, 0)] * a + inv[(1, 0)] * b);
            dy.push(inv[(0, 1)] * a + inv[(1, 1)] * b);
        }
        Ok(ShapeFunctions { support: basis.support, values: basis.values, dx, dy, point: sp.point, det_jacobian: det })
    }

    /// Knot-span elements and their supporting control points.
    pub fn topology(&self) -> ElementTopology {
        let (p, q) = (self.knots_xi.degree(), self.knots_eta.degree());
        let mut elements = Vec::new();
        for &(sj, e0, e1) in &self.knots_eta.spans() {
            for &(si, x0, x1) in &self.knots_xi.spans() {
                let mut support = Vec::with_capacity((p + 1) * (q + 1));
                for a in 0..=q {
                    for b in 0..=p {
                        support.push(self.index(si - p + b, sj - q + a));
                    }
                }
                elements.push(Element { span: (si, sj), xi: (x0, x1), eta: (e0, e1), support });
            }
        }
        ElementTopology { elements }
    }

    /// Largest diagonal of the element's physical image.
    pub fn element_diameter(&self, element: &Element) -> Result<f64> {
        let c = |xi: f64, eta: f64| self.surface_eval(xi, eta).map(|s| s.point);
        let (x0, x1) = element.xi;
        let (e0, e1) = element.eta;
        let d1 = dist(c(x0, e0)?, c(x1, e1)?);
        let d2 = dist(c(x1, e0)?, c(x0, e1)?);
        Ok(d1.max(d2))
    }

    /// Control point indices on one side of the patch, in order along it.
    pub fn edge_points(&self, edge: Edge) -> Vec<usize> {
        let (nx, ny) = self.counts();
        match edge {
            Edge::Left => (0..ny).map(|j| self.index(0, j)).collect(),
            Edge::Right => (0..ny).map(|j| self.index(nx - 1, j)).collect(),
            Edge::Bottom => (0..nx).map(|i| self.index(i, 0)).collect(),
            Edge::Top => (0..nx).map(|i| self.index(i, ny - 1)).collect(),
        }
    }

    /// Unit tangent of a (straight) boundary side, from its end control points.
    pub fn edge_tangent(&self, edge: Edge) -> [f64; 2] {
        let pts = self.edge_points(edge);
        let a = self.control_points[pts[0]];
        let b = self.control_points[pts[pts.len() - 1]];
        let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
        let len = tx.hypot(ty);
        [tx / len, ty / len]
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Boundary sides of a patch in parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Edge {
    /// `xi = 0`
    Left,
    /// `eta = 0`
    Bottom,
    /// `xi = 1`
    Right,
    /// `eta = 1`
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Bottom, Edge::Right, Edge::Top];
}

/// One non-zero knot span of the patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub span: (usize, usize),
    pub xi: (f64, f64),
    pub eta: (f64, f64),
    pub support: Vec<usize>,
}

impl Element {
    /// Tensor Gauss points as `(xi, eta, parametric weight)`; multiply the
    /// weight by `det J` for the physical area element.
    pub fn quadrature(&self, rule_xi: &GaussLegendre, rule_eta: &GaussLegendre) -> Vec<(f64, f64, f64)> {
        let mut pts = Vec::with_capacity(rule_xi.len() * rule_eta.len());
        for (eta, we) in rule_eta.mapped(self.eta.0, self.eta.1) {
            for (xi, wx) in rule_xi.mapped(self.xi.0, self.xi.1) {
                pts.push((xi, eta, wx * we));
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementTopology {
    pub elements: Vec<Element>,
}

impl ElementTopology {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// In-plane geometry of a rectangular or skew (parallelogram) plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateGeometry {
    /// Length along `x`, m.
    pub a: f64,
    /// Length of the inclined side, m.
    pub b: f64,
    /// Skew angle measured from the `y` axis, degrees.
    pub skew_deg: f64,
}

impl PlateGeometry {
    pub fn rectangle(a: f64, b: f64) -> Self {
        Self { a, b, skew_deg: 0.0 }
    }

    pub fn area(&self) -> f64 {
        self.a * self.b * self.skew_deg.to_radians().cos()
    }
}

/// Builds an open-uniform patch on the sheared lattice
/// `x = xi a + eta b sin(psi)`, `y = eta b cos(psi)` with unit weights.
///
/// Control points sit at the Greville abscissae so the geometry map is
/// exactly affine.
pub fn build_patch(
    geometry: &PlateGeometry,
    degree: (usize, usize),
    control_points: (usize, usize),
) -> Result<(NurbsPatch, ElementTopology)> {
    if !(geometry.a > 0.0 && geometry.b > 0.0) {
        return Err(Error::Configuration("plate side lengths must be positive".into()));
    }
    if !(geometry.skew_deg.abs() < 90.0) {
        return Err(Error::Configuration(format!(
            "skew angle must lie strictly between -90 and 90 degrees, got {}",
            geometry.skew_deg
        )));
    }
    let kx = KnotVector::open_uniform(degree.0, control_points.0)?;
    let ky = KnotVector::open_uniform(degree.1, control_points.1)?;
    let (gx, gy) = (kx.greville(), ky.greville());
    let psi = geometry.skew_deg.to_radians();
    let (s, c) = psi.sin_cos();
    let mut pts = Vec::with_capacity(gx.len() * gy.len());
    for &eta in &gy {
        for &xi in &gx {
            pts.push([xi * geometry.a + eta * geometry.b * s, eta * geometry.b * c]);
        }
    }
    let weights = vec![1.0; pts.len()];
    let patch = NurbsPatch::new(kx, ky, pts, weights)?;
    let topo = patch.topology();
    Ok((patch, topo))
}
