//! Finite elements used by the three plate schemes.
//!
//! Every element is a Ciarlet triple built directly on a physical (affine)
//! cell: a spanning set of polynomials, a list of degree-of-freedom
//! functionals, and the dual basis obtained by inverting the generalized
//! Vandermonde matrix. Edge functionals are taken with respect to the
//! global edge orientation and normal, so two cells sharing an edge see the
//! same functional and inter-cell continuity follows from sharing the dof.
//! No Piola transforms are involved.
//!
//! A [`RefElement`] is the same construction on the reference cell with
//! local orientation.

mod families;

use nalgebra::DMatrix;

pub use families::{bdm_span_dim, hhj_span_dim, rt_span_dim};

use crate::error::{Error, Result};
use crate::mesh::{CellKind, Mesh};
use crate::poly::{shifted_legendre, Jet, Poly2, PolyJet};
use crate::quadrature::{gauss_legendre, quad_rule};

/// Value type of an element or field. Tensors are stored as four
/// components `[m11, m12, m21, m22]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueShape {
    Scalar,
    Vector,
    SymmetricTensor,
    SkewTensor,
    Tensor,
}

impl ValueShape {
    pub fn components(self) -> usize {
        match self {
            ValueShape::Scalar => 1,
            ValueShape::Vector => 2,
            _ => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Continuity {
    C0,
    NormalTrace,
    NormalNormalTrace,
    Discontinuous,
}

/// Topological entity a dof is attached to. Ids are global on mesh cells
/// and local on the reference cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Vertex(usize),
    Edge(usize),
    Cell(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Scalar or vector/tensor element family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `P_k` on triangles or the tensor space `N_k` on squares.
    Lagrange { cell: CellKind, degree: usize, continuous: bool },
    /// `N_k` on squares, continuous only across edges normal to `axis`.
    /// This is one component of a square H(div) vector field.
    Directional { degree: usize, axis: Axis },
    /// Raviart-Thomas of order `r`: `(P_r)^2 + x P_r`, dimension `(r+1)(r+3)`.
    RaviartThomas { order: usize },
    /// Brezzi-Douglas-Marini of order `r >= 1`: full `(P_r)^2`.
    Bdm { order: usize },
    /// Hellan-Herrmann-Johnson of order `r`: `P_r(S)`, normal-normal continuous.
    Hhj { order: usize },
}

impl Family {
    pub fn cell_kind(&self) -> CellKind {
        match *self {
            Family::Lagrange { cell, .. } => cell,
            Family::Directional { .. } => CellKind::Square,
            _ => CellKind::Triangle,
        }
    }

    pub fn value_shape(&self) -> ValueShape {
        match self {
            Family::Lagrange { .. } | Family::Directional { .. } => ValueShape::Scalar,
            Family::RaviartThomas { .. } | Family::Bdm { .. } => ValueShape::Vector,
            Family::Hhj { .. } => ValueShape::SymmetricTensor,
        }
    }

    /// Highest polynomial degree per variable (squares) or total degree.
    pub fn degree(&self) -> usize {
        match *self {
            Family::Lagrange { degree, .. } | Family::Directional { degree, .. } => degree,
            Family::RaviartThomas { order } => order + 1,
            Family::Bdm { order } | Family::Hhj { order } => order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Lagrange { continuous: true, degree: 0, .. } => Err(Error::UnsupportedElement(
                "continuous Lagrange elements need degree >= 1".into(),
            )),
            Family::Directional { degree: 0, .. } => {
                Err(Error::UnsupportedElement("directional elements need degree >= 1".into()))
            }
            Family::Bdm { order: 0 } => Err(Error::UnsupportedElement("BDM elements need order >= 1".into())),
            _ => Ok(()),
        }
    }
}

/// How a part's values are placed into the components of its field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Embedding {
    Identity,
    Component(usize),
    Components([usize; 2]),
    /// Scalar placed in both off-diagonal tensor slots.
    SymmetricOffDiagonal,
    /// Scalar `r` placed as `[[0, r], [-r, 0]]`.
    Skew,
}

impl Embedding {
    fn embed(&self, src: &[Poly2], ncomp: usize) -> Vec<Poly2> {
        let mut out = vec![Poly2::zero(); ncomp];
        match *self {
            Embedding::Identity => out.clone_from_slice(src),
            Embedding::Component(c) => out[c] = src[0].clone(),
            Embedding::Components([a, b]) => {
                out[a] = src[0].clone();
                out[b] = src[1].clone();
            }
            Embedding::SymmetricOffDiagonal => {
                out[1] = src[0].clone();
                out[2] = src[0].clone();
            }
            Embedding::Skew => {
                out[1] = src[0].clone();
                out[2] = src[0].scale(-1.0);
            }
        }
        out
    }
}

/// A field's element: one or more families glued component-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeElement {
    pub shape: ValueShape,
    pub parts: Vec<(Family, Embedding)>,
}

impl CompositeElement {
    pub fn single(family: Family) -> Self {
        Self {
            shape: family.value_shape(),
            parts: vec![(family, Embedding::Identity)],
        }
    }

    /// Two copies of a scalar family, one per vector component.
    pub fn vector_of(family: Family) -> Self {
        Self {
            shape: ValueShape::Vector,
            parts: vec![(family, Embedding::Component(0)), (family, Embedding::Component(1))],
        }
    }

    pub fn components(&self) -> usize {
        self.shape.components()
    }

    pub fn cell_kind(&self) -> CellKind {
        self.parts[0].0.cell_kind()
    }

    pub fn max_degree(&self) -> usize {
        self.parts.iter().map(|(f, _)| f.degree()).max().unwrap_or(0)
    }
}

/// Bécache-Joly-Tsogka stress element of degree `k` on squares: `m12` is
/// continuous `N_k`; `(m11, m22)` is an H(div) pair of `N_k` components.
pub fn bjt_stress_element(degree: usize) -> Result<CompositeElement> {
    if degree == 0 {
        return Err(Error::UnsupportedElement("BJT stress element needs degree >= 1".into()));
    }
    Ok(CompositeElement {
        shape: ValueShape::SymmetricTensor,
        parts: vec![
            (Family::Directional { degree, axis: Axis::X }, Embedding::Component(0)),
            (
                Family::Lagrange { cell: CellKind::Square, degree, continuous: true },
                Embedding::SymmetricOffDiagonal,
            ),
            (Family::Directional { degree, axis: Axis::Y }, Embedding::Component(3)),
        ],
    })
}

/// Square H(div) vector field with `N_k` components.
pub fn square_hdiv_element(degree: usize) -> Result<CompositeElement> {
    if degree == 0 {
        return Err(Error::UnsupportedElement("square H(div) element needs degree >= 1".into()));
    }
    Ok(CompositeElement {
        shape: ValueShape::Vector,
        parts: vec![
            (Family::Directional { degree, axis: Axis::X }, Embedding::Component(0)),
            (Family::Directional { degree, axis: Axis::Y }, Embedding::Component(1)),
        ],
    })
}

/// Tensor field whose two rows are BDM vector fields.
pub fn bdm_rows_element(order: usize) -> Result<CompositeElement> {
    let family = Family::Bdm { order };
    family.validate()?;
    Ok(CompositeElement {
        shape: ValueShape::Tensor,
        parts: vec![(family, Embedding::Components([0, 1])), (family, Embedding::Components([2, 3]))],
    })
}

/// Skew-symmetric tensor field with a discontinuous `P_r` scalar.
pub fn skew_element(degree: usize) -> CompositeElement {
    CompositeElement {
        shape: ValueShape::SkewTensor,
        parts: vec![(
            Family::Lagrange { cell: CellKind::Triangle, degree, continuous: false },
            Embedding::Skew,
        )],
    }
}

#[derive(Clone, Debug)]
pub struct EdgeContext {
    pub id: usize,
    /// Start and end in the edge's global orientation.
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Global edge normal.
    pub normal: [f64; 2],
    pub boundary: bool,
}

/// Everything an element needs to know about one cell.
#[derive(Clone, Debug)]
pub struct CellContext {
    pub kind: CellKind,
    pub cell: usize,
    pub vertices: Vec<[f64; 2]>,
    pub vertex_ids: Vec<usize>,
    pub vertex_boundary: Vec<bool>,
    /// Local edge `i` joins local vertices `i` and `i + 1`.
    pub edges: Vec<EdgeContext>,
}

impl CellContext {
    pub fn from_mesh(mesh: &Mesh, c: usize) -> Self {
        let vertex_ids = mesh.cell(c).to_vec();
        let vertices = vertex_ids.iter().map(|&v| mesh.vertices()[v]).collect();
        let vertex_boundary = vertex_ids.iter().map(|&v| mesh.is_boundary_vertex(v)).collect();
        let edges = mesh
            .cell_edges(c)
            .iter()
            .map(|&e| {
                let edge = mesh.edge(e);
                EdgeContext {
                    id: e,
                    start: mesh.vertices()[edge.vertices[0]],
                    end: mesh.vertices()[edge.vertices[1]],
                    normal: edge.normal,
                    boundary: edge.boundary,
                }
            })
            .collect();
        Self {
            kind: mesh.kind(),
            cell: c,
            vertices,
            vertex_ids,
            vertex_boundary,
            edges,
        }
    }

    /// Reference cell with counterclockwise local edges and outward normals.
    pub fn reference(kind: CellKind) -> Self {
        let vertices: Vec<[f64; 2]> = match kind {
            CellKind::Triangle => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            CellKind::Square => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        };
        let nv = vertices.len();
        let edges = (0..nv)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % nv]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                EdgeContext {
                    id: i,
                    start: a,
                    end: b,
                    normal: [(b[1] - a[1]) / len, -(b[0] - a[0]) / len],
                    boundary: true,
                }
            })
            .collect();
        Self {
            kind,
            cell: 0,
            vertex_ids: (0..nv).collect(),
            vertex_boundary: vec![true; nv],
            vertices,
            edges,
        }
    }

    fn jacobian(&self) -> [[f64; 2]; 2] {
        let v0 = self.vertices[0];
        let (a, b) = match self.kind {
            CellKind::Triangle => (self.vertices[1], self.vertices[2]),
            CellKind::Square => (self.vertices[1], self.vertices[3]),
        };
        [[a[0] - v0[0], b[0] - v0[0]], [a[1] - v0[1], b[1] - v0[1]]]
    }

    pub fn map(&self, r: [f64; 2]) -> [f64; 2] {
        let j = self.jacobian();
        let v0 = self.vertices[0];
        [v0[0] + j[0][0] * r[0] + j[0][1] * r[1], v0[1] + j[1][0] * r[0] + j[1][1] * r[1]]
    }

    pub fn det(&self) -> f64 {
        let j = self.jacobian();
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    pub fn area(&self) -> f64 {
        self.det().abs() * self.kind.reference().measure()
    }

    pub fn frame(&self) -> Frame {
        let nv = self.vertices.len() as f64;
        let cx = self.vertices.iter().map(|v| v[0]).sum::<f64>() / nv;
        let cy = self.vertices.iter().map(|v| v[1]).sum::<f64>() / nv;
        let scale = (0..self.vertices.len())
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(0.0, f64::max);
        Frame { origin: [cx, cy], scale }
    }

    /// Outward normal of local edge `i`.
    pub fn outward_normal(&self, i: usize) -> [f64; 2] {
        let nv = self.vertices.len();
        let (a, b) = (self.vertices[i], self.vertices[(i + 1) % nv]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        [(b[1] - a[1]) / len, -(b[0] - a[0]) / len]
    }

    /// Physical quadrature points and weights (weights include `|det J|`).
    pub fn quadrature(&self, exactness: usize) -> Result<Vec<([f64; 2], f64)>> {
        let rule = quad_rule(self.kind.reference(), exactness)?;
        let det = self.det().abs();
        Ok(rule.iter().map(|(r, w)| (self.map(r), w * det)).collect())
    }
}

/// Cell-local scaled coordinates `xi = (x - origin) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: [f64; 2],
    pub scale: f64,
}

impl Frame {
    #[inline]
    pub fn local(&self, x: [f64; 2]) -> [f64; 2] {
        [(x[0] - self.origin[0]) / self.scale, (x[1] - self.origin[1]) / self.scale]
    }
}

/// What a moment functional integrates against the test polynomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Trace {
    Normal,
    NormalNormal,
}

#[derive(Clone, Debug)]
pub enum Functional {
    /// Value of one component at a point.
    Point { at: [f64; 2], component: usize },
    /// `int_0^1 trace(u)(start + s (end - start)) P_j(s) ds`.
    EdgeMoment {
        start: [f64; 2],
        end: [f64; 2],
        normal: [f64; 2],
        trace: Trace,
        degree: usize,
    },
    /// `(1/|T|) int_T u : q` with `q` given in local coordinates.
    CellMoment { test: Vec<Poly2> },
}

fn eval_comps(f: &[Poly2], xi: [f64; 2]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (c, p) in f.iter().enumerate() {
        out[c] = p.eval(xi[0], xi[1]);
    }
    out
}

impl Functional {
    /// Applies the functional to a polynomial field given in `frame` coordinates.
    pub fn apply(&self, ctx: &CellContext, frame: &Frame, f: &[Poly2], poly_degree: usize) -> Result<f64> {
        Ok(match self {
            Functional::Point { at, component } => f[*component].eval(
                frame.local(*at)[0],
                frame.local(*at)[1],
            ),
            Functional::EdgeMoment { start, end, normal, trace, degree } => {
                let npts = (poly_degree + degree) / 2 + 1;
                let mut acc = 0.0;
                for (s, w) in gauss_legendre(npts) {
                    let x = [start[0] + s * (end[0] - start[0]), start[1] + s * (end[1] - start[1])];
                    let v = eval_comps(f, frame.local(x));
                    let t = match trace {
                        Trace::Normal => v[0] * normal[0] + v[1] * normal[1],
                        Trace::NormalNormal => {
                            normal[0] * (v[0] * normal[0] + v[1] * normal[1])
                                + normal[1] * (v[2] * normal[0] + v[3] * normal[1])
                        }
                    };
                    acc += w * t * shifted_legendre(*degree, s);
                }
                acc
            }
            Functional::CellMoment { test } => {
                let tdeg = test.iter().map(|p| p.total_degree()).max().unwrap_or(0);
                let exactness = match ctx.kind {
                    CellKind::Triangle => poly_degree + tdeg,
                    CellKind::Square => 2 * (poly_degree + tdeg),
                };
                let mut acc = 0.0;
                for (x, w) in ctx.quadrature(exactness)? {
                    let xi = frame.local(x);
                    let v = eval_comps(f, xi);
                    let q = eval_comps(test, xi);
                    acc += w * (0..f.len()).map(|c| v[c] * q[c]).sum::<f64>();
                }
                acc / ctx.area()
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct LocalDof {
    pub entity: Entity,
    /// Position among the dofs of the same entity.
    pub index: usize,
    pub continuity: Continuity,
    pub boundary: bool,
    pub functional: Functional,
}

/// Basis of one family on one cell.
#[derive(Clone, Debug)]
pub struct LocalBasis {
    pub family: Family,
    pub frame: Frame,
    pub ncomp: usize,
    /// `funcs[i][c]`: component `c` of basis function `i` in frame coordinates.
    pub funcs: Vec<Vec<Poly2>>,
    pub dofs: Vec<LocalDof>,
}

/// Spanning set and dofs of a family on a cell, before dualization.
pub(crate) struct ElementDefinition {
    pub ncomp: usize,
    pub span: Vec<Vec<Poly2>>,
    pub dofs: Vec<LocalDof>,
}

impl LocalBasis {
    pub fn build(family: Family, ctx: &CellContext) -> Result<Self> {
        family.validate()?;
        if family.cell_kind() != ctx.kind {
            return Err(Error::UnsupportedElement(format!(
                "{family:?} is not defined on {} cells",
                ctx.kind.name()
            )));
        }
        let frame = ctx.frame();
        let def = families::define(family, ctx);
        let n = def.span.len();
        if def.dofs.len() != n {
            return Err(Error::ElementConstruction(format!(
                "{family:?}: {} dofs for a span of dimension {n}",
                def.dofs.len()
            )));
        }
        let deg = family.degree();
        let mut v = DMatrix::<f64>::zeros(n, n);
        for (i, dof) in def.dofs.iter().enumerate() {
            for (s, span) in def.span.iter().enumerate() {
                v[(i, s)] = dof.functional.apply(ctx, &frame, span, deg)?;
            }
        }
        let inv = v.clone().try_inverse().ok_or_else(|| {
            Error::ElementConstruction(format!("{family:?}: dof functionals are not unisolvent"))
        })?;
        let funcs = (0..n)
            .map(|j| {
                let mut comps = vec![Poly2::zero(); def.ncomp];
                for s in 0..n {
                    let coef = inv[(s, j)];
                    if coef != 0.0 {
                        for c in 0..def.ncomp {
                            comps[c].add_scaled(coef, &def.span[s][c]);
                        }
                    }
                }
                comps
            })
            .collect();
        Ok(Self {
            family,
            frame,
            ncomp: def.ncomp,
            funcs,
            dofs: def.dofs,
        })
    }

    pub fn dim(&self) -> usize {
        self.funcs.len()
    }

    /// Matrix `dof_i(phi_j)`; the identity up to rounding.
    pub fn duality_matrix(&self, ctx: &CellContext) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, dof) in self.dofs.iter().enumerate() {
            for j in 0..n {
                m[(i, j)] = dof.functional.apply(ctx, &self.frame, &self.funcs[j], self.family.degree())?;
            }
        }
        Ok(m)
    }

    /// Applies every dof to a polynomial field in frame coordinates.
    pub fn interpolate(&self, ctx: &CellContext, f: &[Poly2], degree: usize) -> Result<Vec<f64>> {
        self.dofs
            .iter()
            .map(|d| d.functional.apply(ctx, &self.frame, f, degree.max(self.family.degree())))
            .collect()
    }

    pub fn embed(&self, embedding: Embedding, ncomp: usize) -> Vec<Vec<Poly2>> {
        self.funcs.iter().map(|f| embedding.embed(f, ncomp)).collect()
    }
}

/// Values and derivatives of a basis at a set of points.
///
/// Indexed as `[point][basis][component]`; derivatives are with respect to
/// the physical (or reference) coordinates the points are given in.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub num_points: usize,
    pub num_basis: usize,
    pub ncomp: usize,
    pub derivative_order: usize,
    pub jets: Vec<Jet>,
}

impl Tabulation {
    #[inline]
    pub fn jet(&self, point: usize, basis: usize, comp: usize) -> &Jet {
        &self.jets[(point * self.num_basis + basis) * self.ncomp + comp]
    }

    #[inline]
    pub fn value(&self, point: usize, basis: usize, comp: usize) -> f64 {
        self.jet(point, basis, comp).value
    }
}

/// Tabulates polynomial fields given in `frame` coordinates at physical points.
pub fn tabulate_funcs(
    funcs: &[Vec<Poly2>],
    frame: &Frame,
    points: &[[f64; 2]],
    derivative_order: usize,
) -> Result<Tabulation> {
    if derivative_order > 2 {
        return Err(Error::UnsupportedElement(format!(
            "derivative order {derivative_order} exceeds the supported maximum of 2"
        )));
    }
    let ncomp = funcs.first().map_or(1, |f| f.len());
    let inv = 1.0 / frame.scale;
    let mut jets = Vec::with_capacity(points.len() * funcs.len() * ncomp);
    let prepared: Vec<Vec<PolyJet>> = funcs
        .iter()
        .map(|f| f.iter().map(|p| PolyJet::new(p.clone())).collect())
        .collect();
    for &x in points {
        let xi = frame.local(x);
        for f in &prepared {
            for pj in f {
                let jet = if derivative_order == 0 {
                    Jet {
                        value: pj.p.eval(xi[0], xi[1]),
                        ..Jet::default()
                    }
                } else {
                    let j = pj.eval(xi[0], xi[1]);
                    Jet {
                        value: j.value,
                        grad: [j.grad[0] * inv, j.grad[1] * inv],
                        hess: [j.hess[0] * inv * inv, j.hess[1] * inv * inv, j.hess[2] * inv * inv],
                    }
                };
                jets.push(jet);
            }
        }
    }
    Ok(Tabulation {
        num_points: points.len(),
        num_basis: funcs.len(),
        ncomp,
        derivative_order,
        jets,
    })
}

/// An element on its reference cell.
#[derive(Clone, Debug)]
pub struct RefElement {
    pub family: Family,
    pub cell_kind: CellKind,
    pub value_shape: ValueShape,
    pub degree: usize,
    pub basis: LocalBasis,
    pub context: CellContext,
}

impl RefElement {
    pub fn new(family: Family) -> Result<Self> {
        let context = CellContext::reference(family.cell_kind());
        let basis = LocalBasis::build(family, &context)?;
        Ok(Self {
            family,
            cell_kind: family.cell_kind(),
            value_shape: family.value_shape(),
            degree: family.degree(),
            basis,
            context,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn dofs(&self) -> &[LocalDof] {
        &self.basis.dofs
    }

    pub fn tabulate(&self, points: &[[f64; 2]], derivative_order: usize) -> Result<Tabulation> {
        tabulate_funcs(&self.basis.funcs, &self.basis.frame, points, derivative_order)
    }
}

pub fn lagrange_element(cell: CellKind, degree: usize, continuous: bool) -> Result<RefElement> {
    RefElement::new(Family::Lagrange { cell, degree, continuous })
}

pub fn raviart_thomas_element(order: usize) -> Result<RefElement> {
    RefElement::new(Family::RaviartThomas { order })
}

pub fn bdm_element(order: usize) -> Result<RefElement> {
    RefElement::new(Family::Bdm { order })
}

pub fn hhj_element(order: usize) -> Result<RefElement> {
    RefElement::new(Family::Hhj { order })
}

pub fn tabulate(element: &RefElement, points: &[[f64; 2]], derivative_order: usize) -> Result<Tabulation> {
    element.tabulate(points, derivative_order)
}
