use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::constitutive::MaterialParams;
use super::space::FunctionSpace;
use crate::elements::{
    bdm_rows_element, bjt_stress_element, skew_element, square_hdiv_element, CellContext, CompositeElement, Family,
    Tabulation,
};
use crate::error::{Error, Result};
use crate::linalg::{
    defer_after_neighbours, lu_factor_with, nested_dissection, ColumnOrdering, CsrMatrix, Inertia, LuOptions,
    PivotMode, TripletBuilder,
};
use crate::mesh::{CellKind, Mesh};
use crate::quadrature::gauss_legendre;

/// Relative bound on `|M - M^T|` and `|J + J^T|`.
pub const STRUCTURE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Mindlin plate, strongly symmetric stresses on rectangles.
    Bjt,
    /// Mindlin plate, weakly symmetric stresses on triangles.
    Afw,
    /// Kirchhoff plate, normal-normal continuous moments on triangles.
    Hhj,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Bjt, Scheme::Afw, Scheme::Hhj];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Bjt => "bjt",
            Scheme::Afw => "afw",
            Scheme::Hhj => "hhj",
        }
    }

    pub fn cell_kind(self) -> CellKind {
        match self {
            Scheme::Bjt => CellKind::Square,
            Scheme::Afw | Scheme::Hhj => CellKind::Triangle,
        }
    }

    pub fn is_mindlin(self) -> bool {
        !matches!(self, Scheme::Hhj)
    }

    pub fn fields(self) -> &'static [FieldKind] {
        use FieldKind::*;
        match self {
            Scheme::Bjt => &[Velocity, AngularVelocity, Moment, Shear],
            Scheme::Afw => &[Velocity, AngularVelocity, Moment, Shear, Multiplier],
            Scheme::Hhj => &[Velocity, Moment],
        }
    }

    pub fn default_params(self) -> MaterialParams {
        if self.is_mindlin() {
            MaterialParams::thick_plate()
        } else {
            MaterialParams::thin_plate()
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bjt" => Ok(Scheme::Bjt),
            "afw" => Ok(Scheme::Afw),
            "hhj" => Ok(Scheme::Hhj),
            other => Err(Error::Config(format!("unknown scheme `{other}` (expected bjt, afw or hhj)"))),
        }
    }
}

/// Co-energy fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldKind {
    /// Vertical velocity.
    #[serde(rename = "e_w")]
    Velocity,
    /// Angular velocity of the sections.
    #[serde(rename = "e_theta")]
    AngularVelocity,
    /// Bending moment tensor.
    #[serde(rename = "E_kappa")]
    Moment,
    /// Shear force.
    #[serde(rename = "e_gamma")]
    Shear,
    /// Skew-symmetric multiplier enforcing moment symmetry.
    #[serde(rename = "E_r")]
    Multiplier,
}

impl FieldKind {
    pub fn label(self) -> &'static str {
        match self {
            FieldKind::Velocity => "e_w",
            FieldKind::AngularVelocity => "e_theta",
            FieldKind::Moment => "E_kappa",
            FieldKind::Shear => "e_gamma",
            FieldKind::Multiplier => "E_r",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A field's space and the offset of its dofs in the global vector.
#[derive(Clone, Debug)]
pub struct FieldBlock {
    pub kind: FieldKind,
    pub space: FunctionSpace,
    pub offset: usize,
}

impl FieldBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.space.num_dofs()
    }
}

pub fn build_spaces(scheme: Scheme, mesh: Arc<Mesh>, degree: usize) -> Result<Vec<FieldBlock>> {
    if mesh.kind() != scheme.cell_kind() {
        return Err(Error::IncompatibleMesh {
            scheme: scheme.name(),
            mesh: mesh.kind().name(),
        });
    }
    if !(1..=3).contains(&degree) {
        return Err(Error::Config(format!("polynomial degree must be 1, 2 or 3 (got {degree})")));
    }
    let k = degree;
    let disc = |cell, degree| Family::Lagrange {
        cell,
        degree,
        continuous: false,
    };
    let mut spaces: Vec<(FieldKind, FunctionSpace)> = Vec::new();
    match scheme {
        Scheme::Bjt => {
            let sq = CellKind::Square;
            spaces.push((
                FieldKind::Velocity,
                FunctionSpace::new(mesh.clone(), CompositeElement::single(disc(sq, k - 1)))?,
            ));
            spaces.push((
                FieldKind::AngularVelocity,
                FunctionSpace::new(mesh.clone(), CompositeElement::vector_of(disc(sq, k - 1)))?,
            ));
            spaces.push((FieldKind::Moment, FunctionSpace::new(mesh.clone(), bjt_stress_element(k)?)?));
            spaces.push((FieldKind::Shear, FunctionSpace::new(mesh.clone(), square_hdiv_element(k)?)?));
        }
        Scheme::Afw => {
            let tri = CellKind::Triangle;
            spaces.push((
                FieldKind::Velocity,
                FunctionSpace::new(mesh.clone(), CompositeElement::single(disc(tri, k - 1)))?,
            ));
            spaces.push((
                FieldKind::AngularVelocity,
                FunctionSpace::new(mesh.clone(), CompositeElement::vector_of(disc(tri, k - 1)))?,
            ));
            spaces.push((FieldKind::Moment, FunctionSpace::new(mesh.clone(), bdm_rows_element(k)?)?));
            spaces.push((
                FieldKind::Shear,
                FunctionSpace::new(mesh.clone(), CompositeElement::single(Family::RaviartThomas { order: k - 1 }))?,
            ));
            spaces.push((FieldKind::Multiplier, FunctionSpace::new(mesh.clone(), skew_element(k - 1))?));
        }
        Scheme::Hhj => {
            let lagrange = Family::Lagrange {
                cell: CellKind::Triangle,
                degree: k,
                continuous: true,
            };
            spaces.push((
                FieldKind::Velocity,
                FunctionSpace::new_vanishing_on_boundary(mesh.clone(), CompositeElement::single(lagrange))?,
            ));
            spaces.push((
                FieldKind::Moment,
                FunctionSpace::new(mesh.clone(), CompositeElement::single(Family::Hhj { order: k - 1 }))?,
            ));
        }
    }
    let mut offset = 0;
    Ok(spaces
        .into_iter()
        .map(|(kind, space)| {
            let block = FieldBlock { kind, space, offset };
            offset += block.space.num_dofs();
            block
        })
        .collect())
}

/// Discrete port-Hamiltonian system `M de/dt = J e + F(t)`.
#[derive(Clone, Debug)]
pub struct PhSystem {
    scheme: Scheme,
    degree: usize,
    params: MaterialParams,
    mesh: Arc<Mesh>,
    fields: Vec<FieldBlock>,
    full_dim: usize,
    mass: CsrMatrix,
    structure: CsrMatrix,
    /// Full-numbering index of each retained dof.
    free_dofs: Vec<usize>,
}

/// Symmetry and skewness measures of an assembled system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub mass_symmetry: f64,
    pub structure_skewness: f64,
}

impl StructureReport {
    pub fn holds(&self) -> bool {
        self.mass_symmetry <= STRUCTURE_TOLERANCE && self.structure_skewness <= STRUCTURE_TOLERANCE
    }
}

impl PhSystem {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn fields(&self) -> &[FieldBlock] {
        &self.fields
    }

    pub fn field(&self, kind: FieldKind) -> Option<&FieldBlock> {
        self.fields.iter().find(|f| f.kind == kind)
    }

    /// Number of unknowns after boundary conditions.
    pub fn dim(&self) -> usize {
        self.free_dofs.len()
    }

    /// Number of dofs of all field spaces together.
    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn structure(&self) -> &CsrMatrix {
        &self.structure
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Number of retained dofs of one field.
    pub fn free_count(&self, kind: FieldKind) -> usize {
        self.field(kind)
            .map(|f| self.free_dofs.iter().filter(|&&d| f.range().contains(&d)).count())
            .unwrap_or(0)
    }

    pub fn restrict(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.full_dim {
            return Err(Error::DimensionMismatch {
                expected: self.full_dim,
                actual: full.len(),
            });
        }
        Ok(self.free_dofs.iter().map(|&d| full[d]).collect())
    }

    pub fn expand(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: reduced.len(),
            });
        }
        let mut full = vec![0.0; self.full_dim];
        for (&d, &v) in self.free_dofs.iter().zip(reduced) {
            full[d] = v;
        }
        Ok(full)
    }

    pub fn structure_report(&self) -> StructureReport {
        let rel = |defect: f64, scale: f64| if scale > 0.0 { defect / scale } else { defect };
        StructureReport {
            mass_symmetry: rel(self.mass.symmetry_defect(), self.mass.max_abs()),
            structure_skewness: rel(self.structure.skew_defect(), self.structure.max_abs()),
        }
    }

    /// Fill-reducing elimination order for a matrix with the sparsity of
    /// this system. Multiplier dofs, whose diagonal entries vanish, are
    /// moved right after their last coupled neighbour so that diagonal
    /// pivots stay nonzero.
    pub fn elimination_order(&self, matrix: &CsrMatrix) -> Vec<usize> {
        let adj = matrix.symmetric_pattern();
        let order = nested_dissection(&adj);
        match self.field(FieldKind::Multiplier) {
            Some(mult) => {
                let range = mult.range();
                let deferred: Vec<bool> = self.free_dofs.iter().map(|d| range.contains(d)).collect();
                defer_after_neighbours(&order, &adj, &deferred)
            }
            None => order,
        }
    }

    /// Inertia of `M` from a symmetric elimination with diagonal pivots.
    pub fn mass_inertia(&self) -> Result<Inertia> {
        let f = lu_factor_with(
            &self.mass,
            &LuOptions {
                pivot: PivotMode::DiagonalOnly,
                ordering: ColumnOrdering::Given(self.elimination_order(&self.mass)),
            },
        )?;
        Ok(f.inertia())
    }
}

fn value(t: &Tabulation, q: usize, i: usize, c: usize) -> f64 {
    t.jet(q, i, c).value
}

fn dot_values(a: &Tabulation, i: usize, b: &Tabulation, j: usize, q: usize) -> f64 {
    (0..a.ncomp).map(|c| value(a, q, i, c) * value(b, q, j, c)).sum()
}

fn vector_divergence(t: &Tabulation, q: usize, i: usize) -> f64 {
    t.jet(q, i, 0).grad[0] + t.jet(q, i, 1).grad[1]
}

/// Row-wise divergence of a tensor stored as `[m11, m12, m21, m22]`.
fn tensor_divergence(t: &Tabulation, q: usize, i: usize) -> [f64; 2] {
    [
        t.jet(q, i, 0).grad[0] + t.jet(q, i, 1).grad[1],
        t.jet(q, i, 2).grad[0] + t.jet(q, i, 3).grad[1],
    ]
}

fn trace(t: &Tabulation, q: usize, i: usize) -> f64 {
    value(t, q, i, 0) + value(t, q, i, 3)
}

/// Local field data on one cell.
struct LocalField<'a> {
    block: &'a FieldBlock,
    dofs: &'a [Option<usize>],
    tab: Tabulation,
}

impl LocalField<'_> {
    fn dim(&self) -> usize {
        self.dofs.len()
    }
}

/// Integrates `form(q, i, j)` against the weights and scatters it into the
/// global block `(rows, cols)`.
fn scatter(
    out: &mut TripletBuilder,
    rows: &LocalField<'_>,
    cols: &LocalField<'_>,
    weights: &[f64],
    form: impl Fn(usize, usize, usize) -> f64,
) {
    for i in 0..rows.dim() {
        let Some(gi) = rows.dofs[i] else { continue };
        for j in 0..cols.dim() {
            let Some(gj) = cols.dofs[j] else { continue };
            let v: f64 = weights.iter().enumerate().map(|(q, w)| w * form(q, i, j)).sum();
            if v != 0.0 {
                out.push(rows.block.offset + gi, cols.block.offset + gj, v);
            }
        }
    }
}

/// Assembles `M` and `J` on the full spaces and checks their structure.
pub fn assemble_system(scheme: Scheme, mesh: Arc<Mesh>, degree: usize, params: &MaterialParams) -> Result<PhSystem> {
    params.validate()?;
    let fields = build_spaces(scheme, mesh.clone(), degree)?;
    let full_dim: usize = fields.iter().map(|f| f.space.num_dofs()).sum();
    let mut mass = TripletBuilder::new(full_dim, full_dim);
    let mut structure = TripletBuilder::new(full_dim, full_dim);
    let exactness = 2 * degree;
    let rho_b = params.areal_density();
    let inertia = params.rotary_inertia();
    let shear_compliance = 1.0 / params.shear_stiffness();
    let (ca, cc) = params.bending_compliance();
    let find = |kind| fields.iter().find(|f: &&FieldBlock| f.kind == kind);

    for c in 0..mesh.num_cells() {
        let ctx = CellContext::from_mesh(&mesh, c);
        let quad = ctx.quadrature(exactness)?;
        let points: Vec<[f64; 2]> = quad.iter().map(|(x, _)| *x).collect();
        let weights: Vec<f64> = quad.iter().map(|(_, w)| *w).collect();
        let local = |kind: FieldKind, order: usize| -> Result<Option<LocalField<'_>>> {
            let Some(block) = find(kind) else { return Ok(None) };
            Ok(Some(LocalField {
                block,
                dofs: block.space.cell_dofs(c),
                tab: block.space.cell_basis(c).tabulate(&points, order)?,
            }))
        };
        match scheme {
            Scheme::Bjt | Scheme::Afw => {
                let w = local(FieldKind::Velocity, 0)?.expect("velocity field");
                let th = local(FieldKind::AngularVelocity, 0)?.expect("angular velocity field");
                let kap = local(FieldKind::Moment, 1)?.expect("moment field");
                let gam = local(FieldKind::Shear, 1)?.expect("shear field");

                scatter(&mut mass, &w, &w, &weights, |q, i, j| rho_b * dot_values(&w.tab, i, &w.tab, j, q));
                scatter(&mut mass, &th, &th, &weights, |q, i, j| {
                    inertia * dot_values(&th.tab, i, &th.tab, j, q)
                });
                scatter(&mut mass, &kap, &kap, &weights, |q, i, j| {
                    ca * dot_values(&kap.tab, i, &kap.tab, j, q) - cc * trace(&kap.tab, q, i) * trace(&kap.tab, q, j)
                });
                scatter(&mut mass, &gam, &gam, &weights, |q, i, j| {
                    shear_compliance * dot_values(&gam.tab, i, &gam.tab, j, q)
                });

                scatter(&mut structure, &w, &gam, &weights, |q, i, j| {
                    value(&w.tab, q, i, 0) * vector_divergence(&gam.tab, q, j)
                });
                scatter(&mut structure, &gam, &w, &weights, |q, i, j| {
                    -vector_divergence(&gam.tab, q, i) * value(&w.tab, q, j, 0)
                });
                scatter(&mut structure, &th, &kap, &weights, |q, i, j| {
                    let d = tensor_divergence(&kap.tab, q, j);
                    value(&th.tab, q, i, 0) * d[0] + value(&th.tab, q, i, 1) * d[1]
                });
                scatter(&mut structure, &kap, &th, &weights, |q, i, j| {
                    let d = tensor_divergence(&kap.tab, q, i);
                    -(d[0] * value(&th.tab, q, j, 0) + d[1] * value(&th.tab, q, j, 1))
                });
                scatter(&mut structure, &th, &gam, &weights, |q, i, j| {
                    dot_values(&th.tab, i, &gam.tab, j, q)
                });
                scatter(&mut structure, &gam, &th, &weights, |q, i, j| {
                    -dot_values(&gam.tab, i, &th.tab, j, q)
                });

                if let Some(r) = local(FieldKind::Multiplier, 0)? {
                    scatter(&mut mass, &kap, &r, &weights, |q, i, j| dot_values(&kap.tab, i, &r.tab, j, q));
                    scatter(&mut mass, &r, &kap, &weights, |q, i, j| dot_values(&r.tab, i, &kap.tab, j, q));
                }
            }
            Scheme::Hhj => {
                let w = local(FieldKind::Velocity, 2)?.expect("velocity field");
                let kap = local(FieldKind::Moment, 0)?.expect("moment field");
                scatter(&mut mass, &w, &w, &weights, |q, i, j| rho_b * dot_values(&w.tab, i, &w.tab, j, q));
                scatter(&mut mass, &kap, &kap, &weights, |q, i, j| {
                    ca * dot_values(&kap.tab, i, &kap.tab, j, q) - cc * trace(&kap.tab, q, i) * trace(&kap.tab, q, j)
                });
                // Cell part of b_h: -(Hess v, E).
                let hess_dot = |tw: &Tabulation, i: usize, tk: &Tabulation, j: usize, q: usize| {
                    let h = tw.jet(q, i, 0).hess;
                    h[0] * value(tk, q, j, 0) + h[1] * (value(tk, q, j, 1) + value(tk, q, j, 2)) + h[2] * value(tk, q, j, 3)
                };
                scatter(&mut structure, &w, &kap, &weights, |q, i, j| -hess_dot(&w.tab, i, &kap.tab, j, q));
                scatter(&mut structure, &kap, &w, &weights, |q, i, j| hess_dot(&w.tab, j, &kap.tab, i, q));
                // Boundary part of b_h: sum over cell edges of d_n v * E_nn.
                let gauss = gauss_legendre(degree + 1);
                for l in 0..ctx.vertices.len() {
                    let a = ctx.vertices[l];
                    let b = ctx.vertices[(l + 1) % ctx.vertices.len()];
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let n = ctx.outward_normal(l);
                    let epts: Vec<[f64; 2]> = gauss
                        .iter()
                        .map(|(s, _)| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
                        .collect();
                    let ew: Vec<f64> = gauss.iter().map(|(_, wt)| wt * len).collect();
                    let we = LocalField {
                        block: w.block,
                        dofs: w.dofs,
                        tab: w.block.space.cell_basis(c).tabulate(&epts, 1)?,
                    };
                    let ke = LocalField {
                        block: kap.block,
                        dofs: kap.dofs,
                        tab: kap.block.space.cell_basis(c).tabulate(&epts, 0)?,
                    };
                    let dn = |t: &Tabulation, q: usize, i: usize| {
                        let g = t.jet(q, i, 0).grad;
                        g[0] * n[0] + g[1] * n[1]
                    };
                    let nn = |t: &Tabulation, q: usize, j: usize| {
                        n[0] * (value(t, q, j, 0) * n[0] + value(t, q, j, 1) * n[1])
                            + n[1] * (value(t, q, j, 2) * n[0] + value(t, q, j, 3) * n[1])
                    };
                    scatter(&mut structure, &we, &ke, &ew, |q, i, j| dn(&we.tab, q, i) * nn(&ke.tab, q, j));
                    scatter(&mut structure, &ke, &we, &ew, |q, i, j| -dn(&we.tab, q, j) * nn(&ke.tab, q, i));
                }
            }
        }
    }

    let system = PhSystem {
        scheme,
        degree,
        params: *params,
        mesh,
        fields,
        full_dim,
        mass: mass.build(),
        structure: structure.build(),
        free_dofs: (0..full_dim).collect(),
    };
    let report = system.structure_report();
    if !report.holds() {
        return Err(Error::Structure(format!(
            "{} system: |M - M^T| / |M| = {:.3e}, |J + J^T| / |J| = {:.3e}",
            scheme, report.mass_symmetry, report.structure_skewness
        )));
    }
    Ok(system)
}

/// Eliminates essential boundary dofs. Clamped Mindlin conditions are
/// natural in this formulation, so only the Kirchhoff scheme loses the
/// normal-normal moment dofs on boundary edges (its velocity space already
/// vanishes on the boundary).
pub fn apply_essential_bcs(system: PhSystem) -> PhSystem {
    if system.scheme.is_mindlin() {
        return system;
    }
    let mut eliminated = vec![false; system.full_dim];
    if let Some(moment) = system.field(FieldKind::Moment) {
        for &d in moment.space.boundary_dofs() {
            eliminated[moment.offset + d] = true;
        }
    }
    // Positions in the current (possibly already reduced) numbering.
    let keep: Vec<usize> = (0..system.free_dofs.len())
        .filter(|&p| !eliminated[system.free_dofs[p]])
        .collect();
    PhSystem {
        mass: system.mass.principal_submatrix(&keep),
        structure: system.structure.principal_submatrix(&keep),
        free_dofs: keep.iter().map(|&p| system.free_dofs[p]).collect(),
        ..system
    }
}

/// Writes `M` or `J` as `row col value` lines.
pub fn write_matrix_coo(matrix: &CsrMatrix, path: &std::path::Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    matrix.write_coo(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_grid, build_tri_grid, Diagonal};

    fn tri(n: usize) -> Arc<Mesh> {
        Arc::new(build_tri_grid(n, Diagonal::Right).unwrap())
    }

    fn rect(n: usize) -> Arc<Mesh> {
        Arc::new(build_rect_grid(n).unwrap())
    }

    fn counts(blocks: &[FieldBlock]) -> Vec<usize> {
        blocks.iter().map(|b| b.space.num_dofs()).collect()
    }

    #[test]
    fn spaces_on_small_meshes() {
        assert_eq!(counts(&build_spaces(Scheme::Hhj, tri(2), 1).unwrap()), vec![1, 16]);
        assert_eq!(counts(&build_spaces(Scheme::Afw, tri(2), 1).unwrap()), vec![8, 16, 64, 16, 8]);
        assert_eq!(counts(&build_spaces(Scheme::Bjt, rect(2), 1).unwrap())[0], 4);
        let offsets: Vec<usize> = build_spaces(Scheme::Afw, tri(2), 1).unwrap().iter().map(|b| b.offset).collect();
        assert_eq!(offsets, vec![0, 8, 24, 88, 104]);
    }

    #[test]
    fn bjt_degree_two_counts() {
        // Per cell: 4 velocity, 8 rotation dofs; moment m12 is continuous
        // Q2 (25 nodes on a 2x2 grid), m11 and m22 have 3 dofs per line
        // shared across one edge direction: 2 * (5 * 6) = 60; shear the same.
        let c = counts(&build_spaces(Scheme::Bjt, rect(2), 2).unwrap());
        assert_eq!(c, vec![16, 32, 25 + 30 + 30, 60]);
    }

    #[test]
    fn rejects_incompatible_meshes_and_degrees() {
        assert!(matches!(
            build_spaces(Scheme::Bjt, tri(2), 1),
            Err(Error::IncompatibleMesh { .. })
        ));
        assert!(matches!(
            build_spaces(Scheme::Afw, rect(2), 1),
            Err(Error::IncompatibleMesh { .. })
        ));
        assert!(build_spaces(Scheme::Hhj, tri(2), 0).is_err());
        assert!(build_spaces(Scheme::Hhj, tri(2), 4).is_err());
    }

    #[test]
    fn hhj_small_system_and_bcs() {
        let sys = assemble_system(Scheme::Hhj, tri(2), 1, &MaterialParams::thin_plate()).unwrap();
        assert_eq!(sys.dim(), 17);
        // Mass is block diagonal between the two fields.
        for i in 0..1 {
            for j in 1..17 {
                assert_eq!(sys.mass().get(i, j), 0.0);
            }
        }
        let reduced = apply_essential_bcs(sys);
        assert_eq!(reduced.dim(), 9);
        assert_eq!(reduced.free_count(FieldKind::Velocity), 1);
        assert!(reduced.structure_report().holds());
        let inertia = reduced.mass_inertia().unwrap();
        assert_eq!(inertia.positive, 9);
    }

    #[test]
    fn mindlin_bcs_keep_everything() {
        let sys = assemble_system(Scheme::Bjt, rect(2), 1, &MaterialParams::thick_plate()).unwrap();
        let n = sys.dim();
        assert_eq!(apply_essential_bcs(sys).dim(), n);
    }

    #[test]
    fn structure_on_all_schemes() {
        for scheme in Scheme::ALL {
            let mesh = if scheme == Scheme::Bjt { rect(3) } else { tri(3) };
            for k in 1..=3 {
                let sys = apply_essential_bcs(assemble_system(scheme, mesh.clone(), k, &scheme.default_params()).unwrap());
                let report = sys.structure_report();
                assert!(report.holds(), "{scheme} k={k}: {report:?}");
                let inertia = sys.mass_inertia().unwrap();
                let multipliers = sys.free_count(FieldKind::Multiplier);
                assert_eq!(inertia.negative, multipliers, "{scheme} k={k}");
                assert_eq!(inertia.zero, 0);
            }
        }
    }

    #[test]
    fn bjt_single_cell_has_zero_diagonal_structure() {
        let sys = assemble_system(Scheme::Bjt, rect(1), 1, &MaterialParams::thick_plate()).unwrap();
        assert!(sys.structure().diagonal().iter().all(|&d| d == 0.0));
        // Velocity couples only to shear.
        let w = sys.field(FieldKind::Velocity).unwrap().range();
        let g = sys.field(FieldKind::Shear).unwrap().range();
        for i in w.clone() {
            for (j, v) in sys.structure().row(i) {
                assert!(g.contains(&j) || v == 0.0);
            }
        }
    }

    #[test]
    fn restrict_and_expand_round_trip() {
        let sys = apply_essential_bcs(assemble_system(Scheme::Hhj, tri(2), 2, &MaterialParams::thin_plate()).unwrap());
        let full: Vec<f64> = (0..sys.full_dim()).map(|i| i as f64).collect();
        let r = sys.restrict(&full).unwrap();
        let back = sys.expand(&r).unwrap();
        for &d in sys.free_dofs() {
            assert_eq!(back[d], full[d]);
        }
        assert!(sys.restrict(&[1.0]).is_err());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("AFW".parse::<Scheme>().unwrap(), Scheme::Afw);
        assert!("mitc".parse::<Scheme>().is_err());
    }
}
