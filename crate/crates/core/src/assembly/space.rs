use std::collections::HashMap;
use std::sync::Arc;

use crate::elements::{tabulate_funcs, CellContext, CompositeElement, Entity, Frame, LocalBasis, Tabulation};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::poly::Poly2;

/// Basis of a field on one cell, with every part embedded into the
/// field's components.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub frame: Frame,
    /// `funcs[i][c]`: component `c` of local basis function `i`.
    pub funcs: Vec<Vec<Poly2>>,
}

impl CellBasis {
    pub fn dim(&self) -> usize {
        self.funcs.len()
    }

    pub fn tabulate(&self, points: &[[f64; 2]], derivative_order: usize) -> Result<Tabulation> {
        tabulate_funcs(&self.funcs, &self.frame, points, derivative_order)
    }
}

/// Global finite element space of one field on a mesh.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    element: CompositeElement,
    num_dofs: usize,
    /// Local-to-global map; `None` for dofs removed from the space.
    cell_dofs: Vec<Vec<Option<usize>>>,
    bases: Vec<CellBasis>,
    boundary_dofs: Vec<usize>,
}

/// Identifies a shared dof: the part of the composite element, the mesh
/// entity and the position on that entity.
type DofKey = (usize, Entity, usize);

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, element: CompositeElement) -> Result<Self> {
        Self::build(mesh, element, false)
    }

    /// Space whose functions vanish on the boundary: dofs attached to
    /// boundary vertices and edges are left out.
    pub fn new_vanishing_on_boundary(mesh: Arc<Mesh>, element: CompositeElement) -> Result<Self> {
        Self::build(mesh, element, true)
    }

    fn build(mesh: Arc<Mesh>, element: CompositeElement, strip_boundary: bool) -> Result<Self> {
        if element.cell_kind() != mesh.kind() {
            return Err(Error::UnsupportedElement(format!(
                "element on {} cells used with a {} mesh",
                element.cell_kind().name(),
                mesh.kind().name()
            )));
        }
        let ncomp = element.components();
        let mut numbering: HashMap<DofKey, usize> = HashMap::new();
        let mut boundary_dofs = Vec::new();
        let mut cell_dofs = Vec::with_capacity(mesh.num_cells());
        let mut bases = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let ctx = CellContext::from_mesh(&mesh, c);
            let mut funcs = Vec::new();
            let mut map = Vec::new();
            let mut frame = None;
            for (part, (family, embedding)) in element.parts.iter().enumerate() {
                let basis = LocalBasis::build(*family, &ctx)?;
                funcs.extend(basis.embed(*embedding, ncomp));
                for dof in &basis.dofs {
                    if strip_boundary && dof.boundary {
                        map.push(None);
                        continue;
                    }
                    let key = (part, dof.entity, dof.index);
                    let next = numbering.len();
                    let g = *numbering.entry(key).or_insert_with(|| {
                        if dof.boundary {
                            boundary_dofs.push(next);
                        }
                        next
                    });
                    map.push(Some(g));
                }
                frame = Some(basis.frame);
            }
            cell_dofs.push(map);
            bases.push(CellBasis {
                frame: frame.expect("composite elements have at least one part"),
                funcs,
            });
        }
        boundary_dofs.sort_unstable();
        Ok(Self {
            mesh,
            element,
            num_dofs: numbering.len(),
            cell_dofs,
            bases,
            boundary_dofs,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn element(&self) -> &CompositeElement {
        &self.element
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn components(&self) -> usize {
        self.element.components()
    }

    pub fn cell_dofs(&self, c: usize) -> &[Option<usize>] {
        &self.cell_dofs[c]
    }

    pub fn cell_basis(&self, c: usize) -> &CellBasis {
        &self.bases[c]
    }

    /// Dofs attached to boundary entities (sorted).
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Highest polynomial degree of the element.
    pub fn degree(&self) -> usize {
        self.element.max_degree()
    }

    /// Evaluates a coefficient vector at a point of cell `c`.
    pub fn evaluate(&self, coeffs: &[f64], c: usize, x: [f64; 2]) -> Result<[f64; 4]> {
        if coeffs.len() != self.num_dofs {
            return Err(Error::DimensionMismatch {
                expected: self.num_dofs,
                actual: coeffs.len(),
            });
        }
        let basis = &self.bases[c];
        let xi = basis.frame.local(x);
        let mut out = [0.0; 4];
        for (f, g) in basis.funcs.iter().zip(&self.cell_dofs[c]) {
            if let Some(g) = g {
                for (comp, p) in f.iter().enumerate() {
                    out[comp] += coeffs[*g] * p.eval(xi[0], xi[1]);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{bdm_rows_element, bjt_stress_element, Family};
    use crate::mesh::{build_rect_grid, build_tri_grid, CellKind, Diagonal};

    fn tri(n: usize) -> Arc<Mesh> {
        Arc::new(build_tri_grid(n, Diagonal::Right).unwrap())
    }

    #[test]
    fn dof_counts_on_small_meshes() {
        let p1 = CompositeElement::single(Family::Lagrange {
            cell: CellKind::Triangle,
            degree: 1,
            continuous: true,
        });
        assert_eq!(FunctionSpace::new(tri(2), p1.clone()).unwrap().num_dofs(), 9);
        assert_eq!(FunctionSpace::new_vanishing_on_boundary(tri(2), p1).unwrap().num_dofs(), 1);
        let hhj = CompositeElement::single(Family::Hhj { order: 0 });
        let s = FunctionSpace::new(tri(2), hhj).unwrap();
        assert_eq!(s.num_dofs(), 16);
        assert_eq!(s.boundary_dofs().len(), 8);
        let rt = CompositeElement::single(Family::RaviartThomas { order: 0 });
        assert_eq!(FunctionSpace::new(tri(2), rt).unwrap().num_dofs(), 16);
        assert_eq!(FunctionSpace::new(tri(2), bdm_rows_element(1).unwrap()).unwrap().num_dofs(), 64);
        let rect = Arc::new(build_rect_grid(2).unwrap());
        let bjt = FunctionSpace::new(rect, bjt_stress_element(1).unwrap()).unwrap();
        // m12: 9 vertices; m11 and m22: 12 each.
        assert_eq!(bjt.num_dofs(), 33);
    }

    #[test]
    fn every_dof_is_referenced_and_maps_are_consistent() {
        let mesh = tri(3);
        for element in [
            CompositeElement::single(Family::Lagrange {
                cell: CellKind::Triangle,
                degree: 3,
                continuous: true,
            }),
            CompositeElement::single(Family::Hhj { order: 2 }),
            bdm_rows_element(2).unwrap(),
        ] {
            let s = FunctionSpace::new(mesh.clone(), element).unwrap();
            let mut hits = vec![0; s.num_dofs()];
            for c in 0..mesh.num_cells() {
                for g in s.cell_dofs(c).iter().flatten() {
                    hits[*g] += 1;
                }
            }
            assert!(hits.iter().all(|&h| h >= 1));
        }
    }

    #[test]
    fn continuous_field_agrees_across_cells() {
        let mesh = tri(3);
        let s = FunctionSpace::new(
            mesh.clone(),
            CompositeElement::single(Family::Lagrange {
                cell: CellKind::Triangle,
                degree: 2,
                continuous: true,
            }),
        )
        .unwrap();
        let coeffs: Vec<f64> = (0..s.num_dofs()).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        for e in mesh.edges().iter().filter(|e| !e.boundary) {
            let (a, b) = (mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]]);
            let x = [0.3 * a[0] + 0.7 * b[0], 0.3 * a[1] + 0.7 * b[1]];
            let u = s.evaluate(&coeffs, e.cells[0], x).unwrap()[0];
            let v = s.evaluate(&coeffs, e.cells[1], x).unwrap()[0];
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_mismatched_cells() {
        let rect = Arc::new(build_rect_grid(2).unwrap());
        let rt = CompositeElement::single(Family::RaviartThomas { order: 0 });
        assert!(FunctionSpace::new(rect, rt).is_err());
    }
}
