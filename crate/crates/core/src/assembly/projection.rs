//! Loads, Gram matrices and projections onto field spaces.

use super::space::FunctionSpace;
use super::system::{FieldKind, PhSystem};
use crate::elements::CellContext;
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, CsrMatrix, TripletBuilder};

/// Extra quadrature exactness beyond `2k` for non-polynomial data.
pub const DATA_EXACTNESS_MARGIN: usize = 4;

/// Residual tolerance of the projection solves.
const PROJECTION_TOLERANCE: f64 = 1e-10;

fn data_exactness(space: &FunctionSpace) -> usize {
    2 * space.degree() + DATA_EXACTNESS_MARGIN
}

/// Value and gradient of a field at a point, per component.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldSample {
    pub value: [f64; 4],
    pub grad: [[f64; 2]; 4],
}

impl FieldSample {
    pub fn from_value(value: [f64; 4]) -> Self {
        Self {
            value,
            grad: [[0.0; 2]; 4],
        }
    }
}

/// Gram matrix of the `L^2` inner product, or of the full `H^1` inner
/// product when `with_gradient` is set.
pub fn gram_matrix(space: &FunctionSpace, exactness: usize, with_gradient: bool) -> Result<CsrMatrix> {
    let n = space.num_dofs();
    let mesh = space.mesh();
    let ncomp = space.components();
    let mut t = TripletBuilder::new(n, n);
    for c in 0..mesh.num_cells() {
        let quad = CellContext::from_mesh(mesh, c).quadrature(exactness)?;
        let points: Vec<[f64; 2]> = quad.iter().map(|(x, _)| *x).collect();
        let tab = space.cell_basis(c).tabulate(&points, usize::from(with_gradient))?;
        let dofs = space.cell_dofs(c);
        for (i, gi) in dofs.iter().enumerate() {
            let Some(gi) = gi else { continue };
            for (j, gj) in dofs.iter().enumerate() {
                let Some(gj) = gj else { continue };
                let mut v = 0.0;
                for (q, (_, w)) in quad.iter().enumerate() {
                    for comp in 0..ncomp {
                        let (a, b) = (tab.jet(q, i, comp), tab.jet(q, j, comp));
                        let mut s = a.value * b.value;
                        if with_gradient {
                            s += a.grad[0] * b.grad[0] + a.grad[1] * b.grad[1];
                        }
                        v += w * s;
                    }
                }
                t.push(*gi, *gj, v);
            }
        }
    }
    Ok(t.build())
}

/// Right-hand side `(phi_i, u)` (plus gradient terms when requested).
pub fn moment_vector(
    space: &FunctionSpace,
    exactness: usize,
    with_gradient: bool,
    field: &dyn Fn([f64; 2]) -> FieldSample,
) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let ncomp = space.components();
    let mut out = vec![0.0; space.num_dofs()];
    for c in 0..mesh.num_cells() {
        let quad = CellContext::from_mesh(mesh, c).quadrature(exactness)?;
        let points: Vec<[f64; 2]> = quad.iter().map(|(x, _)| *x).collect();
        let samples: Vec<FieldSample> = points.iter().map(|&x| field(x)).collect();
        let tab = space.cell_basis(c).tabulate(&points, usize::from(with_gradient))?;
        for (i, gi) in space.cell_dofs(c).iter().enumerate() {
            let Some(gi) = gi else { continue };
            let mut v = 0.0;
            for (q, (_, w)) in quad.iter().enumerate() {
                for comp in 0..ncomp {
                    let a = tab.jet(q, i, comp);
                    let mut s = a.value * samples[q].value[comp];
                    if with_gradient {
                        s += a.grad[0] * samples[q].grad[comp][0] + a.grad[1] * samples[q].grad[comp][1];
                    }
                    v += w * s;
                }
            }
            out[*gi] += v;
        }
    }
    Ok(out)
}

/// Solves `G x = b` on the dofs not listed in `excluded` (sorted or not);
/// excluded coefficients are zero.
pub fn solve_on_subspace(gram: &CsrMatrix, rhs: &[f64], excluded: &[usize]) -> Result<Vec<f64>> {
    let n = gram.nrows();
    let mut keep_mask = vec![true; n];
    for &e in excluded {
        keep_mask[e] = false;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| keep_mask[i]).collect();
    let mut x = vec![0.0; n];
    if keep.is_empty() {
        return Ok(x);
    }
    let g = gram.principal_submatrix(&keep);
    let b: Vec<f64> = keep.iter().map(|&i| rhs[i]).collect();
    let f = lu_factor(&g).map_err(|e| match e {
        Error::Singular { .. } => Error::ElementConstruction(format!("singular Gram matrix: {e}")),
        other => other,
    })?;
    let (sol, _) = f.solve_checked(&g, &b, PROJECTION_TOLERANCE)?;
    for (&i, v) in keep.iter().zip(sol) {
        x[i] = v;
    }
    Ok(x)
}

/// `L^2` projection of `field` onto `space`.
pub fn l2_project(space: &FunctionSpace, field: &dyn Fn([f64; 2]) -> [f64; 4]) -> Result<Vec<f64>> {
    l2_project_excluding(space, field, &[])
}

/// `L^2` projection onto the subspace with the `excluded` dofs set to zero.
pub fn l2_project_excluding(
    space: &FunctionSpace,
    field: &dyn Fn([f64; 2]) -> [f64; 4],
    excluded: &[usize],
) -> Result<Vec<f64>> {
    let e = data_exactness(space);
    let gram = gram_matrix(space, e, false)?;
    let rhs = moment_vector(space, e, false, &|x| FieldSample::from_value(field(x)))?;
    solve_on_subspace(&gram, &rhs, excluded)
}

impl PhSystem {
    /// Component-wise `L^2` projection of every field onto the retained
    /// dofs, as a reduced state vector.
    pub fn project_fields(&self, field: &dyn Fn(FieldKind, [f64; 2]) -> [f64; 4]) -> Result<Vec<f64>> {
        let mut full = vec![0.0; self.full_dim()];
        let mut free = vec![false; self.full_dim()];
        for &d in self.free_dofs() {
            free[d] = true;
        }
        for block in self.fields() {
            let excluded: Vec<usize> = (0..block.space.num_dofs()).filter(|&d| !free[block.offset + d]).collect();
            let coeffs = l2_project_excluding(&block.space, &|x| field(block.kind, x), &excluded)?;
            full[block.range()].copy_from_slice(&coeffs);
        }
        self.restrict(&full)
    }
}

/// Load vector `(v_w, f) + (v_theta, tau)` at time `t` on the retained dofs.
/// The torque is ignored by schemes without a rotation field.
pub fn assemble_load(
    system: &PhSystem,
    force: &dyn Fn([f64; 2], f64) -> f64,
    torque: &dyn Fn([f64; 2], f64) -> [f64; 2],
    t: f64,
) -> Result<Vec<f64>> {
    let mut full = vec![0.0; system.full_dim()];
    if let Some(block) = system.field(FieldKind::Velocity) {
        let e = 2 * system.degree() + DATA_EXACTNESS_MARGIN;
        let v = moment_vector(&block.space, e, false, &|x| FieldSample::from_value([force(x, t), 0.0, 0.0, 0.0]))?;
        full[block.range()].copy_from_slice(&v);
    }
    if let Some(block) = system.field(FieldKind::AngularVelocity) {
        let e = 2 * system.degree() + DATA_EXACTNESS_MARGIN;
        let v = moment_vector(&block.space, e, false, &|x| {
            let tau = torque(x, t);
            FieldSample::from_value([tau[0], tau[1], 0.0, 0.0])
        })?;
        full[block.range()].copy_from_slice(&v);
    }
    system.restrict(&full)
}
