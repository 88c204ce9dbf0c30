//! Dense reference assembly used by the oracle and acceptance tests.
//!
//! Every entry is integrated directly from the weak forms with its own
//! quadrature and its own differentiation of the cell polynomials, sharing
//! only the basis functions and the dof map with the library.

#![allow(dead_code)]

use phplate::assembly::{FieldKind, PhSystem};
use phplate::poly::Poly2;
use phplate::quadrature::gauss_legendre;

pub type Dense = Vec<Vec<f64>>;

/// Value, gradient and Hessian (`[xx, xy, yy]`) of one component.
#[derive(Clone, Copy, Default)]
struct Point {
    value: f64,
    grad: [f64; 2],
    hess: [f64; 3],
}

/// Derivatives of one basis function, expressed in physical coordinates.
struct Shape {
    comps: Vec<[Poly2; 6]>,
    origin: [f64; 2],
    scale: f64,
}

impl Shape {
    fn new(funcs: &[Poly2], origin: [f64; 2], scale: f64) -> Self {
        let comps = funcs
            .iter()
            .map(|p| {
                let (px, py) = (p.dx(), p.dy());
                [p.clone(), px.dx(), px.dy(), py.dy(), px, py]
            })
            .collect();
        Self { comps, origin, scale }
    }

    fn eval(&self, x: [f64; 2]) -> [Point; 4] {
        let xi = [(x[0] - self.origin[0]) / self.scale, (x[1] - self.origin[1]) / self.scale];
        let (s1, s2) = (1.0 / self.scale, 1.0 / (self.scale * self.scale));
        let mut out = [Point::default(); 4];
        for (c, p) in self.comps.iter().enumerate() {
            let e = |q: &Poly2| q.eval(xi[0], xi[1]);
            out[c] = Point {
                value: e(&p[0]),
                grad: [e(&p[4]) * s1, e(&p[5]) * s1],
                hess: [e(&p[1]) * s2, e(&p[2]) * s2, e(&p[3]) * s2],
            };
        }
        out
    }
}

/// Quadrature points and weights on a convex cell with counterclockwise
/// vertices: tensor Gauss on squares, collapsed Gauss on triangles.
fn cell_rule(verts: &[[f64; 2]], m: usize) -> Vec<([f64; 2], f64)> {
    let g = gauss_legendre(m);
    let mut out = Vec::new();
    if verts.len() == 4 {
        let (x0, y0) = (verts[0][0].min(verts[2][0]), verts[0][1].min(verts[2][1]));
        let (x1, y1) = (verts[0][0].max(verts[2][0]), verts[0][1].max(verts[2][1]));
        for &(u, wu) in &g {
            for &(v, wv) in &g {
                out.push(([x0 + u * (x1 - x0), y0 + v * (y1 - y0)], wu * wv * (x1 - x0) * (y1 - y0)));
            }
        }
    } else {
        let (a, b, c) = (verts[0], verts[1], verts[2]);
        let det = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
        for &(u, wu) in &g {
            for &(v, wv) in &g {
                let (r, s) = (u, v * (1.0 - u));
                let x = [
                    a[0] + r * (b[0] - a[0]) + s * (c[0] - a[0]),
                    a[1] + r * (b[1] - a[1]) + s * (c[1] - a[1]),
                ];
                out.push((x, wu * wv * (1.0 - u) * det));
            }
        }
    }
    out
}

fn tensor_div(p: &[Point; 4]) -> [f64; 2] {
    [p[0].grad[0] + p[1].grad[1], p[2].grad[0] + p[3].grad[1]]
}

fn dot(a: &[Point; 4], b: &[Point; 4]) -> f64 {
    (0..4).map(|c| a[c].value * b[c].value).sum()
}

/// Dense `(M, J)` of `system` on its full (unreduced) dof set.
pub fn brute_force(system: &PhSystem) -> (Dense, Dense) {
    let n = system.full_dim();
    let mut mass = vec![vec![0.0; n]; n];
    let mut structure = vec![vec![0.0; n]; n];
    let p = system.params();
    let mesh = system.mesh();
    let rho_b = p.density * p.thickness;
    let inertia = p.density * p.thickness.powi(3) / 12.0;
    let d0 = p.young * p.thickness.powi(3) / (12.0 * (1.0 - p.poisson * p.poisson));
    let shear = p.young * p.thickness * p.shear_correction / (2.0 * (1.0 + p.poisson));
    let a = 1.0 / (d0 * (1.0 - p.poisson));
    let c = a * p.poisson / (1.0 + p.poisson);
    let m = system.degree() + 4;

    for cell in 0..mesh.num_cells() {
        let verts: Vec<[f64; 2]> = mesh.cell(cell).iter().map(|&v| mesh.vertices()[v]).collect();
        // Local data per field: global indices and shapes.
        let fields: Vec<(FieldKind, Vec<Option<usize>>, Vec<Shape>)> = system
            .fields()
            .iter()
            .map(|b| {
                let basis = b.space.cell_basis(cell);
                let dofs = b.space.cell_dofs(cell).iter().map(|d| d.map(|g| g + b.offset)).collect();
                let shapes = basis
                    .funcs
                    .iter()
                    .map(|f| Shape::new(f, basis.frame.origin, basis.frame.scale))
                    .collect();
                (b.kind, dofs, shapes)
            })
            .collect();

        for (x, w) in cell_rule(&verts, m) {
            let evals: Vec<Vec<[Point; 4]>> = fields.iter().map(|f| f.2.iter().map(|s| s.eval(x)).collect()).collect();
            for (fi, (ki, di, _)) in fields.iter().enumerate() {
                for (fj, (kj, dj, _)) in fields.iter().enumerate() {
                    for (i, gi) in di.iter().enumerate() {
                        let Some(gi) = gi else { continue };
                        for (j, gj) in dj.iter().enumerate() {
                            let Some(gj) = gj else { continue };
                            let (v, u) = (&evals[fi][i], &evals[fj][j]);
                            use FieldKind::*;
                            let mv = match (ki, kj) {
                                (Velocity, Velocity) => rho_b * dot(v, u),
                                (AngularVelocity, AngularVelocity) => inertia * dot(v, u),
                                (Moment, Moment) => {
                                    a * dot(v, u) - c * (v[0].value + v[3].value) * (u[0].value + u[3].value)
                                }
                                (Shear, Shear) => dot(v, u) / shear,
                                (Moment, Multiplier) | (Multiplier, Moment) => dot(v, u),
                                _ => 0.0,
                            };
                            let jv = match (ki, kj) {
                                (Velocity, Shear) => v[0].value * (u[0].grad[0] + u[1].grad[1]),
                                (Shear, Velocity) => -(v[0].grad[0] + v[1].grad[1]) * u[0].value,
                                (AngularVelocity, Moment) => {
                                    let d = tensor_div(u);
                                    v[0].value * d[0] + v[1].value * d[1]
                                }
                                (Moment, AngularVelocity) => {
                                    let d = tensor_div(v);
                                    -(d[0] * u[0].value + d[1] * u[1].value)
                                }
                                (AngularVelocity, Shear) => v[0].value * u[0].value + v[1].value * u[1].value,
                                (Shear, AngularVelocity) => -(v[0].value * u[0].value + v[1].value * u[1].value),
                                (Velocity, Moment) if !system.scheme().is_mindlin() => {
                                    let h = v[0].hess;
                                    -(h[0] * u[0].value + h[1] * (u[1].value + u[2].value) + h[2] * u[3].value)
                                }
                                (Moment, Velocity) if !system.scheme().is_mindlin() => {
                                    let h = u[0].hess;
                                    h[0] * v[0].value + h[1] * (v[1].value + v[2].value) + h[2] * v[3].value
                                }
                                _ => 0.0,
                            };
                            mass[*gi][*gj] += w * mv;
                            structure[*gi][*gj] += w * jv;
                        }
                    }
                }
            }
        }

        if system.scheme().is_mindlin() {
            continue;
        }
        // Normal-derivative jumps against normal-normal moments.
        let (wf, mf) = (&fields[0], &fields[1]);
        for e in 0..verts.len() {
            let (p0, p1) = (verts[e], verts[(e + 1) % verts.len()]);
            let (dx, dy) = (p1[0] - p0[0], p1[1] - p0[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let nrm = [dy / len, -dx / len];
            for (s, ws) in gauss_legendre(m) {
                let x = [p0[0] + s * dx, p0[1] + s * dy];
                let wv: Vec<_> = wf.2.iter().map(|sh| sh.eval(x)).collect();
                let mv: Vec<_> = mf.2.iter().map(|sh| sh.eval(x)).collect();
                for (i, gi) in wf.1.iter().enumerate() {
                    let Some(gi) = gi else { continue };
                    let dn = wv[i][0].grad[0] * nrm[0] + wv[i][0].grad[1] * nrm[1];
                    for (j, gj) in mf.1.iter().enumerate() {
                        let Some(gj) = gj else { continue };
                        let t = &mv[j];
                        let nn = t[0].value * nrm[0] * nrm[0]
                            + (t[1].value + t[2].value) * nrm[0] * nrm[1]
                            + t[3].value * nrm[1] * nrm[1];
                        let v = ws * len * dn * nn;
                        structure[*gi][*gj] += v;
                        structure[*gj][*gi] -= v;
                    }
                }
            }
        }
    }
    (mass, structure)
}

/// Largest entry-wise difference, relative to the largest entry of the
/// same field block of `reference`.
pub fn blockwise_relative_difference(system: &PhSystem, computed: &Dense, reference: &Dense) -> f64 {
    let mut worst = 0.0f64;
    for bi in system.fields() {
        for bj in system.fields() {
            let scale = bi
                .range()
                .flat_map(|i| bj.range().map(move |j| (i, j)))
                .map(|(i, j)| reference[i][j].abs())
                .fold(0.0f64, f64::max);
            for i in bi.range() {
                for j in bj.range() {
                    let d = (computed[i][j] - reference[i][j]).abs();
                    if d > 0.0 {
                        worst = worst.max(if scale > 0.0 { d / scale } else { f64::INFINITY });
                    }
                }
            }
        }
    }
    worst
}
