//! Spanning sets and dof functionals of each family.

use super::{
    Axis, CellContext, Continuity, ElementDefinition, Entity, Family, Functional, LocalDof, Trace,
};
use crate::mesh::CellKind;
use crate::poly::Poly2;

pub fn rt_span_dim(order: usize) -> usize {
    (order + 1) * (order + 3)
}

pub fn bdm_span_dim(order: usize) -> usize {
    (order + 1) * (order + 2)
}

pub fn hhj_span_dim(order: usize) -> usize {
    3 * (order + 1) * (order + 2) / 2
}

fn total_degree_monomials(r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=r {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

fn tensor_monomials(r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 0..=r {
        for a in 0..=r {
            out.push((a, b));
        }
    }
    out
}

fn comps(ncomp: usize, slots: &[(usize, Poly2)]) -> Vec<Poly2> {
    let mut v = vec![Poly2::zero(); ncomp];
    for (c, p) in slots {
        v[*c].add_scaled(1.0, p);
    }
    v
}

fn mono(a: usize, b: usize) -> Poly2 {
    Poly2::monomial(a, b, 1.0)
}

pub(crate) fn define(family: Family, ctx: &CellContext) -> ElementDefinition {
    match family {
        Family::Lagrange { cell, degree, continuous } => lagrange(ctx, cell, degree, continuous),
        Family::Directional { degree, axis } => directional(ctx, degree, axis),
        Family::RaviartThomas { order } => raviart_thomas(ctx, order),
        Family::Bdm { order } => bdm(ctx, order),
        Family::Hhj { order } => hhj(ctx, order),
    }
}

fn lattice_nodes(ctx: &CellContext, degree: usize) -> Vec<[f64; 2]> {
    if degree == 0 {
        let nv = ctx.vertices.len() as f64;
        return vec![[
            ctx.vertices.iter().map(|v| v[0]).sum::<f64>() / nv,
            ctx.vertices.iter().map(|v| v[1]).sum::<f64>() / nv,
        ]];
    }
    let k = degree as f64;
    let mut out = Vec::new();
    match ctx.kind {
        CellKind::Triangle => {
            for j in 0..=degree {
                for i in 0..=(degree - j) {
                    out.push(ctx.map([i as f64 / k, j as f64 / k]));
                }
            }
        }
        CellKind::Square => {
            for j in 0..=degree {
                for i in 0..=degree {
                    out.push(ctx.map([i as f64 / k, j as f64 / k]));
                }
            }
        }
    }
    out
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Parameter of `p` along edge `e` in `[0, 1]` if `p` lies on it.
fn edge_param(ctx: &CellContext, e: usize, p: [f64; 2], tol: f64) -> Option<f64> {
    let edge = &ctx.edges[e];
    let d = [edge.end[0] - edge.start[0], edge.end[1] - edge.start[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = ((p[0] - edge.start[0]) * d[0] + (p[1] - edge.start[1]) * d[1]) / len2;
    let proj = [edge.start[0] + s * d[0], edge.start[1] + s * d[1]];
    if dist(proj, p) < tol && s > -tol && s < 1.0 + tol {
        Some(s.clamp(0.0, 1.0))
    } else {
        None
    }
}

fn lagrange(ctx: &CellContext, cell: CellKind, degree: usize, continuous: bool) -> ElementDefinition {
    let monomials = match cell {
        CellKind::Triangle => total_degree_monomials(degree),
        CellKind::Square => tensor_monomials(degree),
    };
    let span = monomials.iter().map(|&(a, b)| vec![mono(a, b)]).collect();
    let tol = 1e-10 * ctx.frame().scale;
    let mut interior = 0;
    let dofs = lattice_nodes(ctx, degree)
        .into_iter()
        .map(|at| {
            let functional = Functional::Point { at, component: 0 };
            if !continuous {
                interior += 1;
                return LocalDof {
                    entity: Entity::Cell(ctx.cell),
                    index: interior - 1,
                    continuity: Continuity::Discontinuous,
                    boundary: false,
                    functional,
                };
            }
            if let Some(l) = ctx.vertices.iter().position(|&v| dist(v, at) < tol) {
                return LocalDof {
                    entity: Entity::Vertex(ctx.vertex_ids[l]),
                    index: 0,
                    continuity: Continuity::C0,
                    boundary: ctx.vertex_boundary[l],
                    functional,
                };
            }
            for (l, edge) in ctx.edges.iter().enumerate() {
                if let Some(s) = edge_param(ctx, l, at, tol) {
                    return LocalDof {
                        entity: Entity::Edge(edge.id),
                        index: (s * degree as f64).round() as usize,
                        continuity: Continuity::C0,
                        boundary: edge.boundary,
                        functional,
                    };
                }
            }
            interior += 1;
            LocalDof {
                entity: Entity::Cell(ctx.cell),
                index: interior - 1,
                continuity: Continuity::C0,
                boundary: false,
                functional,
            }
        })
        .collect();
    ElementDefinition { ncomp: 1, span, dofs }
}

fn directional(ctx: &CellContext, degree: usize, axis: Axis) -> ElementDefinition {
    let span = tensor_monomials(degree).iter().map(|&(a, b)| vec![mono(a, b)]).collect();
    let tol = 1e-10 * ctx.frame().scale;
    let axis_index = match axis {
        Axis::X => 0,
        Axis::Y => 1,
    };
    let mut interior = 0;
    let dofs = lattice_nodes(ctx, degree)
        .into_iter()
        .map(|at| {
            let functional = Functional::Point { at, component: 0 };
            for (l, edge) in ctx.edges.iter().enumerate() {
                if edge.normal[axis_index].abs() < 0.5 {
                    continue;
                }
                if let Some(s) = edge_param(ctx, l, at, tol) {
                    return LocalDof {
                        entity: Entity::Edge(edge.id),
                        index: (s * degree as f64).round() as usize,
                        continuity: Continuity::NormalTrace,
                        boundary: edge.boundary,
                        functional,
                    };
                }
            }
            interior += 1;
            LocalDof {
                entity: Entity::Cell(ctx.cell),
                index: interior - 1,
                continuity: Continuity::NormalTrace,
                boundary: false,
                functional,
            }
        })
        .collect();
    ElementDefinition { ncomp: 1, span, dofs }
}

fn edge_moments(ctx: &CellContext, order: usize, trace: Trace, continuity: Continuity) -> Vec<LocalDof> {
    let mut dofs = Vec::new();
    for edge in &ctx.edges {
        for j in 0..=order {
            dofs.push(LocalDof {
                entity: Entity::Edge(edge.id),
                index: j,
                continuity,
                boundary: edge.boundary,
                functional: Functional::EdgeMoment {
                    start: edge.start,
                    end: edge.end,
                    normal: edge.normal,
                    trace,
                    degree: j,
                },
            });
        }
    }
    dofs
}

fn cell_moments(ctx: &CellContext, tests: Vec<Vec<Poly2>>, continuity: Continuity) -> Vec<LocalDof> {
    tests
        .into_iter()
        .enumerate()
        .map(|(i, test)| LocalDof {
            entity: Entity::Cell(ctx.cell),
            index: i,
            continuity,
            boundary: false,
            functional: Functional::CellMoment { test },
        })
        .collect()
}

fn vector_polys(r: usize) -> Vec<Vec<Poly2>> {
    let mut out = Vec::new();
    for (a, b) in total_degree_monomials(r) {
        out.push(comps(2, &[(0, mono(a, b))]));
        out.push(comps(2, &[(1, mono(a, b))]));
    }
    out
}

fn raviart_thomas(ctx: &CellContext, order: usize) -> ElementDefinition {
    let mut span = vector_polys(order);
    for a in 0..=order {
        let b = order - a;
        span.push(comps(2, &[(0, mono(a + 1, b)), (1, mono(a, b + 1))]));
    }
    let mut dofs = edge_moments(ctx, order, Trace::Normal, Continuity::NormalTrace);
    if order >= 1 {
        dofs.extend(cell_moments(ctx, vector_polys(order - 1), Continuity::NormalTrace));
    }
    ElementDefinition { ncomp: 2, span, dofs }
}

fn bdm(ctx: &CellContext, order: usize) -> ElementDefinition {
    let span = vector_polys(order);
    let mut dofs = edge_moments(ctx, order, Trace::Normal, Continuity::NormalTrace);
    if order >= 2 {
        // First-kind Nedelec space of degree order - 1.
        let mut tests = vector_polys(order - 2);
        for a in 0..=(order - 2) {
            let b = order - 2 - a;
            tests.push(comps(2, &[(0, mono(a, b + 1).scale(-1.0)), (1, mono(a + 1, b))]));
        }
        dofs.extend(cell_moments(ctx, tests, Continuity::NormalTrace));
    }
    ElementDefinition { ncomp: 2, span, dofs }
}

fn symmetric_polys(r: usize) -> Vec<Vec<Poly2>> {
    let mut out = Vec::new();
    for (a, b) in total_degree_monomials(r) {
        out.push(comps(4, &[(0, mono(a, b))]));
        out.push(comps(4, &[(1, mono(a, b)), (2, mono(a, b))]));
        out.push(comps(4, &[(3, mono(a, b))]));
    }
    out
}

fn hhj(ctx: &CellContext, order: usize) -> ElementDefinition {
    let span = symmetric_polys(order);
    let mut dofs = edge_moments(ctx, order, Trace::NormalNormal, Continuity::NormalNormalTrace);
    if order >= 1 {
        dofs.extend(cell_moments(ctx, symmetric_polys(order - 1), Continuity::NormalNormalTrace));
    }
    ElementDefinition { ncomp: 4, span, dofs }
}
