//! Structured meshes of the unit square with oriented edge topology.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::quadrature::ReferenceCell;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Triangle,
    Square,
}

impl CellKind {
    pub fn reference(self) -> ReferenceCell {
        match self {
            CellKind::Triangle => ReferenceCell::Triangle,
            CellKind::Square => ReferenceCell::Square,
        }
    }

    pub fn num_vertices(self) -> usize {
        match self {
            CellKind::Triangle => 3,
            CellKind::Square => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Triangle => "triangular",
            CellKind::Square => "rectangular",
        }
    }
}

/// How each grid square is split into triangles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Diagonal {
    /// Diagonal from the lower-left to the upper-right corner.
    #[default]
    Right,
    /// Diagonal from the lower-right to the upper-left corner.
    Left,
    /// Both diagonals, with an extra vertex at the square centre.
    Crossed,
}

impl std::str::FromStr for Diagonal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Diagonal::Right),
            "left" => Ok(Diagonal::Left),
            "crossed" | "crisscross" => Ok(Diagonal::Crossed),
            other => Err(Error::InvalidMesh(format!("unknown diagonal pattern `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints, lower global index first. The edge parameter runs from
    /// `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    /// Adjacent cells in increasing global index (one on the boundary).
    pub cells: Vec<usize>,
    /// Unit normal, outward from `cells[0]`.
    pub normal: [f64; 2],
    /// Unit tangent from `vertices[0]` to `vertices[1]`.
    pub tangent: [f64; 2],
    pub length: f64,
    pub boundary: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeTable {
    pub edges: Vec<Edge>,
}

impl EdgeTable {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edge> {
        self.edges.iter()
    }
}

impl std::ops::Index<usize> for EdgeTable {
    type Output = Edge;
    fn index(&self, i: usize) -> &Edge {
        &self.edges[i]
    }
}

/// A conforming mesh of `(0,1)^2` made of axis-aligned squares or of
/// triangles obtained by splitting such squares.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    kind: CellKind,
    n: usize,
    diagonal: Option<Diagonal>,
    vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex lists.
    cells: Vec<Vec<usize>>,
    /// Local edge `i` joins local vertices `i` and `i + 1 (mod nv)`.
    cell_edges: Vec<Vec<usize>>,
    edges: EdgeTable,
    boundary_vertex: Vec<bool>,
}

/// Structured grid of `n x n` squares of side `1/n`.
pub fn build_rect_grid(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("cells per side must be positive".into()));
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    Ok(Mesh::from_cells(CellKind::Square, n, None, vertices, cells))
}

/// Structured triangulation: each of the `n x n` squares split per `diagonal`.
pub fn build_tri_grid(n: usize, diagonal: Diagonal) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("squares per side must be positive".into()));
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            match diagonal {
                Diagonal::Right => {
                    cells.push(vec![v00, v10, v11]);
                    cells.push(vec![v00, v11, v01]);
                }
                Diagonal::Left => {
                    cells.push(vec![v00, v10, v01]);
                    cells.push(vec![v10, v11, v01]);
                }
                Diagonal::Crossed => {
                    let c = vertices.len();
                    vertices.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
                    cells.push(vec![v00, v10, c]);
                    cells.push(vec![v10, v11, c]);
                    cells.push(vec![v11, v01, c]);
                    cells.push(vec![v01, v00, c]);
                }
            }
        }
    }
    Ok(Mesh::from_cells(CellKind::Triangle, n, Some(diagonal), vertices, cells))
}

/// Affine map data for one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGeometry {
    pub vertices: Vec<[f64; 2]>,
    /// Columns are the images of the reference axes.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    pub edge_lengths: Vec<f64>,
    pub outward_normals: Vec<[f64; 2]>,
}

impl CellGeometry {
    /// Physical image of a reference point.
    pub fn map(&self, r: [f64; 2]) -> [f64; 2] {
        let v0 = self.vertices[0];
        [
            v0[0] + self.jacobian[0][0] * r[0] + self.jacobian[0][1] * r[1],
            v0[1] + self.jacobian[1][0] * r[0] + self.jacobian[1][1] * r[1],
        ]
    }

    pub fn area(&self, kind: CellKind) -> f64 {
        self.det * kind.reference().measure()
    }
}

pub fn cell_geometry(mesh: &Mesh, cell: usize) -> CellGeometry {
    mesh.geometry(cell)
}

impl Mesh {
    fn from_cells(
        kind: CellKind,
        n: usize,
        diagonal: Option<Diagonal>,
        vertices: Vec<[f64; 2]>,
        cells: Vec<Vec<usize>>,
    ) -> Self {
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, verts) in cells.iter().enumerate() {
            let nv = verts.len();
            let mut local = Vec::with_capacity(nv);
            for i in 0..nv {
                let (a, b) = (verts[i], verts[(i + 1) % nv]);
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[key.0], vertices[key.1]);
                    let d = [pb[0] - pa[0], pb[1] - pa[1]];
                    let length = d[0].hypot(d[1]);
                    // Outward normal of the first (current) cell: rotate its
                    // counterclockwise edge direction by -90 degrees.
                    let (qa, qb) = (vertices[a], vertices[b]);
                    let normal = [(qb[1] - qa[1]) / length, -(qb[0] - qa[0]) / length];
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        cells: Vec::with_capacity(2),
                        normal,
                        tangent: [d[0] / length, d[1] / length],
                        length,
                        boundary: false,
                    });
                    edges.len() - 1
                });
                edges[id].cells.push(c);
                local.push(id);
            }
            cell_edges.push(local);
        }
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in edges.iter_mut() {
            e.boundary = e.cells.len() == 1;
            if e.boundary {
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            }
        }
        Mesh {
            kind,
            n,
            diagonal,
            vertices,
            cells,
            cell_edges,
            edges: EdgeTable { edges },
            boundary_vertex,
        }
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    /// Cells (or split squares) per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> Option<Diagonal> {
        self.diagonal
    }

    /// Mesh size `1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn edges(&self) -> &EdgeTable {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges.edges[e]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Outward normal of `cell` on its local edge `local`.
    pub fn outward_normal(&self, cell: usize, local: usize) -> [f64; 2] {
        let e = self.edge(self.cell_edges[cell][local]);
        if e.cells[0] == cell {
            e.normal
        } else {
            [-e.normal[0], -e.normal[1]]
        }
    }

    pub fn geometry(&self, c: usize) -> CellGeometry {
        let verts: Vec<[f64; 2]> = self.cells[c].iter().map(|&v| self.vertices[v]).collect();
        let v0 = verts[0];
        let (a, b) = match self.kind {
            CellKind::Triangle => (verts[1], verts[2]),
            CellKind::Square => (verts[1], verts[3]),
        };
        let jacobian = [[a[0] - v0[0], b[0] - v0[0]], [a[1] - v0[1], b[1] - v0[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let nv = verts.len();
        let edge_lengths = (0..nv)
            .map(|i| {
                let (p, q) = (verts[i], verts[(i + 1) % nv]);
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .collect();
        let outward_normals = (0..nv).map(|i| self.outward_normal(c, i)).collect();
        CellGeometry {
            vertices: verts,
            jacobian,
            det,
            edge_lengths,
            outward_normals,
        }
    }

    /// Signed area of a cell from its vertex cycle (shoelace formula).
    pub fn signed_area(&self, c: usize) -> f64 {
        let v = &self.cells[c];
        let nv = v.len();
        0.5 * (0..nv)
            .map(|i| {
                let (p, q) = (self.vertices[v[i]], self.vertices[v[(i + 1) % nv]]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
    }

    /// Writes one vertex per line as `x y`.
    pub fn dump_nodes<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "{} {}", v[0], v[1])?;
        }
        Ok(())
    }

    /// Writes one cell per line as space-separated vertex indices.
    pub fn dump_elements<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in &self.cells {
            let line: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euler(m: &Mesh) -> i64 {
        m.num_vertices() as i64 - m.num_edges() as i64 + m.num_cells() as i64
    }

    #[test]
    fn rect_counts() {
        for (n, c, v, e) in [(1, 1, 4, 4), (2, 4, 9, 12), (4, 16, 25, 40)] {
            let m = build_rect_grid(n).unwrap();
            assert_eq!((m.num_cells(), m.num_vertices(), m.num_edges()), (c, v, e));
            assert_eq!(euler(&m), 1);
        }
    }

    #[test]
    fn tri_counts() {
        let m = build_tri_grid(1, Diagonal::Right).unwrap();
        assert_eq!((m.num_cells(), m.num_vertices(), m.num_edges()), (2, 4, 5));
        let m = build_tri_grid(2, Diagonal::Right).unwrap();
        assert_eq!((m.num_cells(), m.num_vertices(), m.num_edges()), (8, 9, 16));
        for n in 1..6 {
            for d in [Diagonal::Right, Diagonal::Left] {
                let m = build_tri_grid(n, d).unwrap();
                assert_eq!(m.num_cells(), 2 * n * n);
                assert_eq!(m.num_edges(), 3 * n * n + 2 * n);
                assert_eq!(euler(&m), 1);
            }
            let m = build_tri_grid(n, Diagonal::Crossed).unwrap();
            assert_eq!(m.num_cells(), 4 * n * n);
            assert_eq!(euler(&m), 1);
        }
    }

    #[test]
    fn rejects_zero() {
        assert!(build_rect_grid(0).is_err());
        assert!(build_tri_grid(0, Diagonal::Right).is_err());
    }

    #[test]
    fn areas_and_orientation() {
        for n in 1..5 {
            for d in [Diagonal::Right, Diagonal::Left, Diagonal::Crossed] {
                let m = build_tri_grid(n, d).unwrap();
                let mut total = 0.0;
                for c in 0..m.num_cells() {
                    let a = m.signed_area(c);
                    assert!(a > 0.0);
                    if d != Diagonal::Crossed {
                        assert!((a - 0.5 / (n * n) as f64).abs() < 1e-15);
                        let g = m.geometry(c);
                        assert!((g.det.abs() - 1.0 / (n * n) as f64).abs() < 1e-15);
                    }
                    total += a;
                }
                assert!((total - 1.0).abs() < 1e-14);
            }
            let r = build_rect_grid(n).unwrap();
            let total: f64 = (0..r.num_cells()).map(|c| r.signed_area(c)).sum();
            assert!((total - 1.0).abs() < 1e-14);
            let g = r.geometry(0);
            assert!((g.det - 1.0 / (n * n) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn edge_table_invariants() {
        for m in [
            build_rect_grid(3).unwrap(),
            build_tri_grid(3, Diagonal::Right).unwrap(),
            build_tri_grid(2, Diagonal::Crossed).unwrap(),
        ] {
            for (id, e) in m.edges().iter().enumerate() {
                let dot = e.normal[0] * e.tangent[0] + e.normal[1] * e.tangent[1];
                assert!(dot.abs() < 1e-15);
                assert!((e.normal[0].hypot(e.normal[1]) - 1.0).abs() < 1e-15);
                assert!((e.tangent[0].hypot(e.tangent[1]) - 1.0).abs() < 1e-15);
                assert!(e.vertices[0] < e.vertices[1]);
                assert_eq!(e.boundary, e.cells.len() == 1);
                assert!(e.cells.windows(2).all(|w| w[0] < w[1]));
                if e.cells.len() == 2 {
                    let (t1, t2) = (e.cells[0], e.cells[1]);
                    let l1 = m.cell_edges(t1).iter().position(|&x| x == id).unwrap();
                    let l2 = m.cell_edges(t2).iter().position(|&x| x == id).unwrap();
                    let (n1, n2) = (m.outward_normal(t1, l1), m.outward_normal(t2, l2));
                    assert_eq!(n1, e.normal);
                    assert_eq!(n1, [-n2[0], -n2[1]]);
                } else {
                    // Boundary normals point out of the unit square.
                    let mid = m.vertices()[e.vertices[0]];
                    let probe = [mid[0] + 0.5 * e.tangent[0] * e.length, mid[1] + 0.5 * e.tangent[1] * e.length];
                    let out = [probe[0] + 1e-3 * e.normal[0], probe[1] + 1e-3 * e.normal[1]];
                    assert!(out[0] < 0.0 || out[0] > 1.0 || out[1] < 0.0 || out[1] > 1.0);
                }
            }
        }
    }

    #[test]
    fn interior_edges_have_two_cells() {
        let m = build_rect_grid(4).unwrap();
        let boundary = m.edges().iter().filter(|e| e.boundary).count();
        assert_eq!(boundary, 16);
        assert!(m.edges().iter().all(|e| (1..=2).contains(&e.cells.len())));
        let t = build_tri_grid(2, Diagonal::Right).unwrap();
        assert_eq!(t.edges().iter().filter(|e| e.boundary).count(), 8);
    }

    #[test]
    fn rebuild_is_deterministic() {
        assert_eq!(build_tri_grid(5, Diagonal::Left).unwrap(), build_tri_grid(5, Diagonal::Left).unwrap());
        assert_eq!(build_rect_grid(5).unwrap(), build_rect_grid(5).unwrap());
    }

    #[test]
    fn dump_format() {
        let m = build_rect_grid(1).unwrap();
        let mut nodes = Vec::new();
        let mut elems = Vec::new();
        m.dump_nodes(&mut nodes).unwrap();
        m.dump_elements(&mut elems).unwrap();
        assert_eq!(String::from_utf8(nodes).unwrap(), "0 0\n1 0\n0 1\n1 1\n");
        assert_eq!(String::from_utf8(elems).unwrap(), "0 1 3 2\n");
    }
}
