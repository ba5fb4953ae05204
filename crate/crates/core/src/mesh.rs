//! Two-dimensional conforming triangulations with the edge topology needed by
//! edge-based (Crouzeix-Raviart) degrees of freedom and DG face terms.
//!
//! Local numbering convention used throughout the crate: local edge `i` of a
//! cell is the edge opposite local vertex `i`.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `(xmin, ymin, xmax, ymax)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self { xmin, ymin, xmax, ymax }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        [0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax)]
    }
}

/// Cells adjacent to an edge. Interior edges have two, boundary edges one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCells {
    pub first: usize,
    pub second: Option<usize>,
}

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates (constant on the cell).
    pub grad_lambda: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_lambda = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Self { vertices, area: 0.5 * det, grad_lambda }
    }

    /// Physical point for barycentric coordinates `lambda`.
    pub fn point(&self, lambda: [f64; 3]) -> Point {
        let v = &self.vertices;
        [
            lambda[0] * v[0][0] + lambda[1] * v[1][0] + lambda[2] * v[2][0],
            lambda[0] * v[0][1] + lambda[1] * v[1][1] + lambda[2] * v[2][1],
        ]
    }

    pub fn centroid(&self) -> Point {
        self.point([1.0 / 3.0; 3])
    }

    /// Barycentric coordinates of a physical point (affine, exact up to rounding).
    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let c = self.centroid();
        let d = [x[0] - c[0], x[1] - c[1]];
        let mut lambda = [0.0; 3];
        for (l, g) in lambda.iter_mut().zip(&self.grad_lambda) {
            *l = 1.0 / 3.0 + g[0] * d[0] + g[1] * d[1];
        }
        lambda
    }
}

/// Unit normal, length and midpoint of an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub normal: [f64; 2],
    pub length: f64,
    pub midpoint: Point,
}

/// Immutable 2D triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    edge_cells: Vec<EdgeCells>,
    boundary: Vec<bool>,
    normals: Vec<[f64; 2]>,
    geometry: Vec<CellGeometry>,
    domain: Rect,
}

impl Mesh {
    /// Builds the edge topology for a list of counterclockwise triangles.
    pub fn from_cells(vertices: Vec<Point>, cells: Vec<[usize; 3]>, domain: Rect) -> Result<Self> {
        let mut geometry = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid(format!("cell {c} references a missing vertex")));
            }
            let g = CellGeometry::new([vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]]);
            if !(g.area > 0.0) {
                return Err(Error::invalid(format!("cell {c} has nonpositive signed area {}", g.area)));
            }
            geometry.push(g);
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<EdgeCells> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = match lookup.get(&key) {
                    Some(&e) => {
                        let ec = &mut edge_cells[e];
                        if ec.second.is_some() {
                            return Err(Error::invalid(format!("edge ({a}, {b}) is shared by more than two cells")));
                        }
                        ec.second = Some(c);
                        e
                    }
                    None => {
                        let e = edges.len();
                        lookup.insert(key, e);
                        edges.push([a, b]);
                        edge_cells.push(EdgeCells { first: c, second: None });
                        e
                    }
                };
                *slot = e;
            }
            cell_edges.push(local);
        }

        let boundary: Vec<bool> = edge_cells.iter().map(|ec| ec.second.is_none()).collect();
        let normals = edges
            .iter()
            .zip(&edge_cells)
            .map(|(&[a, b], ec)| {
                let (pa, pb) = (vertices[a], vertices[b]);
                let t = [pb[0] - pa[0], pb[1] - pa[1]];
                let len = t[0].hypot(t[1]);
                let mut n = [t[1] / len, -t[0] / len];
                let centroid = geometry[ec.first].centroid();
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                if n[0] * (mid[0] - centroid[0]) + n[1] * (mid[1] - centroid[1]) < 0.0 {
                    n = [-n[0], -n[1]];
                }
                n
            })
            .collect();

        Ok(Self { vertices, cells, edges, cell_edges, edge_cells, boundary, normals, geometry, domain })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }

    pub fn edge_cells(&self) -> &[EdgeCells] {
        &self.edge_cells
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary[e]
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Largest edge length.
    pub fn max_edge_length(&self) -> f64 {
        (0..self.n_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    /// Local index (0..3) of edge `e` within `cell`.
    pub fn local_edge_index(&self, cell: usize, e: usize) -> Option<usize> {
        self.cell_edges[cell].iter().position(|&x| x == e)
    }

    /// Normal oriented out of the edge's first cell (towards the second for
    /// interior edges), length and midpoint.
    pub fn edge_geometry(&self, e: usize) -> Result<EdgeGeometry> {
        if e >= self.edges.len() {
            return Err(Error::invalid(format!("edge index {e} out of range ({} edges)", self.edges.len())));
        }
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        Ok(EdgeGeometry {
            normal: self.normals[e],
            length: self.edge_length(e),
            midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
        })
    }

    /// Writes the bare triangulation as legacy ASCII VTK.
    pub fn write_vtk<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "triangulation")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.vertices.len())?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} 0", p[0], p[1])?;
        }
        writeln!(w, "CELLS {} {}", self.cells.len(), 4 * self.cells.len())?;
        for c in &self.cells {
            writeln!(w, "3 {} {} {}", c[0], c[1], c[2])?;
        }
        writeln!(w, "CELL_TYPES {}", self.cells.len())?;
        for _ in &self.cells {
            writeln!(w, "5")?;
        }
        Ok(())
    }
}

/// Structured triangulation of a rectangle: `n x n` quads, each split along
/// the diagonal from its lower-left to its upper-right corner.
pub fn generate_rect_mesh(domain: Rect, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("cells-per-side count must be at least 1"));
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        return Err(Error::invalid(format!("degenerate rectangle {domain:?}")));
    }
    let hx = domain.width() / n as f64;
    let hy = domain.height() / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { domain.xmax } else { domain.xmin + i as f64 * hx };
            let y = if j == n { domain.ymax } else { domain.ymin + j as f64 * hy };
            vertices.push([x, y]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    Mesh::from_cells(vertices, cells, domain)
}

/// Red refinement: every triangle is split into four congruent children
/// through its edge midpoints.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    for &[a, b] in &mesh.edges {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
    }
    let mut cells = Vec::with_capacity(4 * mesh.n_cells());
    for (cell, edges) in mesh.cells.iter().zip(&mesh.cell_edges) {
        let [v0, v1, v2] = *cell;
        let [m0, m1, m2] = [nv + edges[0], nv + edges[1], nv + edges[2]];
        cells.push([v0, m2, m1]);
        cells.push([v1, m0, m2]);
        cells.push([v2, m1, m0]);
        cells.push([m0, m1, m2]);
    }
    Mesh::from_cells(vertices, cells, mesh.domain)
}
