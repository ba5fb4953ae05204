//! Discontinuous P1 space: per-cell vertex dofs, edge traces, jumps and averages.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::EdgeRule;
use crate::space::{DofMap, FieldVector, Scheme};

/// Dofs `3c, 3c + 1, 3c + 2` are the values at the vertices of cell `c`.
pub fn dg_dof_map(mesh: &Mesh) -> DofMap {
    let n = mesh.n_cells();
    let mut dof_locations = Vec::with_capacity(3 * n);
    for cell in mesh.cells() {
        for &v in cell {
            dof_locations.push(mesh.vertices()[v]);
        }
    }
    DofMap {
        kind: Scheme::Dg,
        n_dofs: 3 * n,
        cell_dofs: (0..n).map(|c| [3 * c, 3 * c + 1, 3 * c + 2]).collect(),
        dof_locations,
        boundary_dofs: Vec::new(),
    }
}

/// Quadrature data of one edge seen from both adjacent cells.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTraceContext {
    pub edge: usize,
    pub plus: usize,
    /// `None` on the boundary.
    pub minus: Option<usize>,
    /// Unit normal pointing out of the plus cell.
    pub normal: [f64; 2],
    pub h_e: f64,
    pub points: Vec<Point>,
    /// Physical weights (reference weight times edge length).
    pub weights: Vec<f64>,
    pub lambda_plus: Vec<[f64; 3]>,
    /// Empty on the boundary.
    pub lambda_minus: Vec<[f64; 3]>,
}

impl EdgeTraceContext {
    pub fn new(mesh: &Mesh, edge: usize, rule: &EdgeRule) -> Result<Self> {
        let geo = mesh.edge_geometry(edge)?;
        let ec = mesh.edge_cells()[edge];
        let [a, b] = mesh.edges()[edge];
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let points = rule.points.iter().map(|&s| [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]).collect();
        let lambdas = |c: usize| -> Vec<[f64; 3]> {
            let cell = mesh.cells()[c];
            let la = cell.iter().position(|&v| v == a).expect("edge vertex in cell");
            let lb = cell.iter().position(|&v| v == b).expect("edge vertex in cell");
            rule.points
                .iter()
                .map(|&s| {
                    let mut l = [0.0; 3];
                    l[la] = 1.0 - s;
                    l[lb] = s;
                    l
                })
                .collect()
        };
        Ok(EdgeTraceContext {
            edge,
            plus: ec.first,
            minus: ec.second,
            normal: geo.normal,
            h_e: geo.length,
            points,
            weights: rule.weights.iter().map(|w| w * geo.length).collect(),
            lambda_plus: lambdas(ec.first),
            lambda_minus: ec.second.map(lambdas).unwrap_or_default(),
        })
    }

    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// All edge contexts of a mesh, in edge order.
pub fn edge_contexts(mesh: &Mesh, rule: &EdgeRule) -> Vec<EdgeTraceContext> {
    (0..mesh.n_edges()).map(|e| EdgeTraceContext::new(mesh, e, rule).expect("edge index in range")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpAverage {
    /// `u_+ n_+ + u_- n_-`.
    pub jump: [f64; 2],
    pub average: f64,
    pub plus: f64,
    pub minus: Option<f64>,
}

fn trace(kind: Scheme, local: [f64; 3], lambda: [f64; 3]) -> f64 {
    match kind {
        Scheme::Dg => local[0] * lambda[0] + local[1] * lambda[1] + local[2] * lambda[2],
        Scheme::Cr => (0..3).map(|i| local[i] * (1.0 - 2.0 * lambda[i])).sum(),
    }
}

/// Jump and average of `u` at quadrature point `q` of the edge. On boundary
/// edges `[[u]] = u_+ n_+` and `{{u}} = u_+`.
pub fn jump_average(ctx: &EdgeTraceContext, u: &FieldVector, q: usize) -> JumpAverage {
    let kind = u.dofs().kind;
    let plus = trace(kind, u.local(ctx.plus), ctx.lambda_plus[q]);
    let n = ctx.normal;
    match ctx.minus {
        None => JumpAverage { jump: [plus * n[0], plus * n[1]], average: plus, plus, minus: None },
        Some(m) => {
            let minus = trace(kind, u.local(m), ctx.lambda_minus[q]);
            JumpAverage {
                jump: [(plus - minus) * n[0], (plus - minus) * n[1]],
                average: 0.5 * (plus + minus),
                plus,
                minus: Some(minus),
            }
        }
    }
}

/// `gamma / h_E`.
pub fn penalty_coeff(ctx: &EdgeTraceContext, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("penalty scale must be positive, got {gamma}")));
    }
    Ok(gamma / ctx.h_e)
}
