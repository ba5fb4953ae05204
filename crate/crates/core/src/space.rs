//! Degree-of-freedom maps and discrete fields shared by the CR and DG spaces.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::CsrPattern;
use crate::mesh::{CellGeometry, Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Cr,
    Dg,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Cr => "cr",
            Scheme::Dg => "dg",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub kind: Scheme,
    pub n_dofs: usize,
    pub cell_dofs: Vec<[usize; 3]>,
    /// Edge midpoint (CR) or vertex (DG).
    pub dof_locations: Vec<Point>,
    /// Sorted; empty for DG.
    pub boundary_dofs: Vec<usize>,
}

impl DofMap {
    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        self.boundary_dofs.binary_search(&dof).is_ok()
    }
}

/// Local basis values and gradients on one cell.
///
/// CR: `phi_i = 1 - 2 lambda_i`, attached to the edge opposite vertex `i`.
/// DG: `phi_i = lambda_i`, attached to vertex `i`.
pub fn local_basis(kind: Scheme, geom: &CellGeometry, lambda: [f64; 3]) -> ([f64; 3], [[f64; 2]; 3]) {
    let gl = geom.grad_lambda;
    match kind {
        Scheme::Cr => (
            [1.0 - 2.0 * lambda[0], 1.0 - 2.0 * lambda[1], 1.0 - 2.0 * lambda[2]],
            [
                [-2.0 * gl[0][0], -2.0 * gl[0][1]],
                [-2.0 * gl[1][0], -2.0 * gl[1][1]],
                [-2.0 * gl[2][0], -2.0 * gl[2][1]],
            ],
        ),
        Scheme::Dg => (lambda, gl),
    }
}

/// A mesh together with a dof map and its matrix sparsity pattern.
#[derive(Debug, Clone)]
pub struct Space {
    mesh: Arc<Mesh>,
    dofs: Arc<DofMap>,
    pattern: Arc<CsrPattern>,
}

impl Space {
    pub fn new(mesh: Arc<Mesh>, kind: Scheme) -> Self {
        let dofs = match kind {
            Scheme::Cr => crate::cr::cr_dof_map(&mesh),
            Scheme::Dg => crate::dg::dg_dof_map(&mesh),
        };
        let pattern = build_pattern(&mesh, &dofs);
        Space { mesh, dofs: Arc::new(dofs), pattern: Arc::new(pattern) }
    }

    pub fn cr(mesh: Arc<Mesh>) -> Self {
        Self::new(mesh, Scheme::Cr)
    }

    pub fn dg(mesh: Arc<Mesh>) -> Self {
        Self::new(mesh, Scheme::Dg)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn dofs_arc(&self) -> &Arc<DofMap> {
        &self.dofs
    }

    pub fn kind(&self) -> Scheme {
        self.dofs.kind
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn cell_dofs(&self, cell: usize) -> [usize; 3] {
        self.dofs.cell_dofs[cell]
    }

    pub fn basis(&self, cell: usize, lambda: [f64; 3]) -> ([f64; 3], [[f64; 2]; 3]) {
        local_basis(self.kind(), self.mesh.geometry(cell), lambda)
    }

    pub fn zeros(&self) -> FieldVector {
        FieldVector::zeros(self.dofs.clone())
    }

    /// Nodal interpolant: edge midpoints for CR, vertices for DG.
    pub fn interpolate(&self, g: impl Fn(Point) -> f64) -> FieldVector {
        let values = self.dofs.dof_locations.iter().map(|&p| g(p)).collect();
        FieldVector { dofs: self.dofs.clone(), values }
    }

    pub fn field(&self, values: Vec<f64>) -> Result<FieldVector> {
        FieldVector::new(self.dofs.clone(), values)
    }
}

// CR couples dofs sharing a cell. DG additionally couples the two cells of
// every interior edge through face terms.
fn build_pattern(mesh: &Mesh, dofs: &DofMap) -> CsrPattern {
    let mut blocks: Vec<Vec<usize>> = dofs.cell_dofs.iter().map(|d| d.to_vec()).collect();
    if dofs.kind == Scheme::Dg {
        for ec in mesh.edge_cells() {
            if let Some(second) = ec.second {
                let mut b = dofs.cell_dofs[ec.first].to_vec();
                b.extend_from_slice(&dofs.cell_dofs[second]);
                blocks.push(b);
            }
        }
    }
    CsrPattern::from_cliques(dofs.n_dofs, blocks.iter().map(|b| b.as_slice()))
}

/// Coefficients of a discrete field relative to a dof map.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    dofs: Arc<DofMap>,
    pub values: Vec<f64>,
}

impl FieldVector {
    pub fn new(dofs: Arc<DofMap>, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofs.n_dofs {
            return Err(Error::invalid(format!(
                "field has {} values but the dof map has {} dofs",
                values.len(),
                dofs.n_dofs
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field contains non-finite values"));
        }
        Ok(FieldVector { dofs, values })
    }

    pub fn zeros(dofs: Arc<DofMap>) -> Self {
        let values = vec![0.0; dofs.n_dofs];
        FieldVector { dofs, values }
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn local(&self, cell: usize) -> [f64; 3] {
        let d = self.dofs.cell_dofs[cell];
        [self.values[d[0]], self.values[d[1]], self.values[d[2]]]
    }

    /// Value at barycentric point `lambda` of `cell`.
    pub fn eval(&self, mesh: &Mesh, cell: usize, lambda: [f64; 3]) -> f64 {
        let (phi, _) = local_basis(self.dofs.kind, mesh.geometry(cell), lambda);
        let u = self.local(cell);
        u[0] * phi[0] + u[1] * phi[1] + u[2] * phi[2]
    }

    /// Constant broken gradient on `cell`.
    pub fn grad(&self, mesh: &Mesh, cell: usize) -> [f64; 2] {
        let (_, g) = local_basis(self.dofs.kind, mesh.geometry(cell), [1.0 / 3.0; 3]);
        let u = self.local(cell);
        [u[0] * g[0][0] + u[1] * g[1][0] + u[2] * g[2][0], u[0] * g[0][1] + u[1] * g[1][1] + u[2] * g[2][1]]
    }
}
