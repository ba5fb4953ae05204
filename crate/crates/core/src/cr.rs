//! Crouzeix-Raviart P1-nonconforming space: one dof per edge midpoint.

use crate::linalg::SparseMatrix;
use crate::mesh::{CellGeometry, Mesh, Point};
use crate::space::{local_basis, DofMap, FieldVector, Scheme, Space};

/// Local dof `i` of a cell is its edge opposite vertex `i`.
pub fn cr_dof_map(mesh: &Mesh) -> DofMap {
    let dof_locations = (0..mesh.n_edges())
        .map(|e| {
            let [a, b] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        })
        .collect();
    let boundary_dofs = (0..mesh.n_edges()).filter(|&e| mesh.is_boundary_edge(e)).collect();
    DofMap {
        kind: Scheme::Cr,
        n_dofs: mesh.n_edges(),
        cell_dofs: mesh.cell_edges().to_vec(),
        dof_locations,
        boundary_dofs,
    }
}

/// `phi_i = 1 - 2 lambda_i` and its (constant) gradient.
pub fn cr_basis(geom: &CellGeometry, lambda: [f64; 3]) -> ([f64; 3], [[f64; 2]; 3]) {
    local_basis(Scheme::Cr, geom, lambda)
}

/// Midpoint interpolant `I_h g`.
pub fn cr_interpolate(space: &Space, g: impl Fn(Point) -> f64) -> FieldVector {
    debug_assert_eq!(space.kind(), Scheme::Cr);
    space.interpolate(g)
}

/// Strong Dirichlet data at boundary midpoints: boundary rows become unit
/// rows with `rhs = g(midpoint, t)`, and the known values are moved to the
/// right-hand side of the remaining rows before their columns are cleared.
pub fn apply_dirichlet_cr(
    dofs: &DofMap,
    g: impl Fn(Point, f64) -> f64,
    t: f64,
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
) {
    let mut values = vec![0.0; dofs.n_dofs];
    for &b in &dofs.boundary_dofs {
        values[b] = g(dofs.dof_locations[b], t);
    }
    apply_dirichlet_values(dofs, &values, matrix, rhs);
}

/// As [`apply_dirichlet_cr`] with the boundary values given per dof
/// (entries at interior dofs are ignored).
pub fn apply_dirichlet_values(dofs: &DofMap, values: &[f64], matrix: &mut SparseMatrix, rhs: &mut [f64]) {
    let mut is_bdry = vec![false; dofs.n_dofs];
    for &b in &dofs.boundary_dofs {
        is_bdry[b] = true;
    }
    let pattern = matrix.pattern().clone();
    let vals = matrix.values_mut();
    for i in 0..pattern.n_rows() {
        let range = pattern.row_ptr()[i]..pattern.row_ptr()[i + 1];
        if is_bdry[i] {
            for k in range {
                vals[k] = if pattern.col_idx()[k] == i { 1.0 } else { 0.0 };
            }
            rhs[i] = values[i];
        } else {
            for k in range {
                let j = pattern.col_idx()[k];
                if is_bdry[j] {
                    rhs[i] -= vals[k] * values[j];
                    vals[k] = 0.0;
                }
            }
        }
    }
}
