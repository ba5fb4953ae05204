//! Legacy ASCII VTK (version 3.0) snapshots of discrete fields.
//!
//! DG fields use three private points per cell. CR fields use the mesh
//! vertices followed by the edge midpoints: vertex values are averages of
//! the cell traces, midpoint values are the dofs themselves. Every field
//! also gets a cell-average array.

use std::io::Write;

use crate::error::{Error, Result};
use crate::space::{FieldVector, Scheme, Space};

fn cell_averages(space: &Space, u: &FieldVector) -> Vec<f64> {
    (0..space.mesh().n_cells())
        .map(|c| {
            let l = u.local(c);
            (l[0] + l[1] + l[2]) / 3.0
        })
        .collect()
}

/// Point values in the layout described in the module docs.
pub fn point_values(space: &Space, u: &FieldVector) -> Vec<f64> {
    let mesh = space.mesh();
    match space.kind() {
        Scheme::Dg => u.values.clone(),
        Scheme::Cr => {
            let nv = mesh.n_vertices();
            let mut sum = vec![0.0; nv];
            let mut count = vec![0usize; nv];
            for (c, cell) in mesh.cells().iter().enumerate() {
                let l = u.local(c);
                let total = l[0] + l[1] + l[2];
                for (i, &v) in cell.iter().enumerate() {
                    // phi_i = -1 and phi_j = 1 at vertex i
                    sum[v] += total - 2.0 * l[i];
                    count[v] += 1;
                }
            }
            let mut out: Vec<f64> = sum.iter().zip(&count).map(|(s, &n)| s / n.max(1) as f64).collect();
            out.extend_from_slice(&u.values);
            out
        }
    }
}

/// Writes one snapshot; `title` must fit on one line.
pub fn write_snapshot<W: Write>(mut w: W, space: &Space, title: &str, fields: &[(&str, &FieldVector)]) -> Result<()> {
    if title.contains('\n') || title.len() > 255 {
        return Err(Error::invalid("VTK title must be a single line of at most 255 bytes"));
    }
    for (name, f) in fields {
        if f.len() != space.n_dofs() {
            return Err(Error::invalid(format!("field {name} does not match the space")));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::invalid(format!("invalid VTK field name {name:?}")));
        }
    }
    let mesh = space.mesh();
    let points: Vec<[f64; 2]> = match space.kind() {
        Scheme::Dg => space.dofs().dof_locations.clone(),
        Scheme::Cr => {
            let mut p = mesh.vertices().to_vec();
            p.extend_from_slice(&space.dofs().dof_locations);
            p
        }
    };
    let n_cells = mesh.n_cells();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(w, "{:.16e} {:.16e} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", n_cells, 4 * n_cells)?;
    for (c, cell) in mesh.cells().iter().enumerate() {
        let ids = match space.kind() {
            Scheme::Dg => space.cell_dofs(c),
            Scheme::Cr => *cell,
        };
        writeln!(w, "3 {} {} {}", ids[0], ids[1], ids[2])?;
    }
    writeln!(w, "CELL_TYPES {n_cells}")?;
    for _ in 0..n_cells {
        writeln!(w, "5")?;
    }
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(w, "POINT_DATA {}", points.len())?;
    for (name, f) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in point_values(space, f) {
            writeln!(w, "{v:.16e}")?;
        }
    }
    writeln!(w, "CELL_DATA {n_cells}")?;
    for (name, f) in fields {
        writeln!(w, "SCALARS {name}_cell_average double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in cell_averages(space, f) {
            writeln!(w, "{v:.16e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, Rect};
    use std::sync::Arc;

    fn space(kind: Scheme) -> Space {
        Space::new(Arc::new(generate_rect_mesh(Rect::unit(), 2).unwrap()), kind)
    }

    fn render(s: &Space, fields: &[(&str, &FieldVector)]) -> String {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, s, "test", fields).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_and_counts() {
        for kind in [Scheme::Cr, Scheme::Dg] {
            let s = space(kind);
            let u = s.interpolate(|p| p[0]);
            let text = render(&s, &[("u", &u)]);
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines[0], "# vtk DataFile Version 3.0");
            assert_eq!(lines[2], "ASCII");
            assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
            let n_points = match kind {
                Scheme::Cr => s.mesh().n_vertices() + s.mesh().n_edges(),
                Scheme::Dg => 3 * s.mesh().n_cells(),
            };
            assert_eq!(lines[4], format!("POINTS {n_points} double"));
            assert!(text.contains(&format!("CELL_TYPES {}", s.mesh().n_cells())));
            assert!(text.contains(&format!("POINT_DATA {n_points}")));
            assert!(text.contains("SCALARS u double 1"));
            assert!(text.contains("SCALARS u_cell_average double 1"));
            let fives = lines.iter().filter(|l| **l == "5").count();
            assert_eq!(fives, s.mesh().n_cells());
        }
    }

    #[test]
    fn linear_field_point_values_exact() {
        let g = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1];
        for kind in [Scheme::Cr, Scheme::Dg] {
            let s = space(kind);
            let u = s.interpolate(g);
            let pv = point_values(&s, &u);
            let pts: Vec<[f64; 2]> = match kind {
                Scheme::Dg => s.dofs().dof_locations.clone(),
                Scheme::Cr => s.mesh().vertices().iter().chain(&s.dofs().dof_locations).copied().collect(),
            };
            for (v, p) in pv.iter().zip(&pts) {
                assert!((v - g(*p)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let s = space(Scheme::Dg);
        let u = s.zeros();
        let mut buf = Vec::new();
        assert!(write_snapshot(&mut buf, &s, "a\nb", &[("u", &u)]).is_err());
        assert!(write_snapshot(&mut buf, &s, "t", &[("bad name", &u)]).is_err());
        let other = space(Scheme::Cr).zeros();
        assert!(write_snapshot(&mut buf, &s, "t", &[("u", &other)]).is_err());
    }

    #[test]
    fn deterministic_and_two_fields() {
        let s = space(Scheme::Cr);
        let u = s.interpolate(|p| p[0] * p[1]);
        let v = s.interpolate(|p| p[1]);
        let a = render(&s, &[("u", &u), ("v", &v)]);
        assert_eq!(a, render(&s, &[("u", &u), ("v", &v)]));
        assert!(a.contains("SCALARS v double 1"));
    }
}
