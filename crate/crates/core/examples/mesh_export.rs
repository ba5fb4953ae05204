//! Writes a uniformly refined mesh of the unit square as legacy VTK.
//!
//! ```text
//! cargo run --example mesh_export -- [cells] [refinements]
//! ```

use std::fs::File;
use std::io::BufWriter;

use gbhe::mesh::{generate_rect_mesh, refine_uniform, Rect};

fn main() -> gbhe::Result<()> {
    let nums: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut mesh = generate_rect_mesh(Rect::unit(), nums.first().copied().unwrap_or(4))?;
    for _ in 0..nums.get(1).copied().unwrap_or(1) {
        mesh = refine_uniform(&mesh)?;
    }
    println!(
        "{} vertices, {} edges, {} cells, h = {:.4}",
        mesh.n_vertices(),
        mesh.n_edges(),
        mesh.n_cells(),
        mesh.max_edge_length()
    );
    let path = std::env::temp_dir().join("mesh.vtk");
    mesh.write_vtk(BufWriter::new(File::create(&path)?))?;
    println!("wrote {}", path.display());
    Ok(())
}
