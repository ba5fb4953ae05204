//! Smallest observed `a_DG(v, v) / |||v|||^2` over random DG fields.
//!
//! ```text
//! cargo run --release --example dg_coercivity -- [penalty] [samples]
//! ```

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gbhe::forms::{assemble_stiffness_dg, dg_norm_sq};
use gbhe::linalg::dot;
use gbhe::mesh::{generate_rect_mesh, Rect};
use gbhe::space::Space;

fn main() -> gbhe::Result<()> {
    let nums: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let penalty = nums.first().copied().unwrap_or(40.0);
    let samples = nums.get(1).copied().unwrap_or(1000.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [4, 8, 16] {
        let space = Space::dg(Arc::new(generate_rect_mesh(Rect::unit(), n)?));
        let a = assemble_stiffness_dg(&space, penalty)?;
        let mut min = f64::INFINITY;
        for _ in 0..samples {
            let v = space.field((0..space.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect())?;
            let ratio = dot(&v.values, &a.spmv(&v.values)?) / dg_norm_sq(&v, &space, penalty);
            min = min.min(ratio);
        }
        println!("n = {n:2}: min ratio {min:.4}");
    }
    Ok(())
}
