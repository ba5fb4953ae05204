//! A single run through the library API: CR elements, memory kernel
//! `t^{-1/2}`, no forcing, a bump as initial data.
//!
//! ```text
//! cargo run --release --example quickstart -- [cr|dg] [cells]
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use gbhe::forms::ModelParams;
use gbhe::kernel::KernelSpec;
use gbhe::mesh::{generate_rect_mesh, Rect};
use gbhe::solver::{run, stability_check, Problem, TimeGrid};
use gbhe::space::{Scheme, Space};

fn main() -> gbhe::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme = if args.iter().any(|a| a == "dg") { Scheme::Dg } else { Scheme::Cr };
    let cells = args.iter().find_map(|a| a.parse().ok()).unwrap_or(16);

    let space = Space::new(Arc::new(generate_rect_mesh(Rect::unit(), cells)?), scheme);
    let params = ModelParams::default();
    let grid = TimeGrid::new(0.5, 50)?;
    let bump = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).sin();
    let u0 = space.interpolate(bump);
    let traj = run(Problem::new(space.clone(), params, KernelSpec::power_law(0.5), grid, u0))?;

    for d in traj.diagnostics.iter().step_by(10) {
        println!(
            "t = {:.2}  newton = {}  |u| = {:.5}  |grad u| = {:.5}",
            d.time, d.newton_iterations, d.l2_norm, d.grad_norm
        );
    }
    let st = stability_check(&traj, &space, &params, &grid, None, &bump);
    println!("stability: {:.4e} <= {:.4e} ({})", st.lhs, st.rhs, st.holds);
    Ok(())
}
