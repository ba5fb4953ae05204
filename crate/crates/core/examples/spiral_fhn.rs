//! FitzHugh-Nagumo coupling on (0, 300)^2 seeded with a broken front.
//!
//! ```text
//! cargo run --release --example spiral_fhn -- [eta] [cells] [t_final]
//! ```

use std::fs::File;
use std::io::BufWriter;

use gbhe::cli::build_problem;
use gbhe::config::parse_config_str;
use gbhe::solver::Stepper;
use gbhe::vtk::write_snapshot;

fn main() -> gbhe::Result<()> {
    let nums: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let eta = nums.first().copied().unwrap_or(0.0);
    let cells = nums.get(1).copied().unwrap_or(64.0) as usize;
    let t_final = nums.get(2).copied().unwrap_or(150.0);
    let steps = (t_final / 0.5).round() as usize;
    let cfg = parse_config_str(&format!(
        "[mesh]\nscheme = \"dg\"\ncells = {cells}\n\
         [time]\nt_final = {t_final}\nsteps = {steps}\n\
         [model]\nnu = 1.0\nalpha = 0.1\nbeta = 1.0\nreaction_gamma = 0.1\neta = {eta}\n\
         [case]\ntype = \"spiral\"\n\
         [fhn]\neps = 0.01\nrho = 0.5\n"
    ))?;
    let problem = build_problem(&cfg)?;
    let space = problem.space.clone();
    let mut stepper = Stepper::new(problem)?;
    while !stepper.is_finished() {
        let d = stepper.step()?;
        if d.step % 50 == 0 {
            println!("t = {:6.1}  newton = {}  |u| = {:.4e}", d.time, d.newton_iterations, d.l2_norm);
        }
    }
    let traj = stepper.into_trajectory();
    let u = traj.states.last().expect("final state");
    let v = &traj.v_states.as_ref().expect("recovery field")[traj.len() - 1];
    let n = u.len() as f64;
    let mean = u.values.iter().sum::<f64>() / n;
    let var = u.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let max = u.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    println!("max |u| = {max:.4}, variance = {var:.4e}");
    let path = std::env::temp_dir().join("spiral_final.vtk");
    write_snapshot(BufWriter::new(File::create(&path)?), &space, "spiral", &[("u", u), ("v", v)])?;
    println!("wrote {}", path.display());
    Ok(())
}
