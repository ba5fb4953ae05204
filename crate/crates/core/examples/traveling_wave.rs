//! Traveling front `1 / (1 + exp(Re (x + y - t) / 2))` with Dirichlet data
//! taken from the exact solution, with and without memory.
//!
//! ```text
//! cargo run --release --example traveling_wave -- [cr|dg] [Re] [eta]
//! ```

use std::fs::File;
use std::io::BufWriter;

use gbhe::kernel::KernelSpec;
use gbhe::mms::{convergence_study, run_level, ManufacturedCase, StudySpec};
use gbhe::space::Scheme;
use gbhe::vtk::write_snapshot;

fn main() -> gbhe::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme = if args.iter().any(|a| a == "dg") { Scheme::Dg } else { Scheme::Cr };
    let nums: Vec<f64> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let re = nums.first().copied().unwrap_or(50.0);
    let eta = nums.get(1).copied().unwrap_or(1.0);

    let case = ManufacturedCase::traveling_wave(re)?;
    let mut spec = StudySpec::new(case, scheme, KernelSpec::power_law(0.5));
    spec.params.eta = eta;
    spec.levels = vec![8, 16, 32];
    let table = convergence_study(&spec)?;
    print!("{}", table.to_csv());

    let (space, traj, _) = run_level(&spec, 32)?;
    let last = traj.states.last().expect("at least one state");
    let (lo, hi) = last.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("range at T = 1: [{lo:.4}, {hi:.4}]");
    let path = std::env::temp_dir().join(format!("traveling_wave_re{re}_{scheme}.vtk"));
    write_snapshot(BufWriter::new(File::create(&path)?), &space, "traveling wave at T=1", &[("u", last)])?;
    println!("wrote {}", path.display());
    Ok(())
}
