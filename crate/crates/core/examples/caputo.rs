//! Type I study with the Caputo term of order 1/2 added to the time derivative.
//!
//! ```text
//! cargo run --release --example caputo -- [cr|dg] [levels...]
//! ```

use gbhe::kernel::KernelSpec;
use gbhe::mms::{convergence_study, ManufacturedCase, StudySpec};
use gbhe::space::Scheme;

fn main() -> gbhe::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme = if args.iter().any(|a| a == "dg") { Scheme::Dg } else { Scheme::Cr };
    let kernel = KernelSpec::power_law(0.5).with_caputo(0.5);
    let mut spec = StudySpec::new(ManufacturedCase::type_i(), scheme, kernel);
    let levels: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    spec.levels = if levels.len() >= 3 { levels } else { vec![8, 16, 32] };
    let table = convergence_study(&spec)?;
    print!("{}", table.to_csv());
    if let Some(r) = table.final_rate_energy() {
        println!("energy rate between the two finest levels: {r:.3}");
    }
    Ok(())
}
