//! Convergence study for a manufactured solution.
//!
//! ```text
//! cargo run --release --example convergence -- [cr|dg] [type-i|type-ii|wave50|wave100] [caputo] [levels...]
//! ```

use std::time::Instant;

use gbhe::kernel::KernelSpec;
use gbhe::mms::{convergence_study, ManufacturedCase, StudySpec};
use gbhe::space::Scheme;

fn main() -> gbhe::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme = match args.first().map(String::as_str) {
        Some("dg") => Scheme::Dg,
        _ => Scheme::Cr,
    };
    let case = match args.get(1).map(String::as_str) {
        Some("type-ii") => ManufacturedCase::type_ii(),
        Some("wave50") => ManufacturedCase::traveling_wave(50.0)?,
        Some("wave100") => ManufacturedCase::traveling_wave(100.0)?,
        _ => ManufacturedCase::type_i(),
    };
    let mut kernel = KernelSpec::power_law(0.5);
    if args.iter().any(|a| a == "caputo") {
        kernel = kernel.with_caputo(0.5);
    }
    let mut spec = StudySpec::new(case, scheme, kernel);
    let levels: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if levels.len() >= 3 {
        spec.levels = levels;
    }
    let start = Instant::now();
    let table = convergence_study(&spec)?;
    print!("{}", table.to_csv());
    eprintln!("{} {} took {:.1} s", spec.case.name, scheme, start.elapsed().as_secs_f64());
    Ok(())
}
