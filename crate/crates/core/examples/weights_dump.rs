//! Memory quadrature weights for `K(t) = t^-mu`.
//!
//! ```text
//! cargo run --example weights_dump -- [mu] [dt] [steps]
//! ```

use gbhe::kernel::{memory_weights, KernelSpec};

fn main() -> gbhe::Result<()> {
    let nums: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mu = nums.first().copied().unwrap_or(0.5);
    let dt = nums.get(1).copied().unwrap_or(0.1);
    let n = nums.get(2).copied().unwrap_or(6.0) as usize;
    let w = memory_weights(&KernelSpec::power_law(mu), dt, n)?;
    println!("mu = {mu}, dt = {dt}");
    for k in 1..=n {
        let row: Vec<String> = (1..=k).map(|j| format!("{:.6e}", w.get(k, j))).collect();
        println!("k = {k:2}: {}", row.join(" "));
    }
    println!("diagonal {:.12e}", w.diag());
    Ok(())
}
