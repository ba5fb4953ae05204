//! Drives a run from a TOML configuration, the same path the `gbhe` binary takes.
//!
//! ```text
//! cargo run --release --example config_run -- [config.toml]
//! ```

use gbhe::cli::{cmd_simulate, metadata_header};
use gbhe::config::{parse_config, parse_config_str};

const DEFAULT: &str = r#"
[mesh]
scheme = "dg"
cells = 16

[case]
type = "traveling_wave"
re = 50.0

[output]
snapshot_interval = 0.25
prefix = "wave"
"#;

fn main() -> gbhe::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => parse_config(path.as_ref())?,
        None => parse_config_str(DEFAULT)?,
    };
    print!("{}", metadata_header(&cfg));
    let out = std::env::temp_dir().join("gbhe_config_run");
    let res = cmd_simulate(&cfg, &out)?;
    for s in &res.snapshots {
        println!("wrote {}", s.display());
    }
    println!("diagnostics in {}", res.diagnostics.display());
    Ok(())
}
