//! Runs a JSON experiment config in-process, as the CLI does.
//!
//! ```text
//! cargo run --release --example run_config -- crates/core/configs/recon_g.json
//! ```

use std::path::PathBuf;

use radtrans::io::{run_experiment, RunOptions};

fn main() -> radtrans::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/smoke_forward.json"));
    let out = std::env::temp_dir().join("radtrans-run-config");
    let report = run_experiment(
        &path,
        &RunOptions {
            out: Some(out),
            ..Default::default()
        },
    )?;
    println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary is JSON"));
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
