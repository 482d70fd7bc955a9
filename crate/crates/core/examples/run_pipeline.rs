//! Library entry point behind the command-line tool: parse a JSON
//! configuration, run subcommands and inspect the manifest.
//!
//! `cargo run --example run_pipeline [output-dir]`

use std::path::PathBuf;

use hughes_spectral::config::parse_config;
use hughes_spectral::run::{run, RunOptions, Subcommand};

const CONFIG: &str = r#"{
    "model": {"rho_bar": 0.25, "horizon": 10},
    "grid": {"n": 32, "length": 64},
    "data": {"kind": "gaussian", "amplitude": 1e-3, "width": 4, "seed": 7},
    "picard": {"time_nodes": 161},
    "experiment": {"samples": 41}
}"#;

fn main() -> hughes_spectral::Result<()> {
    let base = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("hughes-pipeline"), PathBuf::from);
    let config = parse_config(CONFIG)?;
    for cmd in [Subcommand::ParamsCheck, Subcommand::Linear, Subcommand::Nonlinear, Subcommand::StabilityMap] {
        let options = RunOptions {
            output_dir: Some(base.join(cmd.name())),
            dump_fields: false,
        };
        let outcome = run(cmd, &config, &options);
        let m = &outcome.manifest;
        println!(
            "{:<14} exit {} status {:<5} artifacts {:?}",
            cmd.name(),
            outcome.exit_code,
            m.status,
            m.artifacts
        );
    }
    println!("outputs under {}", base.display());
    Ok(())
}
