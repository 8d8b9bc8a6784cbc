//! The command pipeline driven from code: simulate, fit with all three
//! estimators, compare distances, and localize a device.
//!
//! ```bash
//! cargo run --release --example end_to_end_pipeline
//! ```
//!
//! Uses `examples/configs/desk_scene.toml` with its output redirected to a
//! temporary directory.

use std::path::Path;

use wavecoef::cli::{self, RunConfig};

fn main() -> wavecoef::Result<()> {
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/desk_scene.toml");
    let mut cfg = RunConfig::from_file(&config_path)?;
    let dir = tempfile::tempdir()?;
    cfg.out = dir.path().to_path_buf();
    cfg.localize.gamma = Some(dir.path().join("gamma_true.json"));

    type Command = fn(&RunConfig) -> wavecoef::Result<cli::CommandOutput>;
    let steps: [(&str, Command); 6] = [
        ("simulate", cli::cmd_simulate),
        ("fit-ls", cli::cmd_fit_ls),
        ("infer-mh", cli::cmd_infer_mh),
        ("train-nn", cli::cmd_train_nn),
        ("compare", cli::cmd_compare),
        ("localize", cli::cmd_localize),
    ];
    for (name, step) in steps {
        let done = step(&cfg)?;
        println!("== {name} ({} files)", done.written.len());
        for line in done.lines {
            println!("   {line}");
        }
    }
    println!("\n{}", std::fs::read_to_string(dir.path().join("comparison.csv"))?);
    Ok(())
}
