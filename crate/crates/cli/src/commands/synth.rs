//! Synthetic log generation.

use std::path::PathBuf;

use clap::Args;

use carmine_core::ingest::write_rows_csv;
use carmine_core::synthgen::{generate, SyntheticSpec};

use super::pipeline::write_json_pretty;
use super::{resolve_timestamp, CliResult};
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// SyntheticSpec JSON file.
    #[arg(long)]
    pub spec: PathBuf,

    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory (log.csv, truth.json, manifest.json).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    /// Embed a wall-clock timestamp (outputs are otherwise reproducible).
    #[arg(long)]
    pub stamp: bool,
}

pub fn run(args: SynthArgs) -> CliResult<()> {
    let created_at = resolve_timestamp(args.stamp);
    let text = std::fs::read_to_string(&args.spec)?;
    let mut spec: SyntheticSpec =
        serde_json::from_str(&text).map_err(carmine_core::MineError::Json)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }

    let (rows, truth) = generate(&spec)?;

    std::fs::create_dir_all(&args.out)?;
    let log_path = args.out.join("log.csv");
    let truth_path = args.out.join("truth.json");
    let manifest_path = args.out.join("manifest.json");

    let file = std::fs::File::create(&log_path)?;
    write_rows_csv(std::io::BufWriter::new(file), &rows)?;
    write_json_pretty(&truth_path, &truth)?;

    let mut manifest = RunManifest::new("synth", created_at);
    manifest.input("spec", &args.spec);
    manifest.set("spec", &spec);
    manifest.set("seed", spec.seed);
    manifest.set("rng", "chacha8 with partial fisher-yates subsets");
    manifest.set("rows", rows.len());
    if let Some(tau) = truth.certified_tau {
        manifest.set("certified_tau", tau);
    }
    manifest.output(&log_path);
    manifest.output(&truth_path);
    manifest.write(&manifest_path)?;

    println!(
        "generated {} rows over {} aspects -> {}",
        rows.len(),
        spec.num_aspects,
        log_path.display()
    );
    Ok(())
}
