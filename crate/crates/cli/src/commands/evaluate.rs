//! Scoring a carousel file against ground truth.

use std::path::{Path, PathBuf};

use clap::Args;

use carmine_core::carousel::CarouselsFile;
use carmine_core::clustering::{Partition, PartitionFile};
use carmine_core::evaluation::{
    adjusted_rand, cohesion, heterogeneity, precision, EvalReport, GroundTruth,
};
use carmine_core::MineError;

use super::pipeline::write_json_pretty;
use super::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Carousel file produced by `mine`.
    #[arg(long)]
    pub carousels: PathBuf,

    /// Ground-truth JSON.
    #[arg(long)]
    pub truth: PathBuf,

    /// Predicted query partition with labels (defaults to partition.json
    /// next to the carousel file).
    #[arg(long)]
    pub partition: Option<PathBuf>,

    /// Report path (defaults to report.json next to the carousel file).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Core(MineError::Data(format!("{}: {e}", path.display()))))
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let file: CarouselsFile = read_json(&args.carousels)?;
    let truth: GroundTruth = read_json(&args.truth)?;
    let carousels = file.to_carousels();

    let mut notes = Vec::new();
    let precision_pct = Some(precision(&carousels, &truth)?);
    let het = match heterogeneity(&carousels) {
        Ok(v) => Some(v),
        Err(MineError::UndefinedMetric(msg)) => {
            notes.push(msg);
            None
        }
        Err(e) => return Err(e.into()),
    };
    let coh = match cohesion(&carousels, &truth) {
        Ok(v) => Some(v),
        Err(MineError::UndefinedMetric(msg)) => {
            notes.push(msg);
            None
        }
        Err(e) => return Err(e.into()),
    };

    let ari = match &truth.true_partition {
        None => None,
        Some(_) => {
            let default_partition = args.carousels.with_file_name("partition.json");
            let partition_path = args
                .partition
                .clone()
                .or_else(|| default_partition.exists().then_some(default_partition));
            match partition_path {
                None => {
                    notes.push(
                        "truth has a planted partition but no prediction was found; pass --partition"
                            .to_string(),
                    );
                    None
                }
                Some(path) => {
                    let pfile: PartitionFile = read_json(&path)?;
                    let (pred, labels) = Partition::from_file(&pfile)?;
                    let Some(labels) = labels else {
                        return Err(CliError::Core(MineError::Data(format!(
                            "{}: partition file has no labels; cannot align with truth",
                            path.display()
                        ))));
                    };
                    let planted = truth.partition_for(&labels)?;
                    Some(adjusted_rand(&pred, &planted))
                }
            }
        }
    };

    let report = EvalReport {
        event: file.event.clone(),
        mode: Some(file.config.mode.clone()),
        tau: Some(file.config.tau),
        num_carousels: carousels.len(),
        precision_pct,
        heterogeneity: het,
        cohesion: coh,
        ari,
        notes,
    };

    print!("{}", report.to_text());
    let out = args
        .out
        .unwrap_or_else(|| args.carousels.with_file_name("report.json"));
    write_json_pretty(&out, &report)?;
    Ok(())
}
