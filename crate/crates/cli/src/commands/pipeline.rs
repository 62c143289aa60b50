//! Shared pipeline stages for `mine` and `sweep`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use carmine_core::clustering::{
    cluster_baseline, iterate_clustering, ClusteringConfig, Mode, Partition,
};
use carmine_core::graph::{build_graph, BipartiteGraph};
use carmine_core::ingest::{load_and_filter, EventFilter, LoadMode, LoadReport, LogFormat};
use carmine_core::weighting::{estimate_prior_with, AlphaMode, PriorParams};
use carmine_core::MineError;

use super::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ic1,
    Ic2,
    Hc,
    Dbscan,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Mode {
        match arg {
            ModeArg::Ic1 => Mode::Ic1,
            ModeArg::Ic2 => Mode::Ic2,
            ModeArg::Hc => Mode::Hc,
            ModeArg::Dbscan => Mode::Dbscan,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlphaModeArg {
    #[value(name = "per-pt")]
    PerPt,
    Global,
}

impl From<AlphaModeArg> for AlphaMode {
    fn from(arg: AlphaModeArg) -> AlphaMode {
        match arg {
            AlphaModeArg::PerPt => AlphaMode::PerProductType,
            AlphaModeArg::Global => AlphaMode::Global,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for LogFormat {
    fn from(arg: FormatArg) -> LogFormat {
        match arg {
            FormatArg::Csv => LogFormat::Csv,
            FormatArg::Jsonl => LogFormat::Jsonl,
        }
    }
}

/// Builds the event filter from repeatable `--event-pattern` flags plus an
/// optional pattern file (one regex per line, `#` comments allowed).
pub fn build_filter(
    event: Option<&str>,
    patterns: &[String],
    pattern_file: Option<&Path>,
) -> CliResult<EventFilter> {
    let mut all = patterns.to_vec();
    if let Some(path) = pattern_file {
        let text = std::fs::read_to_string(path)?;
        for line in text.lines() {
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                all.push(line.to_string());
            }
        }
    }
    if all.is_empty() {
        return Err(CliError::usage(
            "an event filter is required: pass --event-pattern <regex> (repeatable) or --pattern-file <file>",
        ));
    }
    let name = event.map(str::to_string).unwrap_or_else(|| all[0].clone());
    Ok(EventFilter::new(name, &all)?)
}

pub struct LoadedInput {
    pub graph: BipartiteGraph,
    pub prior: PriorParams,
    pub report: Option<LoadReport>,
    pub source: PathBuf,
    /// Resolved log format; None when loaded from a snapshot.
    pub format: Option<&'static str>,
}

/// Loads the graph either from a snapshot or by ingesting a log file.
pub fn load_input(
    input: Option<&Path>,
    format: Option<FormatArg>,
    filter: Option<&EventFilter>,
    strict: bool,
    load_graph: Option<&Path>,
    alpha_mode: AlphaMode,
) -> CliResult<LoadedInput> {
    if let Some(snapshot) = load_graph {
        if input.is_some() {
            log::warn!("--load-graph given; ignoring --input");
        }
        let file = File::open(snapshot)?;
        let graph = BipartiteGraph::load_snapshot(BufReader::new(file))?;
        let prior = estimate_prior_with(&graph, alpha_mode);
        return Ok(LoadedInput {
            graph,
            prior,
            report: None,
            source: snapshot.to_path_buf(),
            format: None,
        });
    }

    let Some(path) = input else {
        return Err(CliError::usage(
            "--input <log> is required (or --load-graph <snapshot>)",
        ));
    };
    let Some(filter) = filter else {
        return Err(CliError::usage(
            "an event filter is required to ingest a log",
        ));
    };
    let format: LogFormat = match format {
        Some(f) => f.into(),
        None => LogFormat::from_path(path).ok_or_else(|| {
            CliError::usage(format!(
                "cannot infer log format from {:?}; pass --format csv|jsonl",
                path.display()
            ))
        })?,
    };
    let mode = if strict {
        LoadMode::Strict
    } else {
        LoadMode::Lenient
    };
    let file = File::open(path)?;
    let (rows, report) = load_and_filter(BufReader::new(file), format, filter, mode)?;
    if rows.is_empty() {
        return Err(CliError::Core(MineError::Data(format!(
            "no rows of {:?} match the event filter",
            path.display()
        ))));
    }
    let graph = build_graph(&rows)?;
    let prior = estimate_prior_with(&graph, alpha_mode);
    Ok(LoadedInput {
        graph,
        prior,
        report: Some(report),
        source: path.to_path_buf(),
        format: Some(match format {
            LogFormat::Csv => "csv",
            LogFormat::Jsonl => "jsonl",
        }),
    })
}

pub struct ClusteringRun {
    pub partition: Partition,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

/// Dispatches on mode: iterative clustering or a single-round baseline.
pub fn run_clustering(
    graph: &BipartiteGraph,
    prior: &PriorParams,
    config: &ClusteringConfig,
) -> CliResult<ClusteringRun> {
    if config.mode.is_iterative() {
        let out = iterate_clustering(graph, prior, config)?;
        if !out.converged {
            log::warn!(
                "clustering stopped at max_iterations={} without converging",
                config.max_iterations
            );
        }
        Ok(ClusteringRun {
            partition: out.query_partition,
            iterations: Some(out.iterations),
            converged: Some(out.converged),
        })
    } else {
        let partition = cluster_baseline(graph, prior, config)?;
        Ok(ClusteringRun {
            partition,
            iterations: None,
            converged: None,
        })
    }
}

pub fn write_json_pretty<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| MineError::Internal(format!("serializing {}: {e}", path.display())))?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}
