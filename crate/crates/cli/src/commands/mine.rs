//! The end-to-end mining pipeline.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;

use carmine_core::carousel::{build_carousels, CarouselConfig, CarouselsFile};
use carmine_core::clustering::ClusteringConfig;

use super::pipeline::{
    build_filter, load_input, run_clustering, write_json_pretty, AlphaModeArg, FormatArg, ModeArg,
};
use super::{configure_jobs, resolve_timestamp, CliResult};
use crate::manifest::{ClusteringStats, DataStats, RunManifest};

#[derive(Args, Debug)]
pub struct MineArgs {
    /// Input log (.csv or .jsonl).
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Event keyword regex; repeatable.
    #[arg(long = "event-pattern")]
    pub event_pattern: Vec<String>,

    /// File of event patterns, one regex per line.
    #[arg(long = "pattern-file")]
    pub pattern_file: Option<PathBuf>,

    /// Event label for outputs (defaults to the first pattern).
    #[arg(long)]
    pub event: Option<String>,

    /// Query-side merge threshold.
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,

    /// Product-type merge threshold (defaults to --tau).
    #[arg(long = "tau-p")]
    pub tau_p: Option<f64>,

    #[arg(long, value_enum, default_value_t = ModeArg::Ic2)]
    pub mode: ModeArg,

    /// Report the top K largest clusters.
    #[arg(long, default_value_t = 20)]
    pub k: usize,

    /// Report the top Z product-types per cluster.
    #[arg(long, default_value_t = 5)]
    pub z: usize,

    /// DBSCAN core-point neighbourhood size.
    #[arg(long = "min-samples", default_value_t = 3)]
    pub min_samples: usize,

    /// Iteration cap for the IC modes.
    #[arg(long = "max-iters", default_value_t = 50)]
    pub max_iters: usize,

    /// Give zero-impression cluster pairs the prior-only weight (ablation).
    #[arg(long = "prior-on-missing")]
    pub prior_on_missing: bool,

    /// How the prior alpha is estimated from the data.
    #[arg(long = "alpha-mode", value_enum, default_value_t = AlphaModeArg::PerPt)]
    pub alpha_mode: AlphaModeArg,

    /// Worker threads (0 = all cores). Results are identical either way.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,

    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    /// Also write the built graph as a snapshot.
    #[arg(long = "save-graph")]
    pub save_graph: Option<PathBuf>,

    /// Start from a graph snapshot instead of a log.
    #[arg(long = "load-graph")]
    pub load_graph: Option<PathBuf>,

    /// Abort on the first malformed row instead of skip-and-count.
    #[arg(long)]
    pub strict: bool,

    /// Embed a wall-clock timestamp (outputs are otherwise reproducible).
    #[arg(long)]
    pub stamp: bool,

    /// Input format override; inferred from the extension otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

pub fn run(args: MineArgs) -> CliResult<()> {
    if args.k == 0 || args.z == 0 {
        return Err(super::CliError::usage("--k and --z must be at least 1"));
    }
    configure_jobs(args.jobs);
    let created_at = resolve_timestamp(args.stamp);

    let filter = if args.event_pattern.is_empty() && args.pattern_file.is_none() {
        None
    } else {
        Some(build_filter(
            args.event.as_deref(),
            &args.event_pattern,
            args.pattern_file.as_deref(),
        )?)
    };
    if filter.is_none() && args.load_graph.is_none() {
        return Err(super::CliError::usage(
            "an event filter is required: pass --event-pattern <regex> (repeatable) or --pattern-file <file>",
        ));
    }
    let event = args
        .event
        .clone()
        .or_else(|| filter.as_ref().map(|f| f.event_name().to_string()))
        .unwrap_or_else(|| "event".to_string());

    let loaded = load_input(
        args.input.as_deref(),
        args.format,
        filter.as_ref(),
        args.strict,
        args.load_graph.as_deref(),
        args.alpha_mode.into(),
    )?;

    if let Some(path) = &args.save_graph {
        let file = File::create(path)?;
        loaded.graph.save_snapshot(BufWriter::new(file))?;
    }

    let config = ClusteringConfig {
        mode: args.mode.into(),
        tau_q: args.tau,
        tau_p: args.tau_p.unwrap_or(args.tau),
        max_iterations: args.max_iters,
        dbscan_min_samples: args.min_samples,
        prior_on_missing: args.prior_on_missing,
    };
    let run = run_clustering(&loaded.graph, &loaded.prior, &config)?;

    let carousels = build_carousels(
        &loaded.graph,
        &run.partition,
        &CarouselConfig {
            top_k: args.k,
            top_z: args.z,
        },
    );

    std::fs::create_dir_all(&args.out)?;
    let carousels_path = args.out.join("carousels.json");
    let partition_path = args.out.join("partition.json");
    let manifest_path = args.out.join("manifest.json");

    let file = CarouselsFile::new(
        &event,
        created_at.clone(),
        args.k,
        args.z,
        args.tau,
        config.mode.as_str(),
        &carousels,
    );
    write_json_pretty(&carousels_path, &file)?;
    write_json_pretty(
        &partition_path,
        &run.partition.to_file(Some(loaded.graph.queries())),
    )?;

    let mut manifest = RunManifest::new("mine", created_at);
    manifest.input("log", &loaded.source);
    if let Some(path) = &args.load_graph {
        manifest.input("graph_snapshot", path);
    }
    manifest.event = Some(event.clone());
    if let Some(f) = &filter {
        manifest.event_patterns = f.pattern_sources().to_vec();
    }
    manifest.set("tau", args.tau);
    manifest.set("tau_p", config.tau_p);
    manifest.set("mode", config.mode.as_str());
    manifest.set("k", args.k);
    manifest.set("z", args.z);
    manifest.set("min_samples", args.min_samples);
    manifest.set("max_iters", args.max_iters);
    manifest.set("prior_on_missing", args.prior_on_missing);
    manifest.set(
        "alpha_mode",
        match args.alpha_mode {
            AlphaModeArg::PerPt => "per-pt",
            AlphaModeArg::Global => "global",
        },
    );
    manifest.set("alpha", loaded.prior.alpha());
    manifest.set("beta", loaded.prior.beta());
    manifest.set("strict", args.strict);
    manifest.set("jobs", args.jobs);
    if let Some(format) = loaded.format {
        manifest.set("format", format);
    }
    manifest.data = Some(DataStats {
        queries: loaded.graph.num_queries(),
        product_types: loaded.graph.num_product_types(),
        edges: loaded.graph.num_edges(),
        rows_read: loaded.report.as_ref().map(|r| r.rows_read),
        rows_matched: loaded.report.as_ref().map(|r| r.rows_matched),
        rows_malformed: loaded.report.as_ref().map(|r| r.malformed.len() as u64),
    });
    manifest.clustering = Some(ClusteringStats {
        mode: config.mode.as_str().to_string(),
        tau: config.tau_q,
        tau_p: config.tau_p,
        clusters: run.partition.num_clusters(),
        noise: run.partition.num_noise(),
        iterations: run.iterations,
        converged: run.converged,
    });
    manifest.output(&carousels_path);
    manifest.output(&partition_path);
    if let Some(path) = &args.save_graph {
        manifest.output(path);
    }
    manifest.write(&manifest_path)?;

    println!(
        "mined {} carousels from |Q|={} |P|={} |E|={} ({} clusters, {} noise) -> {}",
        carousels.len(),
        loaded.graph.num_queries(),
        loaded.graph.num_product_types(),
        loaded.graph.num_edges(),
        run.partition.num_clusters(),
        run.partition.num_noise(),
        carousels_path.display()
    );
    Ok(())
}
