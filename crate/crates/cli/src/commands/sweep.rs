//! (tau, mode) grids with per-metric comparison tables.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use carmine_core::carousel::{build_carousels, CarouselConfig};
use carmine_core::clustering::ClusteringConfig;
use carmine_core::evaluation::{adjusted_rand, cohesion, heterogeneity, precision, GroundTruth};
use carmine_core::MineError;

use super::pipeline::{build_filter, load_input, run_clustering, AlphaModeArg, FormatArg, ModeArg};
use super::{configure_jobs, resolve_timestamp, CliResult};
use crate::manifest::{DataStats, RunManifest};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Input log (.csv or .jsonl).
    #[arg(long)]
    pub input: PathBuf,

    /// Event keyword regex; repeatable.
    #[arg(long = "event-pattern")]
    pub event_pattern: Vec<String>,

    /// File of event patterns, one regex per line.
    #[arg(long = "pattern-file")]
    pub pattern_file: Option<PathBuf>,

    /// Event label for outputs (defaults to the first pattern).
    #[arg(long)]
    pub event: Option<String>,

    /// Merge thresholds to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5")]
    pub taus: Vec<f64>,

    /// Algorithms to sweep.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "ic1,ic2,hc,dbscan"
    )]
    pub modes: Vec<ModeArg>,

    /// Ground truth for precision/cohesion/ARI columns.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    #[arg(long, default_value_t = 20)]
    pub k: usize,

    #[arg(long, default_value_t = 5)]
    pub z: usize,

    #[arg(long = "min-samples", default_value_t = 3)]
    pub min_samples: usize,

    #[arg(long = "max-iters", default_value_t = 50)]
    pub max_iters: usize,

    #[arg(long = "prior-on-missing")]
    pub prior_on_missing: bool,

    #[arg(long = "alpha-mode", value_enum, default_value_t = AlphaModeArg::PerPt)]
    pub alpha_mode: AlphaModeArg,

    /// Parallel cells (0 = all cores). Results are identical either way.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,

    /// Output directory (sweep.txt, sweep.csv, manifest.json).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    #[arg(long)]
    pub strict: bool,

    /// Embed a wall-clock timestamp (outputs are otherwise reproducible).
    #[arg(long)]
    pub stamp: bool,

    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

struct CellMetrics {
    clusters: usize,
    noise: usize,
    carousels: usize,
    iterations: Option<usize>,
    converged: Option<bool>,
    precision_pct: Option<f64>,
    heterogeneity: Option<f64>,
    cohesion: Option<f64>,
    ari: Option<f64>,
}

struct Cell {
    tau: f64,
    mode: ModeArg,
    result: Result<CellMetrics, String>,
}

pub fn run(args: SweepArgs) -> CliResult<()> {
    if args.k == 0 || args.z == 0 {
        return Err(super::CliError::usage("--k and --z must be at least 1"));
    }
    if args.taus.is_empty() || args.modes.is_empty() {
        return Err(super::CliError::usage(
            "--taus and --modes must be nonempty",
        ));
    }
    configure_jobs(args.jobs);
    let created_at = resolve_timestamp(args.stamp);

    let filter = build_filter(
        args.event.as_deref(),
        &args.event_pattern,
        args.pattern_file.as_deref(),
    )?;
    let loaded = load_input(
        Some(&args.input),
        args.format,
        Some(&filter),
        args.strict,
        None,
        args.alpha_mode.into(),
    )?;
    let truth: Option<GroundTruth> = match &args.truth {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| MineError::Data(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let planted = match &truth {
        Some(t) if t.true_partition.is_some() => Some(t.partition_for(loaded.graph.queries())?),
        _ => None,
    };

    let grid: Vec<(f64, ModeArg)> = args
        .taus
        .iter()
        .flat_map(|&tau| args.modes.iter().map(move |&mode| (tau, mode)))
        .collect();

    // Per-cell failures stay in the cell; the sweep continues.
    let cells: Vec<Cell> = grid
        .par_iter()
        .map(|&(tau, mode)| {
            let config = ClusteringConfig {
                mode: mode.into(),
                tau_q: tau,
                tau_p: tau,
                max_iterations: args.max_iters,
                dbscan_min_samples: args.min_samples,
                prior_on_missing: args.prior_on_missing,
            };
            let result = (|| -> Result<CellMetrics, String> {
                let run = run_clustering(&loaded.graph, &loaded.prior, &config)
                    .map_err(|e| e.to_string())?;
                let carousels = build_carousels(
                    &loaded.graph,
                    &run.partition,
                    &CarouselConfig {
                        top_k: args.k,
                        top_z: args.z,
                    },
                );
                let precision_pct = truth
                    .as_ref()
                    .map(|t| precision(&carousels, t).map_err(|e| e.to_string()))
                    .transpose()?;
                // Undefined metrics (too few carousels) leave a blank; data
                // errors fail the cell.
                let het = heterogeneity(&carousels).ok();
                let coh = match truth.as_ref().map(|t| cohesion(&carousels, t)) {
                    None | Some(Err(MineError::UndefinedMetric(_))) => None,
                    Some(Err(e)) => return Err(e.to_string()),
                    Some(Ok(v)) => Some(v),
                };
                let ari = planted.as_ref().map(|p| adjusted_rand(&run.partition, p));
                Ok(CellMetrics {
                    clusters: run.partition.num_clusters(),
                    noise: run.partition.num_noise(),
                    carousels: carousels.len(),
                    iterations: run.iterations,
                    converged: run.converged,
                    precision_pct,
                    heterogeneity: het,
                    cohesion: coh,
                    ari,
                })
            })();
            Cell { tau, mode, result }
        })
        .collect();

    let text = render_tables(&args.taus, &args.modes, &cells);
    print!("{text}");

    std::fs::create_dir_all(&args.out)?;
    let txt_path = args.out.join("sweep.txt");
    let csv_path = args.out.join("sweep.csv");
    let manifest_path = args.out.join("manifest.json");
    std::fs::write(&txt_path, &text)?;
    std::fs::write(&csv_path, render_csv(&cells))?;

    let mut manifest = RunManifest::new("sweep", created_at);
    manifest.input("log", &args.input);
    if let Some(path) = &args.truth {
        manifest.input("truth", path);
    }
    manifest.event = Some(filter.event_name().to_string());
    manifest.event_patterns = filter.pattern_sources().to_vec();
    manifest.set("taus", &args.taus);
    manifest.set(
        "modes",
        args.modes.iter().map(mode_name).collect::<Vec<_>>(),
    );
    manifest.set("k", args.k);
    manifest.set("z", args.z);
    manifest.set("min_samples", args.min_samples);
    manifest.set("max_iters", args.max_iters);
    manifest.set("prior_on_missing", args.prior_on_missing);
    manifest.set("alpha", loaded.prior.alpha());
    manifest.set("beta", loaded.prior.beta());
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
    manifest.output(&txt_path);
    manifest.output(&csv_path);
    manifest.write(&manifest_path)?;
    Ok(())
}

fn mode_name(mode: &ModeArg) -> &'static str {
    match mode {
        ModeArg::Ic1 => "ic1",
        ModeArg::Ic2 => "ic2",
        ModeArg::Hc => "hc",
        ModeArg::Dbscan => "dbscan",
    }
}

type MetricColumn = (&'static str, fn(&CellMetrics) -> Option<String>);

fn render_tables(taus: &[f64], modes: &[ModeArg], cells: &[Cell]) -> String {
    let metrics: [MetricColumn; 4] = [
        ("precision (%)", |m| {
            m.precision_pct.map(|v| format!("{v:.2}"))
        }),
        ("heterogeneity", |m| {
            m.heterogeneity.map(|v| format!("{v:.3}"))
        }),
        ("cohesion", |m| m.cohesion.map(|v| format!("{v:.3}"))),
        ("ari", |m| m.ari.map(|v| format!("{v:.3}"))),
    ];
    let cell_for = |tau: f64, mode: ModeArg| -> &Cell {
        cells
            .iter()
            .find(|c| c.tau == tau && c.mode == mode)
            .expect("grid covers all cells")
    };
    let mut out = String::new();
    for (title, extract) in metrics {
        // Skip tables with no values at all (e.g. no ground truth).
        let any = cells.iter().any(|c| match &c.result {
            Ok(m) => extract(m).is_some(),
            Err(_) => false,
        });
        if !any {
            continue;
        }
        out.push_str(&format!("== {title} ==\n"));
        out.push_str(&format!("{:<8}", "tau"));
        for mode in modes {
            out.push_str(&format!("{:>10}", mode_name(mode)));
        }
        out.push('\n');
        for &tau in taus {
            out.push_str(&format!("{tau:<8}"));
            for &mode in modes {
                let text = match &cell_for(tau, mode).result {
                    Ok(m) => extract(m).unwrap_or_else(|| "-".to_string()),
                    Err(_) => "ERR".to_string(),
                };
                out.push_str(&format!("{text:>10}"));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    for cell in cells {
        if let Err(msg) = &cell.result {
            out.push_str(&format!(
                "cell tau={} mode={} failed: {msg}\n",
                cell.tau,
                mode_name(&cell.mode)
            ));
        }
    }
    out
}

fn render_csv(cells: &[Cell]) -> String {
    fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
        v.as_ref().map_or_else(String::new, |x| x.to_string())
    }
    let mut out = String::from(
        "tau,mode,clusters,noise,carousels,iterations,converged,precision_pct,heterogeneity,cohesion,ari,error\n",
    );
    for cell in cells {
        match &cell.result {
            Ok(m) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},\n",
                cell.tau,
                mode_name(&cell.mode),
                m.clusters,
                m.noise,
                m.carousels,
                opt(&m.iterations),
                opt(&m.converged),
                opt(&m.precision_pct),
                opt(&m.heterogeneity),
                opt(&m.cohesion),
                opt(&m.ari),
            )),
            Err(msg) => out.push_str(&format!(
                "{},{},,,,,,,,,,{:?}\n",
                cell.tau,
                mode_name(&cell.mode),
                msg
            )),
        }
    }
    out
}
