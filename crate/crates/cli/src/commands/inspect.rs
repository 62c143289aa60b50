//! Human-readable dumps of the artifact's files.

use std::path::PathBuf;

use clap::Args;

use carmine_core::carousel::CarouselsFile;
use carmine_core::clustering::{Partition, PartitionFile};
use carmine_core::evaluation::EvalReport;
use carmine_core::graph::BipartiteGraph;
use carmine_core::MineError;

use super::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// A graph snapshot, partition, carousel, or report JSON file.
    pub file: PathBuf,
}

pub fn run(args: InspectArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.file)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Core(MineError::Data(format!("{}: {e}", args.file.display()))))?;

    if value.get("format_version").is_some() && value.get("queries").is_some() {
        let graph = BipartiteGraph::load_snapshot(text.as_bytes())?;
        inspect_graph(&graph);
    } else if value.get("side").is_some() && value.get("clusters").is_some() {
        let file: PartitionFile = serde_json::from_str(&text).map_err(MineError::Json)?;
        inspect_partition(&file)?;
    } else if value.get("carousels").is_some() {
        let file: CarouselsFile = serde_json::from_str(&text).map_err(MineError::Json)?;
        inspect_carousels(&file);
    } else if value.get("num_carousels").is_some() {
        let report: EvalReport = serde_json::from_str(&text).map_err(MineError::Json)?;
        print!("{}", report.to_text());
    } else {
        return Err(CliError::Core(MineError::Data(format!(
            "{}: not a recognized graph/partition/carousels/report file",
            args.file.display()
        ))));
    }
    Ok(())
}

fn inspect_graph(graph: &BipartiteGraph) {
    println!(
        "graph: |Q|={}, |P|={}, |E|={}",
        graph.num_queries(),
        graph.num_product_types(),
        graph.num_edges()
    );
    let mut total_imp = 0u64;
    let mut total_clk = 0u64;
    for q in 0..graph.num_queries() {
        for e in graph.query_edges(q) {
            total_imp += e.impressions;
            total_clk += e.clicks;
        }
    }
    println!("totals: impressions={total_imp}, clicks={total_clk}");
    let mut degrees: Vec<(usize, usize)> = (0..graph.num_product_types())
        .map(|p| (graph.pt_edges(p).len(), p))
        .collect();
    degrees.sort_by(|a, b| b.cmp(a));
    println!("top product-types by degree:");
    for (degree, p) in degrees.into_iter().take(5) {
        println!("  {} ({degree} queries)", graph.product_types()[p]);
    }
}

fn inspect_partition(file: &PartitionFile) -> CliResult<()> {
    let (partition, _) = Partition::from_file(file)?;
    println!(
        "partition: side={}, nodes={}, clusters={}, noise={}",
        file.side,
        partition.num_nodes(),
        partition.num_clusters(),
        partition.num_noise()
    );
    let mut histogram: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for (_, members) in partition.non_noise_clusters() {
        *histogram.entry(members.len()).or_insert(0) += 1;
    }
    println!("cluster size histogram (size x count):");
    for (size, count) in histogram.iter().rev() {
        println!("  {size:>6} x {count}");
    }
    Ok(())
}

fn inspect_carousels(file: &CarouselsFile) {
    println!(
        "carousels for {:?} (mode={}, tau={}, k={}, z={})",
        file.event, file.config.mode, file.config.tau, file.config.k, file.config.z
    );
    for entry in &file.carousels {
        let label: Vec<&str> = entry.queries.iter().take(3).map(String::as_str).collect();
        println!(
            "carousel {} ({} queries; e.g. {})",
            entry.rank,
            entry.queries.len(),
            label.join(", ")
        );
        for item in &entry.items {
            println!(
                "  {:<28} ctr={:.4} ({}/{})",
                item.product_type, item.ctr, item.clicks, item.impressions
            );
        }
    }
}
