//! Library-level pipeline test: synthetic log in, scored carousels out.

use carmine_core::carousel::{build_carousels, CarouselConfig};
use carmine_core::clustering::{cluster_baseline, iterate_clustering, ClusteringConfig, Mode};
use carmine_core::evaluation::{adjusted_rand, cohesion, heterogeneity, precision};
use carmine_core::graph::build_graph;
use carmine_core::ingest::{load_and_filter, write_rows_csv, EventFilter, LoadMode, LogFormat};
use carmine_core::synthgen::{generate, SyntheticSpec};
use carmine_core::weighting::estimate_prior;

fn spec() -> SyntheticSpec {
    SyntheticSpec {
        num_aspects: 3,
        queries_per_aspect: (12, 12),
        pts_per_aspect: (6, 6),
        within_aspect_ctr: (0.3, 0.35),
        cross_aspect_edge_rate: 0.0,
        impressions_per_edge: (80, 100),
        query_pt_coverage: 1.0,
        seed: 21,
    }
}

#[test]
fn synthetic_log_roundtrips_through_the_full_pipeline() {
    let (rows, truth) = generate(&spec()).unwrap();

    // Through the CSV codec and the event filter, as the CLI would.
    let mut csv_bytes = Vec::new();
    write_rows_csv(&mut csv_bytes, &rows).unwrap();
    let filter = EventFilter::new("ev", &["^ev ".to_string()]).unwrap();
    let (loaded, report) = load_and_filter(
        csv_bytes.as_slice(),
        LogFormat::Csv,
        &filter,
        LoadMode::Strict,
    )
    .unwrap();
    assert_eq!(loaded.len(), rows.len());
    assert_eq!(report.rows_matched, rows.len() as u64);

    let graph = build_graph(&loaded).unwrap();
    assert_eq!(graph.num_queries(), 36);
    assert_eq!(graph.num_product_types(), 18);
    let prior = estimate_prior(&graph);
    let tau = truth.certified_tau.unwrap();

    let out = iterate_clustering(
        &graph,
        &prior,
        &ClusteringConfig {
            mode: Mode::Ic2,
            tau_q: tau,
            tau_p: tau,
            ..ClusteringConfig::default()
        },
    )
    .unwrap();
    assert!(out.converged);
    assert_eq!(out.query_partition.num_clusters(), 3);

    let planted = truth.partition_for(graph.queries()).unwrap();
    assert_eq!(adjusted_rand(&out.query_partition, &planted), 1.0);

    let carousels = build_carousels(
        &graph,
        &out.query_partition,
        &CarouselConfig {
            top_k: 20,
            top_z: 6,
        },
    );
    assert_eq!(carousels.len(), 3);
    assert_eq!(precision(&carousels, &truth).unwrap(), 100.0);
    assert_eq!(heterogeneity(&carousels).unwrap(), 1.0);
    assert_eq!(cohesion(&carousels, &truth).unwrap(), 1.0);

    // Items within a carousel are CTR-sorted.
    for carousel in &carousels {
        for pair in carousel.items.windows(2) {
            assert!(pair[0].ctr >= pair[1].ctr);
        }
    }

    // The baselines run on the same inputs without error.
    for mode in [Mode::Hc, Mode::Dbscan] {
        let baseline = cluster_baseline(
            &graph,
            &prior,
            &ClusteringConfig {
                mode,
                tau_q: tau,
                tau_p: tau,
                ..ClusteringConfig::default()
            },
        )
        .unwrap();
        assert_eq!(baseline.num_nodes(), graph.num_queries());
    }
}
