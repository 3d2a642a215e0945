//! Signed interaction networks of party-attributed people and their
//! polarisation statistics.

mod distance;
mod export;
mod graph;
mod modularity;
mod null;
mod stats;
mod trends;

pub use distance::{haversine_km, interaction_distance, record_distances, DistanceRow, EARTH_RADIUS_KM};
pub use export::{write_edge_csv, write_gexf, write_rows_csv};
pub use graph::{build_graph, AttrTable, BuildReport, Edge, GraphOptions, NodeAttrs, Party, SignedGraph};
pub use modularity::{modularity, SignedMode};
pub use null::{
    randomize_null, randomize_null_with, sample_seed, standardized_modularity, ModularityReport,
    SWAPS_PER_EDGE,
};
pub use stats::{
    graph_stats, hurwitz_zeta, pagerank, power_law_alpha, power_law_alpha_mle, sample_power_law_rounded, sample_zeta,
    transitivity, GraphStats, DEFAULT_K_MIN, PAGERANK_DAMPING, PAGERANK_TOLERANCE,
};
pub use trends::{modularity_series, trend_ratios, type_totals, Bin, SeriesOptions, SeriesPoint, TrendRow, TrendSeries, TypeTotals};
