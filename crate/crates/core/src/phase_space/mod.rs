//! The classical side: smooth functions on the unit sphere, Poisson brackets,
//! quadrature, covers, partitions of unity and their combinatorics.

mod cover;
mod field;
mod graph;
mod grid;
mod layer;

pub use cover::{
    build_band_cover, build_band_partition, build_greedy_cover, greedy_center_bound, BandCoverParams, Cover,
    CoverDocument, GreedyCover, PartitionOfUnity, Region,
};
pub use field::{poisson_bracket, smoothstep, ScalarField, SpherePoint};
pub use graph::{
    bfs_distances, merge_refinement, nerve_degree_bound, nerve_graph, power_graph_coloring, star, Coloring,
    MergedCover, NerveGraph,
};
pub use grid::{refine_max_on_sphere, sup_norm, QuadratureGrid};
pub use layer::{Layer, OverlapLayer};
