//! Evaluation harnesses and report rendering.

pub mod neighbors;
pub mod norms;
pub mod perturb;
pub mod report;
pub mod shift;
pub mod similarity;
pub mod smoothness;
pub mod stats;

pub use neighbors::{pca_2d, temporal_neighbors, trajectory_export, Neighbor, TrajectoryPoint};
pub use norms::norm_frequency_correlation;
pub use perturb::{perturb_overlap, PerturbationSpec, ProbeStats};
pub use report::{EvalReport, Series};
pub use shift::{known_shift_benchmark, read_word_list, semantic_displacement, DisplacementRanking, ShiftBenchmark};
pub use similarity::{read_similarity_pairs, similarity_benchmark, PeriodPolicy, SimilarityPair, SimilarityResult};
pub use smoothness::{smoothness_curve, smoothness_grid_report, SmoothnessConfig, SmoothnessCurve};
pub use stats::{pearson, spearman};
