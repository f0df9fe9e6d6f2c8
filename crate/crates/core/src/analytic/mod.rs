//! Analytical solver: success probability, stable region, meta distribution
//! and AoI predictions.

pub mod conditional;
pub mod exact;
pub mod grid;
pub mod meta;
pub mod predict;
pub mod special_cases;
pub mod stability;

pub use conditional::{cond_aoi_fcfs, cond_aoi_lcfs, AoiPair};
pub use grid::InterferenceGrid;
pub use meta::{beta_meta, beta_meta_with, moment_match, MetaDistribution, MetaKind, MetaOptions};
pub use stability::{critical_xi, solve_ps, PsMethod, PsSolution, StabilityResult};
pub use exact::{exact_meta_cdf, uniform_grid, ExactOptions};
pub use predict::{aoi_predict, aoi_predict_with, AoiPrediction, LcfsPeakForm, PredictMethod, PredictOptions};
pub use special_cases::{dominant_opt_p, sparse_aoi, throughput, throughput_derivative, SparseAoi, ThroughputSlope};
