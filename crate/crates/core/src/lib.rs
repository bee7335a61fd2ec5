//! Nearest-neighbor and distance-to-measure (DTM) anomaly detection.
//!
//! The crate is organised around a small pipeline:
//!
//! - [`data`]: datasets, CSV ingestion and seeded synthetic generators
//!   (Huber-contaminated mixtures and a handful of hard scenarios).
//! - [`index`]: exact k-nearest-neighbor search (kd-tree, sorted 1-D
//!   array, brute force).
//! - [`detectors`]: empirical DTM of any order `q ∈ [1, ∞]` (which covers
//!   the kNN and kth-NN scores), DTMF₂ and LOF.
//! - [`theory`]: finite-sample deviation bounds, separation thresholds and
//!   population oracles for reference distributions.
//! - [`eval`]: ROC-AUC, average precision, Wilcoxon signed-rank and the
//!   boundary misclassification summary.
//! - [`cli`]: the `dtmad` command line front end.

pub mod cli;
pub mod data;
pub mod detectors;
pub mod error;
pub mod eval;
pub mod index;
pub mod rng;
pub mod svg;
pub mod theory;

pub use data::{Dataset, Label, LabeledDataset};
pub use detectors::{DetectorConfig, Method, NeighborCount, Order, ScoreReport};
pub use error::{Error, Result};
pub use index::{NeighborIndex, NeighborList};

/// Crate version, embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
