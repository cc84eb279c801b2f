//! k-NN classification toolkit.
//!
//! * [`borel`]: bit-interleaving reduction `[0,1]ᵈ → [0,1]` with exact
//!   integer codes, and its grouped variant.
//! * [`knn`]: exact k-NN, votes, learning rules and their transport along
//!   a map.
//! * [`ann`]: approximate k-NN over the Hamming cube by random projections
//!   mod 2.
//! * [`instability`]: nearest-neighbour radii and ball-count profiles.
//! * [`bench`]: synthetic distributions, consistency curves and
//!   cross-validation.
//!
//! All randomness flows from explicit [`Seed`]s; see [`seed`].

pub mod ann;
pub mod bench;
pub mod borel;
pub mod data;
pub mod error;
pub mod folds;
pub mod instability;
pub mod knn;
pub mod metric;
pub mod seed;

pub use data::{Label, Labeled, LabeledDataset, Point};
pub use error::{Error, Result};
pub use metric::{BitString, Metric, MetricPoint};
pub use seed::Seed;
