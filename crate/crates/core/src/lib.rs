//! Contour-error matching and functional error accounting for evaluating
//! 3D multi-object trackers from the ego vehicle's point of view.
//!
//! The pipeline for each frame is: build a cost matrix between ground-truth
//! and predicted boxes ([`assignment::build_cost_matrix`]), solve the optimal
//! assignment ([`assignment::hungarian`]), reject pairs over the gate
//! ([`assignment::gate_matches`]) and accumulate functional true/false
//! positives, false negatives and ID switches ([`metrics::accumulate_frame`]).

pub mod assignment;
pub mod cli;
pub mod contour;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;

pub use assignment::{CostMatrix, MatchResult, Metric};
pub use contour::{contour_error, ContourConfig, Perspective};
pub use error::{Error, Result};
pub use geometry::{Dim, EgoPose, OrientedBox, Point};
