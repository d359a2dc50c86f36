//! Neural collision-probability fields for rectangles under Gaussian pose and
//! size uncertainty: Monte-Carlo labeling, dataset generation, the network and
//! its training, and a chance-constrained Hybrid-A* planner with benchmarks.

pub mod bench;
pub mod error;
pub mod dataset;
pub mod geometry;
pub mod mc;
pub mod model;
pub mod planner;
pub mod scalar;
pub mod training;

pub use error::{DcpfError, Result};
pub use scalar::Scalar;

/// Polygon in metres.
pub type Polygon = geometry::ConvexPolygon<f64>;
/// Single-precision ensemble used for training and planning.
pub type DcpfModel = model::EnsembleModel<f32>;
/// Double-precision ensemble, e.g. for gradient checks.
pub type DcpfModel64 = model::EnsembleModel<f64>;
