//! Geometric statistics for manifold-valued trajectories.
//!
//! Discrete trajectories on the unit sphere are represented by composite
//! cubic Bezier splines obtained through least-squares regression. The space
//! of such splines carries a natural Riemannian metric pulled back from the
//! Sasaki metric on the tangent bundle, which makes means, geodesics and
//! principal geodesic analysis of whole trajectories computable. On top of
//! that sits an application pipeline for hurricane best-track data: parsing,
//! spline regression, group-level analysis, and intensity classification.
//!
//! Module layout:
//! - [`manifold`]: exp/log/transport/curvature on the sphere and on flat
//!   space (the flat case doubles as a test oracle for everything curved).
//! - [`tangent_bundle`]: the Sasaki metric, time-discrete geodesics, and
//!   Frechet means on the tangent bundle.
//! - [`bezier`]: De Casteljau evaluation, composite splines, regression and
//!   the geometric R^2 statistic.
//! - [`bezierfold`]: splines as points of a finite-dimensional manifold via
//!   their anchor representation; geodesics, means and PGA in that space.
//! - [`hurdat`]: HURDAT2 best-track ingestion, labeling, and resampling.
//! - [`stats_ml`]: RBF-kernel SVM trained by SMO, stratified repeated
//!   cross-validation, balanced accuracy, and the pointwise baseline
//!   representation.
//! - [`synthetic`]: deterministic generator for a HURDAT2-format test
//!   dataset, for offline runs and reproducible tests.

pub mod bezier;
pub mod bezierfold;
pub mod error;
pub mod hurdat;
pub mod linalg;
pub mod manifold;
pub mod stats_ml;
pub mod synthetic;
pub mod tangent_bundle;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use manifold::{Manifold, Point, Tangent};
pub use tangent_bundle::{BundlePoint, BundleTangent, DiscretePath, Sasaki};

