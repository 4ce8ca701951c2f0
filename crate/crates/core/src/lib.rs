//! Ambiguity of categorical soft labels that carry an explicit "can't solve"
//! response category.
//!
//! The crate provides three scalar measures over a probability vector
//! (`New`, `Modified` and the total-variation based `Old` measure), together
//! with tools for estimating them from a finite number of annotations:
//!
//! * [`frequentist`]: plug-in estimates, their exact expectation and bias.
//! * [`posterior_analytics`]: closed-form posterior moments under a Dirichlet
//!   posterior.
//! * [`posterior_sampling`]: Monte-Carlo posteriors, summaries and histogram
//!   density bands.
//! * [`binary_density`]: the exact posterior density for two proper categories.
//! * [`dataset_io`]: ingestion of annotation files, per-item scoring and reports.

pub mod binary_density;
pub mod cli;
pub mod dataset_io;
mod error;
pub mod frequentist;
pub mod measures;
pub mod numerics;
pub mod posterior_analytics;
pub mod posterior_sampling;

pub use error::{Error, Result};
pub use frequentist::CountVector;
pub use measures::{CategorySchema, ConditionalVector, MeasureKind, ProbabilityVector};
pub use numerics::{BetaParams, DirichletParams, Quadrature};
