//! Max-mixture spatial extremes: models blending asymptotic dependence and
//! asymptotic independence, their F-madogram, simulation, and fitting.
//!
//! A max-mixture field is Z(s) = max(aX(s), (1-a)Y(s)) where X is max-stable,
//! Y is inverse max-stable, and both have unit Frechet margins. The crate
//! provides closed-form dependence summaries (extremal coefficient, chi,
//! chi-bar, F-madogram), exact-margin simulators, empirical estimators, and
//! two fitting routes (madogram least squares and censored pairwise
//! likelihood) with their model-selection criteria.

pub mod empirical;
pub mod error;
pub mod fit;
pub mod madogram;
pub mod models;
pub mod quad;
pub mod simulate;
pub mod special;

pub use empirical::{BinSpec, BinnedMadogram, MadogramCloud, PairInfo};
pub use error::{Error, Result};
pub use fit::{Criterion, Estimator, FitConfig, FitResult, ModelName};
pub use madogram::MadogramPoint;
pub use models::{
    CorrelationFn, DependenceProfile, MaxStableFamily, ModelSpec, Variogram,
};
pub use simulate::{Margin, Region, Seed, SiteSet, SpatialSample, StreamTag};

/// Matrix type used for replicated field data (re-export so downstream
/// crates match this crate's linear-algebra version).
pub use nalgebra::DMatrix;
