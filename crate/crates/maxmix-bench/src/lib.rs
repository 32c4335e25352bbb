//! Shared fixtures for the maxmix benchmarks.

use maxmix::fit::likelihood::{prepare_censored, CensorSpec, CensoredData};
use maxmix::simulate::{sample_sites, simulate_max_mixture};
use maxmix::{MadogramCloud, ModelName, ModelSpec, Region, Seed, SiteSet, SpatialSample};

/// Reference max-mixture model used by every benchmark.
pub fn reference_spec() -> ModelSpec {
    ModelName::Mm1.build(&[0.5, 0.2, 0.25, 0.6]).unwrap()
}

/// Deterministic station layout on the unit square.
pub fn desk_sites(n: usize) -> SiteSet {
    let region = Region::new(0.0, 1.0, 0.0, 1.0).unwrap();
    sample_sites(n, &region, &Seed::new(7)).unwrap()
}

/// Desk-scale sample from the reference model.
pub fn desk_sample(n_sites: usize, n_rep: usize) -> SpatialSample {
    simulate_max_mixture(&reference_spec(), &desk_sites(n_sites), n_rep, &Seed::new(11)).unwrap()
}

/// Pairwise madogram cloud of the desk-scale sample.
pub fn desk_cloud(n_sites: usize, n_rep: usize) -> MadogramCloud {
    maxmix::empirical::empirical_fmadogram(&desk_sample(n_sites, n_rep), true, false).unwrap()
}

/// Censored pair cells of the desk-scale sample at the default quantile.
pub fn desk_censored(n_sites: usize, n_rep: usize) -> CensoredData {
    prepare_censored(&desk_sample(n_sites, n_rep), &CensorSpec::default()).unwrap()
}
