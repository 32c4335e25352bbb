//! Estimation of max-mixture models: madogram least squares, censored
//! pairwise likelihood, and the MIC / CLIC selection criteria.

pub mod likelihood;
pub mod nelder_mead;
pub mod registry;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::empirical::{empirical_fmadogram, rank_transform_frechet, MadogramCloud};
use crate::error::{Error, Result};
use crate::models::{dependence_profile, ModelSpec};
use crate::simulate::{Margin, SpatialSample};

use likelihood::{cl_objective, cl_per_replicate, default_steps, godambe_trace, prepare_censored, CensorSpec};
use nelder_mead::{minimize_multistart, BoxTransform};
pub use registry::ModelName;

/// Which estimator drives the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    /// Nonlinear least squares on the pairwise F-madogram cloud.
    #[serde(rename = "ls")]
    LeastSquares,
    /// Censored pairwise composite likelihood.
    #[serde(rename = "cl")]
    CensoredLikelihood,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::LeastSquares => "ls",
            Estimator::CensoredLikelihood => "cl",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(Estimator::LeastSquares),
            "cl" => Ok(Estimator::CensoredLikelihood),
            other => Err(Error::Usage(format!(
                "unknown estimator '{other}' (expected ls or cl)"
            ))),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which information criterion a fit reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "mic")]
    Mic,
    #[serde(rename = "clic")]
    Clic,
}

impl Criterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Mic => "mic",
            Criterion::Clic => "clic",
        }
    }
}

/// Everything a fit needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub model: ModelName,
    pub estimator: Estimator,
    /// Seed for the quasi-random multi-start offsets.
    pub seed: u64,
    pub n_starts: usize,
    /// Cheap quasi-random probes screened before the starts are chosen.
    pub n_probes: usize,
    /// Evaluation budget per start.
    pub max_evals: usize,
    /// Simplex diameter (in transformed coordinates) declaring convergence.
    pub tol: f64,
    /// Censoring rule (likelihood fits only).
    pub censor: CensorSpec,
    /// Drop single-exceedance cells from the likelihood.
    pub strict_two_cell: bool,
    /// Seed one likelihood start from a least-squares fit.
    pub warm_start: bool,
    /// Compute MIC / CLIC after fitting.
    pub compute_criterion: bool,
}

impl FitConfig {
    /// Estimator-appropriate defaults; likelihood fits get a smaller search
    /// budget because each evaluation is far more expensive.
    pub fn new(model: ModelName, estimator: Estimator) -> Self {
        let (n_starts, n_probes, max_evals) = match estimator {
            Estimator::LeastSquares => (12, 1024, 2000),
            Estimator::CensoredLikelihood => (4, 64, 800),
        };
        FitConfig {
            model,
            estimator,
            seed: 0,
            n_starts,
            n_probes,
            max_evals,
            tol: 1e-6,
            censor: CensorSpec::default(),
            strict_two_cell: false,
            warm_start: true,
            compute_criterion: true,
        }
    }
}

/// A completed fit.
///
/// `objective` is the minimized sum of squares for least squares and the
/// maximized log likelihood for the censored likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelName,
    pub estimator: Estimator,
    pub psi_hat: BTreeMap<String, f64>,
    pub objective: f64,
    /// MIC (least squares) or CLIC (censored likelihood); None when it could
    /// not be computed.
    pub criterion: Option<f64>,
    /// Whether the CLIC sensitivity matrix needed a ridge.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub criterion_singular: Option<bool>,
    pub converged: bool,
    pub n_evals: usize,
    pub seed: u64,
    pub config_hash: Option<String>,
}

impl FitResult {
    /// Parameters in the model's canonical order.
    pub fn psi_vec(&self) -> Vec<f64> {
        self.model
            .param_names()
            .iter()
            .map(|n| self.psi_hat[*n])
            .collect()
    }

    pub fn criterion_kind(&self) -> Criterion {
        match self.estimator {
            Estimator::LeastSquares => Criterion::Mic,
            Estimator::CensoredLikelihood => Criterion::Clic,
        }
    }
}

fn psi_map(model: ModelName, psi: &[f64]) -> BTreeMap<String, f64> {
    model
        .param_names()
        .iter()
        .zip(psi)
        .map(|(n, v)| (n.to_string(), *v))
        .collect()
}

/// Madogram information criterion: ln of the least-squares objective plus a
/// small-sample complexity penalty.
pub fn mic(objective: f64, n_params: usize, n_terms: usize) -> Option<f64> {
    let k = n_params as f64;
    let t = n_terms as f64;
    if !(objective.is_finite() && objective >= 0.0) || t <= k + 1.0 {
        return None;
    }
    Some(objective.max(1e-300).ln() + 2.0 * k * (k + 1.0) / (t - k - 1.0))
}

/// Composite likelihood information criterion -2 (loglik - penalty trace).
pub fn clic(loglik: f64, penalty_trace: f64) -> f64 {
    -2.0 * (loglik - penalty_trace)
}

fn ls_objective_on(spec: &ModelSpec, distances: &[f64], cloud: &MadogramCloud) -> Result<f64> {
    let profile = dependence_profile(spec, distances)?;
    let mut total = 0.0;
    for (i, nu) in profile.nu_f.iter().enumerate() {
        total += cloud.y_sq_bar[i] - 2.0 * nu * cloud.y_bar[i] + nu * nu;
    }
    if !total.is_finite() {
        return Err(Error::Numeric("least-squares objective overflowed".into()));
    }
    // analytically a sum of mean squared errors; roundoff can push an exact
    // fit a few ulps negative
    Ok(total.max(0.0))
}

/// Least-squares objective: over pairs, the mean squared distance between
/// the madogram terms and the model madogram (up to a model-free constant,
/// the sum of per-pair mean squared errors).
pub fn ls_objective(spec: &ModelSpec, cloud: &MadogramCloud) -> Result<f64> {
    let distances: Vec<f64> = cloud.pairs.iter().map(|p| p.h).collect();
    ls_objective_on(spec, &distances, cloud)
}

fn max_pair_distance(distances: &[f64]) -> Result<f64> {
    let h_ref = distances.iter().copied().fold(0.0_f64, f64::max);
    if !(h_ref > 0.0) {
        return Err(Error::Data("all site pairs are at zero distance".into()));
    }
    Ok(h_ref)
}

/// Fit by nonlinear least squares on a madogram cloud.
pub fn fit_ls(cloud: &MadogramCloud, config: &FitConfig) -> Result<FitResult> {
    if config.estimator != Estimator::LeastSquares {
        return Err(Error::Usage("fit_ls requires the ls estimator".into()));
    }
    if cloud.pairs.is_empty() {
        return Err(Error::Data("madogram cloud has no pairs".into()));
    }
    let distances: Vec<f64> = cloud.pairs.iter().map(|p| p.h).collect();
    let h_ref = max_pair_distance(&distances)?;
    let transform = BoxTransform::new(config.model.bounds(h_ref)?)?;
    let f = |psi: &[f64]| {
        config
            .model
            .build(psi)
            .and_then(|spec| ls_objective_on(&spec, &distances, cloud))
            .unwrap_or(f64::INFINITY)
    };
    let (best, _) = minimize_multistart(
        &f,
        &transform,
        &[],
        config.n_starts,
        config.n_probes,
        config.seed,
        config.tol,
        config.max_evals,
    )?;
    let criterion = if config.compute_criterion {
        mic(best.value, config.model.dim(), cloud.counts.iter().sum())
    } else {
        None
    };
    Ok(FitResult {
        model: config.model,
        estimator: config.estimator,
        psi_hat: psi_map(config.model, &best.psi),
        objective: best.value,
        criterion,
        criterion_singular: None,
        converged: best.converged,
        n_evals: best.n_evals,
        seed: config.seed,
        config_hash: None,
    })
}

const WARM_START_SEED_SALT: u64 = 0x4c53;

/// Fit by censored pairwise likelihood on a unit Frechet sample.
pub fn fit_cl(sample: &SpatialSample, config: &FitConfig) -> Result<FitResult> {
    if config.estimator != Estimator::CensoredLikelihood {
        return Err(Error::Usage("fit_cl requires the cl estimator".into()));
    }
    let censored = prepare_censored(sample, &config.censor)?;
    let distances: Vec<f64> = censored.pairs.iter().map(|p| p.h).collect();
    let h_ref = max_pair_distance(&distances)?;
    let transform = BoxTransform::new(config.model.bounds(h_ref)?)?;

    let mut explicit_starts = Vec::new();
    if config.warm_start {
        let mut ls_config = FitConfig::new(config.model, Estimator::LeastSquares);
        ls_config.seed = config.seed ^ WARM_START_SEED_SALT;
        ls_config.compute_criterion = false;
        let known = sample.margin == Margin::UnitFrechet;
        if let Ok(warm) = empirical_fmadogram(sample, known, false)
            .and_then(|cloud| fit_ls(&cloud, &ls_config))
        {
            explicit_starts.push(warm.psi_vec());
        }
    }

    let strict = config.strict_two_cell;
    let f = |psi: &[f64]| {
        config
            .model
            .build(psi)
            .and_then(|spec| cl_objective(&spec, &censored, strict))
            .map(|p| -p)
            .unwrap_or(f64::INFINITY)
    };
    let (best, _) = minimize_multistart(
        &f,
        &transform,
        &explicit_starts,
        config.n_starts,
        config.n_probes,
        config.seed,
        config.tol,
        config.max_evals,
    )?;
    let loglik = -best.value;

    let (criterion, criterion_singular) = if config.compute_criterion {
        let per_replicate = |psi: &[f64]| {
            config
                .model
                .build(psi)
                .and_then(|spec| cl_per_replicate(&spec, &censored, strict))
        };
        let steps = default_steps(&best.psi);
        match godambe_trace(&per_replicate, &best.psi, &steps, transform.bounds()) {
            Ok((trace, singular)) => (Some(clic(loglik, trace)), Some(singular)),
            Err(_) => (None, None),
        }
    } else {
        (None, None)
    };

    Ok(FitResult {
        model: config.model,
        estimator: config.estimator,
        psi_hat: psi_map(config.model, &best.psi),
        objective: loglik,
        criterion,
        criterion_singular,
        converged: best.converged,
        n_evals: best.n_evals,
        seed: config.seed,
        config_hash: None,
    })
}

/// Fit a sample with whichever estimator the config names, rank-transforming
/// raw margins as needed.
pub fn fit_sample(sample: &SpatialSample, config: &FitConfig) -> Result<FitResult> {
    match config.estimator {
        Estimator::LeastSquares => {
            let known = sample.margin == Margin::UnitFrechet;
            let cloud = empirical_fmadogram(sample, known, false)?;
            fit_ls(&cloud, config)
        }
        Estimator::CensoredLikelihood => {
            if sample.margin == Margin::UnitFrechet {
                fit_cl(sample, config)
            } else {
                fit_cl(&rank_transform_frechet(sample)?, config)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::PairInfo;
    use crate::models::{CorrelationFn, MaxStableFamily};
    use crate::simulate::{simulate_max_mixture, Seed, SiteSet};

    fn truth_spec(a: f64) -> ModelSpec {
        ModelSpec::new(
            a,
            Some(MaxStableFamily::Teg {
                corr: CorrelationFn::Exponential { theta: 0.2 },
                r: 0.25,
            }),
            Some(MaxStableFamily::Smith { sigma: 0.6 }),
        )
        .unwrap()
    }

    fn grid_sites(n_side: usize, spacing: f64) -> SiteSet {
        let coords: Vec<(f64, f64)> = (0..n_side)
            .flat_map(|i| (0..n_side).map(move |j| (i as f64 * spacing, j as f64 * spacing)))
            .collect();
        SiteSet::from_coords(coords).unwrap()
    }

    fn noiseless_cloud(spec: &ModelSpec, sites: &SiteSet) -> MadogramCloud {
        let mut pairs = Vec::new();
        for i in 0..sites.len() {
            for j in (i + 1)..sites.len() {
                pairs.push(PairInfo { i, j, h: sites.distance(i, j), angle: 0.0 });
            }
        }
        let hs: Vec<f64> = pairs.iter().map(|p| p.h).collect();
        let nu = dependence_profile(spec, &hs).unwrap().nu_f;
        MadogramCloud {
            counts: vec![100; pairs.len()],
            n_replicates: 100,
            y_bar: nu.clone(),
            y_sq_bar: nu.iter().map(|v| v * v).collect(),
            pairs,
            y_terms: None,
        }
    }

    #[test]
    fn criteria_formulas() {
        let m = mic(0.01, 4, 100).unwrap();
        assert!((m - (0.01_f64.ln() + 40.0 / 95.0)).abs() < 1e-12);
        assert!(mic(0.01, 4, 5).is_none());
        assert!(mic(f64::NAN, 2, 100).is_none());
        assert!((clic(-120.0, 3.5) - 247.0).abs() < 1e-12);
    }

    #[test]
    fn ls_objective_is_bounded_below_by_term_variance() {
        let spec = truth_spec(0.5);
        let sites = grid_sites(3, 0.2);
        let mut cloud = noiseless_cloud(&spec, &sites);
        // perturb the means so the variance floor is positive
        for (i, y) in cloud.y_bar.iter_mut().enumerate() {
            *y += if i % 2 == 0 { 0.01 } else { -0.01 };
            cloud.y_sq_bar[i] = y.powi(2) + 1e-4;
        }
        let floor: f64 = cloud
            .y_bar
            .iter()
            .zip(&cloud.y_sq_bar)
            .map(|(m, sq)| sq - m * m)
            .sum();
        let at_truth = ls_objective(&spec, &cloud).unwrap();
        assert!(at_truth >= floor - 1e-12);
    }

    #[test]
    fn zero_noise_least_squares_recovers_the_truth() {
        let truth = [0.7, 0.2, 0.25, 0.6];
        let spec = truth_spec(truth[0]);
        let sites = grid_sites(4, 0.2);
        let cloud = noiseless_cloud(&spec, &sites);
        let mut config = FitConfig::new(ModelName::Mm1, Estimator::LeastSquares);
        config.seed = 11;
        let fit = fit_ls(&cloud, &config).unwrap();
        assert!(fit.converged);
        assert!(fit.objective < 1e-10);
        let psi = fit.psi_vec();
        for (got, want) in psi.iter().zip(truth.iter()) {
            assert!(
                (got - want).abs() < 1e-3 * want.max(1.0),
                "recovered {psi:?}, wanted {truth:?}"
            );
        }
        // criterion present and finite
        assert!(fit.criterion.unwrap().is_finite());
    }

    #[test]
    fn simulated_least_squares_lands_near_the_truth() {
        let sites = grid_sites(5, 0.25);
        let spec = truth_spec(0.5);
        let sample =
            simulate_max_mixture(&spec, &sites, 500, &Seed { master: 404 }).unwrap();
        let mut config = FitConfig::new(ModelName::Mm1, Estimator::LeastSquares);
        config.seed = 5;
        let fit = fit_sample(&sample, &config).unwrap();
        let cloud = empirical_fmadogram(&sample, false, false).unwrap();
        let at_truth = ls_objective(&spec, &cloud).unwrap();
        // the multistart search must do at least as well as the truth
        assert!(fit.objective <= at_truth + 1e-12);
        let a_hat = fit.psi_hat["a"];
        assert!(
            (a_hat - 0.5).abs() < 0.25,
            "a_hat = {a_hat} too far from 0.5"
        );
    }

    #[test]
    fn censored_likelihood_smoke_recovers_scale_order() {
        let sites = grid_sites(3, 0.3);
        let spec = ModelSpec::new(
            0.0,
            None,
            Some(MaxStableFamily::Smith { sigma: 0.6 }),
        )
        .unwrap();
        let sample =
            simulate_max_mixture(&spec, &sites, 120, &Seed { master: 77 }).unwrap();
        let mut config = FitConfig::new(ModelName::M5, Estimator::CensoredLikelihood);
        config.seed = 3;
        config.n_starts = 2;
        config.max_evals = 400;
        let fit = fit_cl(&sample, &config).unwrap();
        let sigma = fit.psi_hat["sigma_y"];
        assert!(sigma > 0.1 && sigma < 3.0, "sigma_y = {sigma}");
        assert!(fit.objective.is_finite());
        // CLIC came out of the Godambe machinery
        assert!(fit.criterion.unwrap().is_finite());
        assert_eq!(fit.criterion_kind(), Criterion::Clic);
    }

    #[test]
    fn estimator_mismatch_is_rejected() {
        let spec = truth_spec(0.5);
        let cloud = noiseless_cloud(&spec, &grid_sites(3, 0.2));
        let config = FitConfig::new(ModelName::Mm1, Estimator::CensoredLikelihood);
        assert!(matches!(fit_ls(&cloud, &config), Err(Error::Usage(_))));
    }

    #[test]
    fn fit_result_serializes_with_stable_keys() {
        let spec = truth_spec(0.6);
        let cloud = noiseless_cloud(&spec, &grid_sites(3, 0.2));
        let mut config = FitConfig::new(ModelName::Mm1, Estimator::LeastSquares);
        config.n_starts = 2;
        let fit = fit_ls(&cloud, &config).unwrap();
        let json = serde_json::to_value(&fit).unwrap();
        for key in [
            "model",
            "estimator",
            "psi_hat",
            "objective",
            "criterion",
            "converged",
            "n_evals",
            "seed",
            "config_hash",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(json["model"], "mm1");
        assert_eq!(json["estimator"], "ls");
        assert!(json["psi_hat"].is_object());
        assert_eq!(json["psi_hat"].as_object().unwrap().len(), 4);
        assert!(json["config_hash"].is_null());
        let back: FitResult = serde_json::from_value(json).unwrap();
        assert_eq!(back, fit);
    }

    #[test]
    fn estimators_parse_and_print() {
        assert_eq!("ls".parse::<Estimator>().unwrap(), Estimator::LeastSquares);
        assert_eq!(
            "CL".parse::<Estimator>().unwrap(),
            Estimator::CensoredLikelihood
        );
        assert!("mle".parse::<Estimator>().is_err());
        assert_eq!(Estimator::LeastSquares.to_string(), "ls");
        assert_eq!(Criterion::Clic.as_str(), "clic");
    }
}
