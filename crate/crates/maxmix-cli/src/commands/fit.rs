//! `maxmix fit`: fit one model to a sample, writing a FitResult JSON.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use maxmix::fit::fit_sample;
use maxmix::{
    Error, Estimator, FitConfig, Margin, ModelName, Result, SpatialSample,
};

use crate::config::{config_hash, resolve_seed, FileConfig, TableExt};
use crate::io::{read_sample, read_sites, write_json, Meta};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Sample table (header of site ids, one row per replicate).
    #[arg(long)]
    pub sample: PathBuf,
    /// Site table (id,x,y) matching the sample columns.
    #[arg(long)]
    pub sites: PathBuf,
    /// Model name (mm1, mm2, m1, m2, m3, m4, m5).
    #[arg(long)]
    pub model: Option<String>,
    /// Estimator: ls (madogram least squares) or cl (censored likelihood).
    #[arg(long)]
    pub estimator: Option<String>,
    /// Marginal scale of the sample: auto, frechet, or raw.
    #[arg(long)]
    pub margin: Option<String>,
    /// Optimizer seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Local searches to run.
    #[arg(long)]
    pub n_starts: Option<usize>,
    /// Quasi-random probes screened before the searches.
    #[arg(long)]
    pub n_probes: Option<usize>,
    /// Evaluation budget per search.
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Convergence tolerance on the simplex diameter.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Censoring quantile for the likelihood estimator.
    #[arg(long)]
    pub censor_q: Option<f64>,
    /// Drop pairs beyond this distance from the likelihood.
    #[arg(long)]
    pub censor_max_distance: Option<f64>,
    /// Use only both-above and both-below censoring cells.
    #[arg(long)]
    pub strict_two_cell: bool,
    /// Skip the least-squares warm start for likelihood fits.
    #[arg(long)]
    pub no_warm_start: bool,
    /// Skip the information criterion.
    #[arg(long)]
    pub no_criterion: bool,
    /// Config file supplying defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output JSON path.
    #[arg(long, default_value = "fit.json")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Resolved {
    sample: String,
    sites: String,
    model: ModelName,
    estimator: Estimator,
    margin: String,
    seed: u64,
    n_starts: usize,
    n_probes: usize,
    max_evals: usize,
    tol: f64,
    censor_q: f64,
    censor_max_distance: f64,
    strict_two_cell: bool,
    warm_start: bool,
    compute_criterion: bool,
}

/// Sidecar-driven margin defaulting: trust the sample's own metadata.
fn margin_from_meta(sample_path: &Path) -> Option<String> {
    let meta_path = sample_path.with_extension("meta.json");
    let text = std::fs::read_to_string(meta_path).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    value.get("margin")?.as_str().map(str::to_string)
}

pub fn run(args: &FitArgs) -> Result<i32> {
    let file = FileConfig::load(args.config.as_deref())?;
    let section = file.section("fit");

    let model: ModelName = args
        .model
        .clone()
        .or(section.get_str("model")?)
        .unwrap_or_else(|| "mm1".into())
        .parse()?;
    let estimator: Estimator = args
        .estimator
        .clone()
        .or(section.get_str("estimator")?)
        .unwrap_or_else(|| "ls".into())
        .parse()?;
    let seed = resolve_seed(args.seed, &file)?;

    let mut config = FitConfig::new(model, estimator);
    config.seed = seed;
    if let Some(v) = args.n_starts.or(section.get_u64("n_starts")?.map(|v| v as usize)) {
        config.n_starts = v;
    }
    if let Some(v) = args.n_probes.or(section.get_u64("n_probes")?.map(|v| v as usize)) {
        config.n_probes = v;
    }
    if let Some(v) = args.max_evals.or(section.get_u64("max_evals")?.map(|v| v as usize)) {
        config.max_evals = v;
    }
    if let Some(v) = args.tol.or(section.get_f64("tol")?) {
        config.tol = v;
    }
    if let Some(v) = args.censor_q.or(section.get_f64("censor_q")?) {
        config.censor.q = v;
    }
    if let Some(v) = args
        .censor_max_distance
        .or(section.get_f64("censor_max_distance")?)
    {
        config.censor.max_distance = v;
    }
    config.strict_two_cell =
        args.strict_two_cell || section.get_bool("strict_two_cell")?.unwrap_or(false);
    config.warm_start =
        !(args.no_warm_start || section.get_bool("no_warm_start")?.unwrap_or(false));
    config.compute_criterion =
        !(args.no_criterion || section.get_bool("no_criterion")?.unwrap_or(false));

    let margin_text = args
        .margin
        .clone()
        .or(section.get_str("margin")?)
        .unwrap_or_else(|| "auto".into());
    let margin = match margin_text.as_str() {
        "frechet" => Margin::UnitFrechet,
        "raw" => Margin::Raw,
        "auto" => match margin_from_meta(&args.sample).as_deref() {
            Some("unit_frechet") => Margin::UnitFrechet,
            _ => Margin::Raw,
        },
        other => {
            return Err(Error::Usage(format!(
                "margin must be auto, frechet, or raw, got {other:?}"
            )))
        }
    };

    let resolved = Resolved {
        sample: args.sample.display().to_string(),
        sites: args.sites.display().to_string(),
        model,
        estimator,
        margin: format!("{margin:?}"),
        seed,
        n_starts: config.n_starts,
        n_probes: config.n_probes,
        max_evals: config.max_evals,
        tol: config.tol,
        censor_q: config.censor.q,
        censor_max_distance: config.censor.max_distance,
        strict_two_cell: config.strict_two_cell,
        warm_start: config.warm_start,
        compute_criterion: config.compute_criterion,
    };
    let hash = config_hash(&resolved);

    let sites = read_sites(&args.sites)?;
    let (ids, data) = read_sample(&args.sample)?;
    if ids != sites.ids {
        return Err(Error::Data(
            "sample columns do not match the site table ids".into(),
        ));
    }
    if data.iter().any(|v| v.is_nan()) {
        return Err(Error::Data(
            "sample has missing values; fitting needs complete rows \
             (transform with the drop-row policy)"
                .into(),
        ));
    }
    let sample = SpatialSample::new(sites, data, margin)?;

    let mut result = fit_sample(&sample, &config)?;
    result.config_hash = Some(hash.clone());
    write_json(&args.out, &result)?;

    let meta_path = args.out.with_extension("meta.json");
    let mut meta = Meta::new("fit", hash);
    meta.seed = Some(seed);
    meta.write(&meta_path)?;

    println!("{}", args.out.display());
    if !result.converged {
        eprintln!("fit did not converge within the evaluation budget");
        return Ok(4);
    }
    Ok(0)
}
