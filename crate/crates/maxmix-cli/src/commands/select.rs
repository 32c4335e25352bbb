//! `maxmix select`: fit candidate models and rank them per estimator lane.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use maxmix::fit::fit_sample;
use maxmix::{
    Error, Estimator, FitConfig, FitResult, Margin, ModelName, Result, SpatialSample,
};

use crate::config::{config_hash, resolve_seed, FileConfig, TableExt};
use crate::io::{csv_field, fmt_value, read_sample, read_sites, write_json, Meta};

use super::format_params;

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Sample table (header of site ids, one row per replicate).
    #[arg(long)]
    pub sample: PathBuf,
    /// Site table (id,x,y) matching the sample columns.
    #[arg(long)]
    pub sites: PathBuf,
    /// Candidate model names, comma separated (at least two).
    #[arg(long)]
    pub models: Option<String>,
    /// Estimator lane(s): ls, cl, or both.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Marginal scale of the sample: auto, frechet, or raw.
    #[arg(long)]
    pub margin: Option<String>,
    /// Optimizer seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Censoring quantile for the likelihood lane.
    #[arg(long)]
    pub censor_q: Option<f64>,
    /// Evaluation budget per search.
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Local searches per fit.
    #[arg(long)]
    pub n_starts: Option<usize>,
    /// Config file supplying defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "maxmix-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct Resolved {
    sample: String,
    sites: String,
    models: Vec<ModelName>,
    lanes: Vec<Estimator>,
    margin: String,
    seed: u64,
    censor_q: f64,
    max_evals: Option<usize>,
    n_starts: Option<usize>,
}

enum Row {
    Fit(ModelName, FitResult),
    Failed(ModelName, &'static str),
}

fn error_category(err: &Error) -> &'static str {
    match err {
        Error::Domain(_) => "error: domain",
        Error::Usage(_) => "error: usage",
        Error::Data(_) => "error: data",
        Error::Numeric(_) => "error: numeric",
        Error::NonConvergence(_) => "error: non-convergence",
    }
}

pub fn run(args: &SelectArgs) -> Result<i32> {
    let file = FileConfig::load(args.config.as_deref())?;
    let section = file.section("select");

    let models_text = args
        .models
        .clone()
        .or(section.get_str("models")?)
        .unwrap_or_else(|| "mm1,mm2,m1,m2,m3,m4,m5".into());
    let mut models = Vec::new();
    for name in models_text.split(',') {
        let model: ModelName = name.trim().parse()?;
        if !models.contains(&model) {
            models.push(model);
        }
    }
    if models.len() < 2 {
        return Err(Error::Usage("selection needs at least two models".into()));
    }

    let lane_text = args
        .estimator
        .clone()
        .or(section.get_str("estimator")?)
        .unwrap_or_else(|| "ls".into());
    let lanes: Vec<Estimator> = match lane_text.as_str() {
        "both" => vec![Estimator::LeastSquares, Estimator::CensoredLikelihood],
        other => vec![other.parse()?],
    };

    let margin_text = args
        .margin
        .clone()
        .or(section.get_str("margin")?)
        .unwrap_or_else(|| "auto".into());
    let seed = resolve_seed(args.seed, &file)?;
    let censor_q = args.censor_q.or(section.get_f64("censor_q")?).unwrap_or(0.9);
    let max_evals = args
        .max_evals
        .or(section.get_u64("max_evals")?.map(|v| v as usize));
    let n_starts = args
        .n_starts
        .or(section.get_u64("n_starts")?.map(|v| v as usize));

    let resolved = Resolved {
        sample: args.sample.display().to_string(),
        sites: args.sites.display().to_string(),
        models: models.clone(),
        lanes: lanes.clone(),
        margin: margin_text.clone(),
        seed,
        censor_q,
        max_evals,
        n_starts,
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
            "sample has missing values; fitting needs complete rows".into(),
        ));
    }
    let margin = match margin_text.as_str() {
        "frechet" => Margin::UnitFrechet,
        "raw" => Margin::Raw,
        "auto" => {
            let meta_path = args.sample.with_extension("meta.json");
            let from_meta = std::fs::read_to_string(meta_path)
                .ok()
                .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
                .and_then(|v| v.get("margin")?.as_str().map(str::to_string));
            match from_meta.as_deref() {
                Some("unit_frechet") => Margin::UnitFrechet,
                _ => Margin::Raw,
            }
        }
        other => {
            return Err(Error::Usage(format!(
                "margin must be auto, frechet, or raw, got {other:?}"
            )))
        }
    };
    let sample = SpatialSample::new(sites, data, margin)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| crate::io_err(&args.out_dir, e))?;

    for &lane in &lanes {
        let mut rows: Vec<Row> = Vec::new();
        for &model in &models {
            let mut config = FitConfig::new(model, lane);
            config.seed = seed;
            config.censor.q = censor_q;
            if let Some(v) = max_evals {
                config.max_evals = v;
            }
            if let Some(v) = n_starts {
                config.n_starts = v;
            }
            match fit_sample(&sample, &config) {
                Ok(mut fit) => {
                    fit.config_hash = Some(hash.clone());
                    let json_path = args
                        .out_dir
                        .join(format!("fit_{}_{}.json", lane.as_str(), model.as_str()));
                    write_json(&json_path, &fit)?;
                    rows.push(Row::Fit(model, fit));
                }
                Err(err) => {
                    eprintln!("{lane} fit of {model} failed: {err}");
                    rows.push(Row::Failed(model, error_category(&err)));
                }
            }
        }

        // ranked fits first (ascending criterion), then criterion-less fits,
        // then failures; stable in the given model order within each class
        let class = |row: &Row| match row {
            Row::Fit(_, fit) if fit.criterion.is_some() => 0,
            Row::Fit(..) => 1,
            Row::Failed(..) => 2,
        };
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&x, &y| {
            class(&rows[x]).cmp(&class(&rows[y])).then_with(|| {
                match (&rows[x], &rows[y]) {
                    (Row::Fit(_, a), Row::Fit(_, b)) => match (a.criterion, b.criterion) {
                        (Some(ca), Some(cb)) => ca.total_cmp(&cb),
                        _ => std::cmp::Ordering::Equal,
                    },
                    _ => std::cmp::Ordering::Equal,
                }
                .then(x.cmp(&y))
            })
        });

        let mut out = String::from(
            "model,estimator,status,params,objective,criterion,converged,n_evals\n",
        );
        for &idx in &order {
            match &rows[idx] {
                Row::Fit(model, fit) => {
                    let status = if fit.criterion.is_some() { "ok" } else { "no-criterion" };
                    let params = format_params(model.param_names(), &fit.psi_vec());
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        model.as_str(),
                        lane.as_str(),
                        status,
                        csv_field(&params),
                        fmt_value(fit.objective),
                        fit.criterion.map(fmt_value).unwrap_or_default(),
                        fit.converged,
                        fit.n_evals
                    ));
                }
                Row::Failed(model, category) => {
                    out.push_str(&format!(
                        "{},{},{category},,,,,\n",
                        model.as_str(),
                        lane.as_str()
                    ));
                }
            }
        }
        let table_path = args.out_dir.join(format!("select_{}.csv", lane.as_str()));
        std::fs::write(&table_path, out).map_err(|e| crate::io_err(&table_path, e))?;
        println!("{}", table_path.display());
    }

    let mut meta = Meta::new("select", hash);
    meta.seed = Some(seed);
    meta.write(&args.out_dir.join("select.meta.json"))?;
    Ok(0)
}
