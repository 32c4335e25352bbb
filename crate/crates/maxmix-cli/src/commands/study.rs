//! `maxmix study`: simulation study sweeping the mixing weight.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use maxmix::fit::fit_sample;
use maxmix::simulate::{sample_sites, simulate_max_mixture};
use maxmix::{Error, Estimator, FitConfig, ModelName, Result, Seed};

use crate::config::{config_hash, mix_seed, resolve_seed, FileConfig, TableExt};
use crate::io::{fmt_value, Meta};

use super::{parse_f64_list, parse_params, parse_region};

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Mixture model whose weight is swept.
    #[arg(long)]
    pub model: Option<String>,
    /// Non-mixing true parameters, e.g. "theta_x=0.2,r_x=0.25,sigma_y=0.6".
    #[arg(long)]
    pub truth: Option<String>,
    /// True mixing weights to sweep, comma separated.
    #[arg(long)]
    pub a_grid: Option<String>,
    /// Sites per replicate.
    #[arg(long)]
    pub n_sites: Option<usize>,
    /// Field replicates per simulated sample.
    #[arg(long)]
    pub n_rep: Option<usize>,
    /// Independent study replicates per grid point.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Estimator lanes to run, e.g. "ls,cl" or "ls".
    #[arg(long)]
    pub estimators: Option<String>,
    /// Sampling window "xmin,xmax,ymin,ymax".
    #[arg(long)]
    pub region: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Censoring quantile for the likelihood lane.
    #[arg(long)]
    pub censor_q: Option<f64>,
    /// Local searches per least-squares fit.
    #[arg(long)]
    pub ls_n_starts: Option<usize>,
    /// Evaluation budget per least-squares fit.
    #[arg(long)]
    pub ls_max_evals: Option<usize>,
    /// Screening probes per least-squares fit.
    #[arg(long)]
    pub ls_n_probes: Option<usize>,
    /// Local searches per likelihood fit.
    #[arg(long)]
    pub cl_n_starts: Option<usize>,
    /// Evaluation budget per likelihood fit.
    #[arg(long)]
    pub cl_max_evals: Option<usize>,
    /// Screening probes per likelihood fit.
    #[arg(long)]
    pub cl_n_probes: Option<usize>,
    /// Config file supplying defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "maxmix-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct Resolved {
    model: ModelName,
    truth: BTreeMap<String, f64>,
    a_grid: Vec<f64>,
    n_sites: usize,
    n_rep: usize,
    replicates: usize,
    estimators: Vec<Estimator>,
    region: String,
    seed: u64,
    censor_q: f64,
    ls_n_starts: Option<usize>,
    ls_max_evals: Option<usize>,
    ls_n_probes: Option<usize>,
    cl_n_starts: usize,
    cl_max_evals: usize,
    cl_n_probes: usize,
}

struct LaneOut {
    estimator: Estimator,
    /// (param, value, error) per model parameter, empty on failure.
    rows: Vec<(&'static str, f64, f64)>,
    failure: Option<String>,
}

struct JobOut {
    lanes: Vec<LaneOut>,
}

/// Linear-interpolation quantile of pre-sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Gaussian kernel density on a fixed grid, Silverman's bandwidth.
fn density_curve(errors: &[f64]) -> Vec<(f64, f64)> {
    let n = errors.len();
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = errors.iter().sum::<f64>() / n as f64;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    let sd = var.sqrt();
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let mut bw = 0.9 * spread * (n as f64).powf(-0.2);
    if !(bw > 0.0) {
        bw = 1e-6;
    }
    let lo = sorted[0] - 3.0 * bw;
    let hi = sorted[n - 1] + 3.0 * bw;
    let step = (hi - lo) / 100.0;
    let norm = 1.0 / (n as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    (0..=100)
        .map(|i| {
            let x = lo + step * i as f64;
            let d = norm
                * errors
                    .iter()
                    .map(|e| (-0.5 * ((x - e) / bw).powi(2)).exp())
                    .sum::<f64>();
            (x, d)
        })
        .collect()
}

pub fn run(args: &StudyArgs) -> Result<i32> {
    let file = FileConfig::load(args.config.as_deref())?;
    let section = file.section("study");

    let model: ModelName = args
        .model
        .clone()
        .or(section.get_str("model")?)
        .unwrap_or_else(|| "mm1".into())
        .parse()?;
    if !model.is_mixture() {
        return Err(Error::Usage(format!(
            "the study sweeps the mixing weight, so the model must be a mixture, got {model}"
        )));
    }
    let free_names: Vec<&'static str> = model
        .param_names()
        .iter()
        .copied()
        .filter(|n| *n != "a")
        .collect();

    let truth_text = args
        .truth
        .clone()
        .or(section.get_str("truth")?)
        .unwrap_or_else(|| "theta_x=0.2,r_x=0.25,sigma_y=0.6".into());
    let truth = parse_params(&truth_text)?;
    for name in &free_names {
        if !truth.contains_key(*name) {
            return Err(Error::Usage(format!(
                "truth is missing {name} (expected {})",
                free_names.join(", ")
            )));
        }
    }
    for name in truth.keys() {
        if !free_names.contains(&name.as_str()) {
            return Err(Error::Usage(format!(
                "truth has unknown parameter {name} (the weight is swept, not fixed)"
            )));
        }
    }

    let a_grid = parse_f64_list(
        &args
            .a_grid
            .clone()
            .or(section.get_str("a_grid")?)
            .unwrap_or_else(|| "0,0.25,0.5,0.75,1".into()),
    )?;
    if a_grid.is_empty() || a_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Usage("a_grid values must lie in [0, 1]".into()));
    }

    let n_sites = args
        .n_sites
        .or(section.get_u64("n_sites")?.map(|v| v as usize))
        .unwrap_or(30);
    let n_rep = args
        .n_rep
        .or(section.get_u64("n_rep")?.map(|v| v as usize))
        .unwrap_or(500);
    let replicates = args
        .replicates
        .or(section.get_u64("replicates")?.map(|v| v as usize))
        .unwrap_or(20);
    if replicates == 0 || n_rep < 2 || n_sites < 2 {
        return Err(Error::Usage(
            "study needs replicates >= 1, n_rep >= 2, n_sites >= 2".into(),
        ));
    }

    let estimator_text = args
        .estimators
        .clone()
        .or(section.get_str("estimators")?)
        .unwrap_or_else(|| "ls,cl".into());
    let mut estimators: Vec<Estimator> = Vec::new();
    for part in estimator_text.split(',') {
        let est: Estimator = part.trim().parse()?;
        if !estimators.contains(&est) {
            estimators.push(est);
        }
    }

    let region_text = args
        .region
        .clone()
        .or(section.get_str("region")?)
        .unwrap_or_else(|| "0,1,0,1".into());
    let region = parse_region(&region_text)?;

    let seed = resolve_seed(args.seed, &file)?;
    let censor_q = args.censor_q.or(section.get_f64("censor_q")?).unwrap_or(0.9);
    let ls_n_starts = args
        .ls_n_starts
        .or(section.get_u64("ls_n_starts")?.map(|v| v as usize));
    let ls_max_evals = args
        .ls_max_evals
        .or(section.get_u64("ls_max_evals")?.map(|v| v as usize));
    let ls_n_probes = args
        .ls_n_probes
        .or(section.get_u64("ls_n_probes")?.map(|v| v as usize));
    let cl_n_starts = args
        .cl_n_starts
        .or(section.get_u64("cl_n_starts")?.map(|v| v as usize))
        .unwrap_or(2);
    let cl_max_evals = args
        .cl_max_evals
        .or(section.get_u64("cl_max_evals")?.map(|v| v as usize))
        .unwrap_or(400);
    let cl_n_probes = args
        .cl_n_probes
        .or(section.get_u64("cl_n_probes")?.map(|v| v as usize))
        .unwrap_or(32);

    let resolved = Resolved {
        model,
        truth: truth.clone(),
        a_grid: a_grid.clone(),
        n_sites,
        n_rep,
        replicates,
        estimators: estimators.clone(),
        region: region_text.clone(),
        seed,
        censor_q,
        ls_n_starts,
        ls_max_evals,
        ls_n_probes,
        cl_n_starts,
        cl_max_evals,
        cl_n_probes,
    };
    let hash = config_hash(&resolved);

    let names = model.param_names();
    let truth_psi = |a: f64| -> Vec<f64> {
        names
            .iter()
            .map(|n| if *n == "a" { a } else { truth[*n] })
            .collect()
    };

    // one job per (grid point, replicate); each draws its own sites and
    // fields from seeds mixed out of the master, so the job list is
    // embarrassingly parallel and identical at any worker count
    let jobs: Vec<(usize, usize)> = (0..a_grid.len())
        .flat_map(|ai| (0..replicates).map(move |j| (ai, j)))
        .collect();

    let results: Vec<Result<JobOut>> = jobs
        .par_iter()
        .map(|&(ai, j)| {
            let a = a_grid[ai];
            let psi = truth_psi(a);
            let spec = model.build(&psi)?;
            let job_seed =
                mix_seed(seed ^ mix_seed(0x5747_0000 + ai as u64) ^ mix_seed(0x4a00 + j as u64));
            let master = Seed::new(job_seed);
            let sites = sample_sites(n_sites, &region, &master)?;
            let sample = simulate_max_mixture(&spec, &sites, n_rep, &master)?;

            let mut lanes = Vec::new();
            for &est in &estimators {
                let mut config = FitConfig::new(model, est);
                config.seed = mix_seed(job_seed ^ est as u64);
                config.censor.q = censor_q;
                config.compute_criterion = false;
                if est == Estimator::CensoredLikelihood {
                    config.n_starts = cl_n_starts;
                    config.max_evals = cl_max_evals;
                    config.n_probes = cl_n_probes;
                } else {
                    if let Some(v) = ls_n_starts {
                        config.n_starts = v;
                    }
                    if let Some(v) = ls_max_evals {
                        config.max_evals = v;
                    }
                    if let Some(v) = ls_n_probes {
                        config.n_probes = v;
                    }
                }
                match fit_sample(&sample, &config) {
                    Ok(fit) => {
                        let rows = names
                            .iter()
                            .zip(fit.psi_vec())
                            .zip(&psi)
                            .map(|((name, value), truth)| (*name, value, value - truth))
                            .collect();
                        lanes.push(LaneOut { estimator: est, rows, failure: None });
                    }
                    Err(err) => lanes.push(LaneOut {
                        estimator: est,
                        rows: Vec::new(),
                        failure: Some(format!("a={a} replicate={j} {est}: {err}")),
                    }),
                }
            }
            Ok(JobOut { lanes })
        })
        .collect();

    let mut job_outs = Vec::with_capacity(results.len());
    for result in results {
        job_outs.push(result?);
    }
    let mut n_failures = 0usize;
    for job in &job_outs {
        for lane in &job.lanes {
            if let Some(msg) = &lane.failure {
                eprintln!("fit failed: {msg}");
                n_failures += 1;
            }
        }
    }

    std::fs::create_dir_all(&args.out_dir).map_err(|e| crate::io_err(&args.out_dir, e))?;

    let mut estimates = String::from("a_true,replicate,estimator,param,value,error\n");
    // errors grouped per (grid point, lane, param) for the summary tables
    let mut groups: BTreeMap<(usize, usize, &'static str), Vec<f64>> = BTreeMap::new();
    for (ai, a) in a_grid.iter().enumerate() {
        for (ei, est) in estimators.iter().enumerate() {
            for j in 0..replicates {
                let job = &job_outs[ai * replicates + j];
                let lane = &job.lanes[ei];
                debug_assert_eq!(lane.estimator, *est);
                for &(param, value, error) in &lane.rows {
                    estimates.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        fmt_value(*a),
                        j,
                        est,
                        param,
                        fmt_value(value),
                        fmt_value(error)
                    ));
                    groups.entry((ai, ei, param)).or_default().push(error);
                }
            }
        }
    }

    let mut boxplot = String::from("a_true,estimator,param,min,q1,median,q3,max\n");
    let mut rmse = String::from("a_true,estimator,param,rmse\n");
    let mut density = String::from("a_true,estimator,param,x,density\n");
    for (ai, a) in a_grid.iter().enumerate() {
        for (ei, est) in estimators.iter().enumerate() {
            for name in names {
                let Some(errors) = groups.get(&(ai, ei, *name)) else {
                    continue;
                };
                let mut sorted = errors.clone();
                sorted.sort_by(f64::total_cmp);
                boxplot.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_value(*a),
                    est,
                    name,
                    fmt_value(sorted[0]),
                    fmt_value(quantile(&sorted, 0.25)),
                    fmt_value(quantile(&sorted, 0.5)),
                    fmt_value(quantile(&sorted, 0.75)),
                    fmt_value(sorted[sorted.len() - 1])
                ));
                let ms = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
                rmse.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_value(*a),
                    est,
                    name,
                    fmt_value(ms.sqrt())
                ));
                for (x, d) in density_curve(errors) {
                    density.push_str(&format!(
                        "{},{},{},{},{}\n",
                        fmt_value(*a),
                        est,
                        name,
                        fmt_value(x),
                        fmt_value(d)
                    ));
                }
            }
        }
    }

    for (file_name, contents) in [
        ("estimates.csv", &estimates),
        ("errors_boxplot.csv", &boxplot),
        ("rmse.csv", &rmse),
        ("error_density.csv", &density),
    ] {
        let path = args.out_dir.join(file_name);
        std::fs::write(&path, contents).map_err(|e| crate::io_err(&path, e))?;
        println!("{}", path.display());
    }

    let mut meta = Meta::new("study", hash);
    meta.seed = Some(seed);
    meta.extra.insert("model".into(), model.as_str().into());
    meta.extra.insert(
        "a_grid".into(),
        serde_json::Value::Array(a_grid.iter().map(|a| (*a).into()).collect()),
    );
    meta.extra.insert("n_sites".into(), n_sites.into());
    meta.extra.insert("n_rep".into(), n_rep.into());
    meta.extra.insert("replicates".into(), replicates.into());
    meta.extra.insert(
        "estimators".into(),
        serde_json::Value::Array(estimators.iter().map(|e| e.as_str().into()).collect()),
    );
    meta.extra.insert("n_failures".into(), n_failures.into());
    meta.write(&args.out_dir.join("study.meta.json"))?;
    Ok(0)
}
