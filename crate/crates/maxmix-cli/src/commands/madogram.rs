//! `maxmix madogram`: empirical F-madogram curve, optionally by direction.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use maxmix::empirical::{
    bin_madogram, default_sectors, directional_madogram, empirical_fmadogram_masked,
};
use maxmix::{BinSpec, Error, Result};

use crate::config::{config_hash, FileConfig, TableExt};
use crate::io::{csv_field, fmt_value, read_sample, read_sites, Meta};

use super::parse_f64_list;

#[derive(Debug, Args)]
pub struct MadogramArgs {
    /// Sample table (header of site ids, one row per replicate).
    #[arg(long)]
    pub sample: PathBuf,
    /// Site table (id,x,y) matching the sample columns.
    #[arg(long)]
    pub sites: PathBuf,
    /// Number of equal-width distance bins.
    #[arg(long, conflicts_with = "edges")]
    pub bins: Option<usize>,
    /// Explicit ascending bin edges, comma separated.
    #[arg(long)]
    pub edges: Option<String>,
    /// Also estimate per-direction curves over the default four sectors.
    #[arg(long)]
    pub sectors: bool,
    /// Odd moving-average window applied to the binned curve.
    #[arg(long)]
    pub smooth: Option<usize>,
    /// Config file supplying defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long, default_value = "madogram.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Resolved {
    sample: String,
    sites: String,
    bins: Option<usize>,
    edges: Option<Vec<f64>>,
    sectors: bool,
    smooth: Option<usize>,
}

pub fn run(args: &MadogramArgs) -> Result<i32> {
    let file = FileConfig::load(args.config.as_deref())?;
    let section = file.section("madogram");

    let bins = args
        .bins
        .or(section.get_u64("bins")?.map(|v| v as usize));
    let edges = match args.edges.clone().or(section.get_str("edges")?) {
        Some(text) => Some(parse_f64_list(&text)?),
        None => None,
    };
    let sectors = args.sectors || section.get_bool("sectors")?.unwrap_or(false);
    let smooth = args
        .smooth
        .or(section.get_u64("smooth")?.map(|v| v as usize));
    let spec = match (&edges, bins) {
        (Some(e), None) => BinSpec::Edges(e.clone()),
        (None, Some(n)) => BinSpec::EqualWidth(n),
        (None, None) => BinSpec::default(),
        (Some(_), Some(_)) => {
            return Err(Error::Usage("give either bins or edges, not both".into()))
        }
    };

    let resolved = Resolved {
        sample: args.sample.display().to_string(),
        sites: args.sites.display().to_string(),
        bins,
        edges,
        sectors,
        smooth,
    };
    let hash = config_hash(&resolved);

    let sites = read_sites(&args.sites)?;
    let (ids, data) = read_sample(&args.sample)?;
    if ids != sites.ids {
        return Err(Error::Data(format!(
            "sample columns {:?}... do not match site ids {:?}...",
            ids.first(),
            sites.ids.first()
        )));
    }
    // ranks tolerate missing values; complete data takes the same path
    let cloud = empirical_fmadogram_masked(&sites, &data, false)?;

    let mut out = String::new();
    if sectors {
        out.push_str("h,nu_hat,count,sector\n");
        for sector in directional_madogram(&cloud, &default_sectors(), &spec)? {
            let binned = match smooth {
                Some(w) => sector.binned.smooth(w)?,
                None => sector.binned,
            };
            let label = format!("({},{}]", sector.lo, sector.hi);
            for i in 0..binned.centers.len() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_value(binned.centers[i]),
                    fmt_value(binned.nu[i]),
                    binned.counts[i],
                    csv_field(&label)
                ));
            }
        }
    } else {
        out.push_str("h,nu_hat,count\n");
        let mut binned = bin_madogram(&cloud, &spec)?;
        if let Some(w) = smooth {
            binned = binned.smooth(w)?;
        }
        for i in 0..binned.centers.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_value(binned.centers[i]),
                fmt_value(binned.nu[i]),
                binned.counts[i]
            ));
        }
    }
    std::fs::write(&args.out, out).map_err(|e| crate::io_err(&args.out, e))?;

    let meta_path = args.out.with_extension("meta.json");
    let mut meta = Meta::new("madogram", hash);
    meta.extra.insert(
        "n_pairs".into(),
        serde_json::json!(cloud.pairs.len()),
    );
    meta.extra.insert(
        "n_replicates".into(),
        serde_json::json!(cloud.n_replicates),
    );
    meta.write(&meta_path)?;

    println!("{}", args.out.display());
    Ok(0)
}
