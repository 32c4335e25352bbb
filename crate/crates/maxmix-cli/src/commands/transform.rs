//! `maxmix transform`: season-filter raw observations and rank-transform
//! them into a fitting-ready sample.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use maxmix::empirical::rank_transform_frechet;
use maxmix::{DMatrix, Error, Margin, Result, SiteSet, SpatialSample};

use crate::config::{config_hash, FileConfig, TableExt};
use crate::io::{read_observations, read_sites, write_sample, write_sites, Meta};

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Observations CSV: first column ISO date, then one column per station.
    #[arg(long)]
    pub observations: PathBuf,
    /// Site table (id,x,y) covering every station column.
    #[arg(long)]
    pub sites: PathBuf,
    /// Months to keep, as start:end inclusive (wrapping allowed, e.g. 11:2).
    #[arg(long)]
    pub season: Option<String>,
    /// Keep all months.
    #[arg(long, conflicts_with = "season")]
    pub all_months: bool,
    /// Missing-value policy: drop-row (default) or pairwise.
    #[arg(long)]
    pub policy: Option<String>,
    /// Config file supplying defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "maxmix-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct Resolved {
    observations: String,
    sites: String,
    season: Option<(u32, u32)>,
    policy: String,
}

fn parse_season(text: &str) -> Result<(u32, u32)> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| Error::Usage(format!("season must be start:end, got {text:?}")))?;
    let lo: u32 = a
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("bad season month {a:?}")))?;
    let hi: u32 = b
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("bad season month {b:?}")))?;
    if !(1..=12).contains(&lo) || !(1..=12).contains(&hi) {
        return Err(Error::Usage(format!("season months must be 1-12, got {text:?}")));
    }
    Ok((lo, hi))
}

/// Month membership in an inclusive range that may wrap the year end.
fn in_season(month: u32, (lo, hi): (u32, u32)) -> bool {
    if lo <= hi {
        (lo..=hi).contains(&month)
    } else {
        month >= lo || month <= hi
    }
}

pub fn run(args: &TransformArgs) -> Result<i32> {
    let file = FileConfig::load(args.config.as_deref())?;
    let section = file.section("transform");

    let season = if args.all_months {
        None
    } else {
        let text = args
            .season
            .clone()
            .or(section.get_str("season")?)
            .unwrap_or_else(|| "4:9".into());
        Some(parse_season(&text)?)
    };
    let policy = args
        .policy
        .clone()
        .or(section.get_str("policy")?)
        .unwrap_or_else(|| "drop-row".into());
    if policy != "drop-row" && policy != "pairwise" {
        return Err(Error::Usage(format!(
            "policy must be drop-row or pairwise, got {policy:?}"
        )));
    }

    let resolved = Resolved {
        observations: args.observations.display().to_string(),
        sites: args.sites.display().to_string(),
        season,
        policy: policy.clone(),
    };
    let hash = config_hash(&resolved);

    let obs = read_observations(&args.observations)?;
    let site_table = read_sites(&args.sites)?;

    // every station must have coordinates; surplus sites are dropped
    let mut coord_of = std::collections::HashMap::new();
    for (id, xy) in site_table.ids.iter().zip(&site_table.coords) {
        coord_of.insert(id.as_str(), *xy);
    }
    let unmatched: Vec<&str> = obs
        .stations
        .iter()
        .map(String::as_str)
        .filter(|s| !coord_of.contains_key(s))
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::Data(format!(
            "stations missing from the site table: {}",
            unmatched.join(", ")
        )));
    }
    let extra = site_table.len() - obs.stations.len();
    if extra > 0 {
        eprintln!("note: dropping {extra} site rows with no observation column");
    }
    let sites = SiteSet::new(
        obs.stations.clone(),
        obs.stations.iter().map(|s| coord_of[s.as_str()]).collect(),
    )?;

    let n_rows = obs.data.nrows();
    let season_rows: Vec<usize> = (0..n_rows)
        .filter(|&r| match season {
            Some(range) => {
                let month = crate::io::parse_month(&obs.dates[r]).expect("validated on read");
                in_season(month, range)
            }
            None => true,
        })
        .collect();

    let (kept_rows, margin): (Vec<usize>, Margin) = if policy == "drop-row" {
        (
            season_rows
                .iter()
                .copied()
                .filter(|&r| (0..sites.len()).all(|c| !obs.data[(r, c)].is_nan()))
                .collect(),
            Margin::UnitFrechet,
        )
    } else {
        (season_rows.clone(), Margin::Raw)
    };
    if kept_rows.len() < 2 {
        return Err(Error::Data(format!(
            "only {} usable rows after filtering",
            kept_rows.len()
        )));
    }
    let filtered =
        DMatrix::from_fn(kept_rows.len(), sites.len(), |r, c| obs.data[(kept_rows[r], c)]);

    let out_data = if policy == "drop-row" {
        let raw = SpatialSample::new(sites.clone(), filtered, Margin::Raw)?;
        rank_transform_frechet(&raw)?.data
    } else {
        filtered
    };

    std::fs::create_dir_all(&args.out_dir).map_err(|e| crate::io_err(&args.out_dir, e))?;
    let sample_path = args.out_dir.join("sample.csv");
    let sites_path = args.out_dir.join("sites.csv");
    let meta_path = args.out_dir.join("sample.meta.json");
    write_sample(&sample_path, &sites.ids, &out_data)?;
    write_sites(&sites_path, &sites)?;

    let mut meta = Meta::new("transform", hash);
    meta.margin = Some(
        match margin {
            Margin::UnitFrechet => "unit_frechet",
            Margin::Raw => "raw",
        }
        .into(),
    );
    meta.extra.insert("policy".into(), serde_json::json!(policy));
    meta.extra.insert(
        "season".into(),
        match season {
            Some((lo, hi)) => serde_json::json!(format!("{lo}:{hi}")),
            None => serde_json::Value::Null,
        },
    );
    meta.extra
        .insert("rows_total".into(), serde_json::json!(n_rows));
    meta.extra
        .insert("rows_in_season".into(), serde_json::json!(season_rows.len()));
    meta.extra
        .insert("rows_kept".into(), serde_json::json!(kept_rows.len()));
    meta.write(&meta_path)?;

    println!("{}", sample_path.display());
    println!("{}", sites_path.display());
    println!("{}", meta_path.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn season_wraps_across_the_year_end() {
        assert!(in_season(4, (4, 9)));
        assert!(in_season(9, (4, 9)));
        assert!(!in_season(10, (4, 9)));
        assert!(in_season(12, (11, 2)));
        assert!(in_season(1, (11, 2)));
        assert!(!in_season(6, (11, 2)));
    }

    #[test]
    fn season_parse_rejects_bad_months() {
        assert!(parse_season("4:9").is_ok());
        assert!(parse_season("0:9").is_err());
        assert!(parse_season("4-9").is_err());
        assert!(parse_season("4:13").is_err());
    }
}
