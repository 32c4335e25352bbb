//! Subcommand implementations and their shared argument plumbing.

pub mod fit;
pub mod madogram;
pub mod select;
pub mod simulate;
pub mod study;
pub mod transform;

use std::collections::BTreeMap;

use maxmix::{Error, ModelName, Region, Result};

/// Parse `name=value` pairs separated by commas or semicolons.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for chunk in text.split([',', ';']) {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (name, value) = chunk
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected name=value, got {chunk:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad numeric value in {chunk:?}")))?;
        if out.insert(name.trim().to_string(), value).is_some() {
            return Err(Error::Usage(format!("duplicate parameter {:?}", name.trim())));
        }
    }
    if out.is_empty() {
        return Err(Error::Usage("no parameters given".into()));
    }
    Ok(out)
}

/// Order a parameter map into the model's parameter vector, requiring an
/// exact name match.
pub fn params_for_model(model: ModelName, map: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let names = model.param_names();
    let mut psi = Vec::with_capacity(names.len());
    for &name in names {
        match map.get(name) {
            Some(&v) => psi.push(v),
            None => {
                return Err(Error::Usage(format!(
                    "model {model} needs parameter {name} (expects {})",
                    names.join(", ")
                )))
            }
        }
    }
    if map.len() != names.len() {
        let extra: Vec<&str> = map
            .keys()
            .map(String::as_str)
            .filter(|k| !names.contains(k))
            .collect();
        return Err(Error::Usage(format!(
            "unknown parameters for model {model}: {}",
            extra.join(", ")
        )));
    }
    Ok(psi)
}

/// Render a parameter vector as semicolon-joined `name=value` pairs.
pub fn format_params(names: &[&str], psi: &[f64]) -> String {
    names
        .iter()
        .zip(psi)
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Parse a comma-separated list of numbers.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Usage(format!("bad number {:?}", s.trim())))
        })
        .collect()
}

/// Parse a `xmin,xmax,ymin,ymax` region.
pub fn parse_region(text: &str) -> Result<Region> {
    let parts = parse_f64_list(text)?;
    if parts.len() != 4 {
        return Err(Error::Usage(format!(
            "region needs xmin,xmax,ymin,ymax, got {} numbers",
            parts.len()
        )));
    }
    Region::new(parts[0], parts[1], parts[2], parts[3])
}
