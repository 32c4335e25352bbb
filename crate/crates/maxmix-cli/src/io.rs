//! CSV and JSON artifact plumbing shared by the subcommands.

use std::path::Path;

use serde::Serialize;

use maxmix::{DMatrix, Error, Result, SiteSet};

/// Shortest round-trip decimal form; empty string for missing values.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| crate::io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

fn data_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("{} line {line}: {msg}", path.display()))
}

/// Read a `id,x,y` site table.
pub fn read_sites(path: &Path) -> Result<SiteSet> {
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| data_err(path, 1, e))?
        .clone();
    if headers.len() != 3 || &headers[0] != "id" || &headers[1] != "x" || &headers[2] != "y" {
        return Err(data_err(path, 1, "expected header id,x,y"));
    }
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| data_err(path, line, e))?;
        ids.push(record[0].to_string());
        let x: f64 = record[1]
            .parse()
            .map_err(|_| data_err(path, line, format!("bad x value {:?}", &record[1])))?;
        let y: f64 = record[2]
            .parse()
            .map_err(|_| data_err(path, line, format!("bad y value {:?}", &record[2])))?;
        coords.push((x, y));
    }
    SiteSet::new(ids, coords)
}

/// Write a `id,x,y` site table.
pub fn write_sites(path: &Path, sites: &SiteSet) -> Result<()> {
    let mut out = String::from("id,x,y\n");
    for (id, (x, y)) in sites.ids.iter().zip(&sites.coords) {
        out.push_str(&format!("{},{},{}\n", csv_field(id), fmt_value(*x), fmt_value(*y)));
    }
    std::fs::write(path, out).map_err(|e| crate::io_err(path, e))
}

/// Quote a field only when CSV requires it.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Read a sample table: header of site ids, one row per replicate, empty
/// cells as NaN.
pub fn read_sample(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut reader = open_reader(path)?;
    let ids: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(path, 1, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if ids.len() < 2 {
        return Err(data_err(path, 1, "need at least two site columns"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| data_err(path, line, e))?;
        if record.len() != ids.len() {
            return Err(data_err(
                path,
                line,
                format!("{} fields, expected {}", record.len(), ids.len()),
            ));
        }
        let mut row = Vec::with_capacity(ids.len());
        for field in record.iter() {
            if field.is_empty() {
                row.push(f64::NAN);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| data_err(path, line, format!("bad value {field:?}")))?;
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(data_err(path, 2, "sample has no replicate rows"));
    }
    let data = DMatrix::from_fn(rows.len(), ids.len(), |r, c| rows[r][c]);
    Ok((ids, data))
}

/// Write a sample table (header of ids, one row per replicate, NaN empty).
pub fn write_sample(path: &Path, ids: &[String], data: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        &ids.iter()
            .map(|s| csv_field(s))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for r in 0..data.nrows() {
        let row: Vec<String> = (0..data.ncols()).map(|c| fmt_value(data[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| crate::io_err(path, e))
}

/// One row of an observations file: ISO date plus per-station values.
pub struct Observations {
    pub dates: Vec<String>,
    pub stations: Vec<String>,
    pub data: DMatrix<f64>,
}

/// Read an observations table: first column ISO date, then station columns.
pub fn read_observations(path: &Path) -> Result<Observations> {
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| data_err(path, 1, e))?
        .clone();
    if headers.len() < 3 {
        return Err(data_err(path, 1, "need a date column and at least two stations"));
    }
    let stations: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| data_err(path, line, e))?;
        if record.len() != headers.len() {
            return Err(data_err(
                path,
                line,
                format!("{} fields, expected {}", record.len(), headers.len()),
            ));
        }
        parse_month(&record[0]).ok_or_else(|| {
            data_err(path, line, format!("bad ISO date {:?}", &record[0]))
        })?;
        dates.push(record[0].to_string());
        let mut row = Vec::with_capacity(stations.len());
        for field in record.iter().skip(1) {
            if field.is_empty() {
                row.push(f64::NAN);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| data_err(path, line, format!("bad value {field:?}")))?;
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(data_err(path, 2, "observations file has no rows"));
    }
    let data = DMatrix::from_fn(rows.len(), stations.len(), |r, c| rows[r][c]);
    Ok(Observations { dates, stations, data })
}

/// Month (1-12) of a YYYY-MM-DD date string, or None if malformed.
pub fn parse_month(date: &str) -> Option<u32> {
    let bytes = date.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return None;
    }
    if !date
        .char_indices()
        .all(|(i, c)| if i == 4 || i == 7 { c == '-' } else { c.is_ascii_digit() })
    {
        return None;
    }
    let month: u32 = date[5..7].parse().ok()?;
    let day: u32 = date[8..10].parse().ok()?;
    if (1..=12).contains(&month) && (1..=31).contains(&day) {
        Some(month)
    } else {
        None
    }
}

/// Artifact sidecar carrying provenance; never includes wall-clock time.
#[derive(Debug, Serialize)]
pub struct Meta {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<String>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty", default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Meta {
    pub fn new(command: &str, config_hash: String) -> Self {
        Meta {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seed: None,
            margin: None,
            extra: serde_json::Map::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("meta serializes");
        std::fs::write(path, json + "\n").map_err(|e| crate::io_err(path, e))
    }
}

/// Write pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, json + "\n").map_err(|e| crate::io_err(path, e))
}
