//! Layered option resolution: command line > MAXMIX_SEED > config file > default.

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use maxmix::{Error, Result};

/// Optional config file: a top-level seed plus one table per subcommand.
///
/// Values act as defaults; command-line flags override them, and the
/// MAXMIX_SEED environment variable overrides a config-file seed.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub simulate: toml::Table,
    #[serde(default)]
    pub madogram: toml::Table,
    #[serde(default)]
    pub fit: toml::Table,
    #[serde(default)]
    pub study: toml::Table,
    #[serde(default)]
    pub transform: toml::Table,
    #[serde(default)]
    pub select: toml::Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| crate::io_err(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }

    /// The named subcommand's table.
    pub fn section(&self, command: &str) -> &toml::Table {
        match command {
            "simulate" => &self.simulate,
            "madogram" => &self.madogram,
            "fit" => &self.fit,
            "study" => &self.study,
            "transform" => &self.transform,
            "select" => &self.select,
            other => unreachable!("unknown section {other}"),
        }
    }
}

/// Value extractors for one subcommand's config table.
pub trait TableExt {
    fn get_u64(&self, key: &str) -> Result<Option<u64>>;
    fn get_f64(&self, key: &str) -> Result<Option<f64>>;
    fn get_str(&self, key: &str) -> Result<Option<String>>;
    fn get_bool(&self, key: &str) -> Result<Option<bool>>;
}

impl TableExt for toml::Table {
    fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(Error::Usage(format!(
                "config key {key} must be a non-negative integer, got {v}"
            ))),
        }
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(Error::Usage(format!(
                "config key {key} must be a number, got {v}"
            ))),
        }
    }

    fn get_str(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(Error::Usage(format!(
                "config key {key} must be a string, got {v}"
            ))),
        }
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(Error::Usage(format!(
                "config key {key} must be a boolean, got {v}"
            ))),
        }
    }
}

/// Resolve the seed: flag > MAXMIX_SEED > config file > 0.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(text) = std::env::var("MAXMIX_SEED") {
        return text
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("MAXMIX_SEED is not a u64: {text:?}")));
    }
    Ok(file.seed.unwrap_or(0))
}

/// SHA-256 of the resolved configuration's canonical JSON form.
pub fn config_hash<T: serde::Serialize>(resolved: &T) -> String {
    let json = serde_json::to_string(resolved).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// splitmix64 step, used to derive independent sub-seeds from a master seed.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_value_sensitive() {
        #[derive(serde::Serialize)]
        struct C {
            n: u32,
        }
        let a = config_hash(&C { n: 1 });
        let b = config_hash(&C { n: 1 });
        let c = config_hash(&C { n: 2 });
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn table_extractors_enforce_types() {
        let table: toml::Table = toml::from_str("n = 3\nx = 1.5\ns = \"hi\"\nb = true").unwrap();
        assert_eq!(table.get_u64("n").unwrap(), Some(3));
        assert_eq!(table.get_f64("x").unwrap(), Some(1.5));
        assert_eq!(table.get_f64("n").unwrap(), Some(3.0));
        assert_eq!(table.get_str("s").unwrap(), Some("hi".into()));
        assert_eq!(table.get_bool("b").unwrap(), Some(true));
        assert!(table.get_u64("x").is_err());
        assert_eq!(table.get_u64("missing").unwrap(), None);
    }
}
