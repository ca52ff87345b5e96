//! Flat key=value run configuration.
//!
//! One `key=value` pair per line, `#` comments, blank lines ignored. Flags
//! override file values. Unknown keys are rejected so typos fail fast.

use std::collections::BTreeMap;
use std::path::Path;

use splitscore_core::{Error, Result};

/// Every key the schema admits.
pub const KNOWN_KEYS: &[&str] = &[
    "sigma",
    "sigma_x",
    "alpha",
    "k_realizations",
    "n_samples",
    "l_samples",
    "metric",
    "sampler",
    "burn_in",
    "thinning",
    "step_scale",
    "prior",
    "lambda",
    "epsilon",
    "kernel_family",
    "kernel_params",
    "kernel_support",
    "mask_r",
    "mask_center_fraction",
    "embedding",
    "embedding_levels",
    "percentile",
    "master_seed",
    "threads",
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

fn known_key(key: &str) -> Result<&'static str> {
    KNOWN_KEYS
        .iter()
        .find(|&&k| k == key)
        .copied()
        .ok_or_else(|| Error::invalid("config", format!("unknown key {key:?}")))
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::invalid(
                    "config",
                    format!("line {}: expected key=value, got {raw:?}", lineno + 1),
                ));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = known_key(key)?;
        self.values.insert(key, value.to_string());
        Ok(())
    }

    /// Install a flag override when the flag was given.
    pub fn override_with<T: ToString>(&mut self, key: &'static str, flag: Option<T>) {
        if let Some(v) = flag {
            self.values.insert(key, v.to_string());
        }
    }

    pub fn get_str(&self, key: &'static str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::invalid("config", format!("key {key}: cannot parse {raw:?}"))),
        }
    }

    pub fn f64_or(&self, key: &'static str, default: f64) -> Result<f64> {
        Ok(self.parse::<f64>(key)?.unwrap_or(default))
    }

    pub fn f64_opt(&self, key: &'static str) -> Result<Option<f64>> {
        self.parse::<f64>(key)
    }

    pub fn usize_or(&self, key: &'static str, default: usize) -> Result<usize> {
        Ok(self.parse::<usize>(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &'static str, default: u64) -> Result<u64> {
        Ok(self.parse::<u64>(key)?.unwrap_or(default))
    }

    pub fn str_or(&self, key: &'static str, default: &str) -> String {
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    pub fn is_set(&self, key: &'static str) -> bool {
        self.values.contains_key(key)
    }
}

/// Parse a comma-separated list with one parser per element.
pub fn parse_list<T: std::str::FromStr>(raw: &str, what: &'static str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| Error::invalid(what, format!("cannot parse element {tok:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let dir = std::env::temp_dir().join("splitscore-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ok.cfg");
        std::fs::write(
            &path,
            "sigma = 0.1\n# comment\nalpha=0.5  # trailing\n\nmetric=phi1\n",
        )
        .unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.f64_or("sigma", 1.0).unwrap(), 0.1);
        assert_eq!(cfg.f64_or("alpha", 0.0).unwrap(), 0.5);
        assert_eq!(cfg.str_or("metric", "phi3"), "phi1");
        assert_eq!(cfg.f64_or("sigma_x", 2.0).unwrap(), 2.0);

        let bad = dir.join("bad.cfg");
        std::fs::write(&bad, "sgima=0.1\n").unwrap();
        assert!(RunConfig::from_file(&bad).is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = RunConfig::default();
        cfg.set("sigma", "0.1").unwrap();
        cfg.override_with("sigma", Some(0.7));
        cfg.override_with("alpha", Option::<f64>::None);
        assert_eq!(cfg.f64_or("sigma", 0.0).unwrap(), 0.7);
        assert!(!cfg.is_set("alpha"));
    }
}
