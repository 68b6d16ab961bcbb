//! Line-oriented `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parsed configuration with typed accessors; unknown keys are kept and
/// ignored by consumers.
#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got `{raw}`", lineno + 1);
            };
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ExperimentConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("read config {path:?}"))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("bad u64 for {key}: {v}")),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => {
                let x: f64 = v.parse().with_context(|| format!("bad f64 for {key}: {v}"))?;
                if !(x > 0.0) {
                    bail!("{key} must be positive, got {x}");
                }
                Ok(x)
            }
        }
    }

    /// Comma-separated f64 list.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad list {key}")))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_lists() {
        let cfg = ExperimentConfig::parse(
            "seed = 42\n# comment\ndt = 1e-4  # trailing\nlevels = 0.25, 0.5, 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.u64_or("seed", 0).unwrap(), 42);
        assert_eq!(cfg.f64_or("dt", 1.0).unwrap(), 1e-4);
        assert_eq!(cfg.f64_list_or("levels", &[]).unwrap(), vec![0.25, 0.5, 1.0]);
        assert_eq!(cfg.u64_or("missing", 7).unwrap(), 7);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ExperimentConfig::parse("no equals here").is_err());
        let cfg = ExperimentConfig::parse("dt = -3").unwrap();
        assert!(cfg.f64_or("dt", 1.0).is_err());
    }
}
