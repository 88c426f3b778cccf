//! Line-oriented `key = value` configuration files with strict key checking;
//! command-line flags take precedence over file values.

use anyhow::{bail, Context};
use std::collections::BTreeMap;
use std::path::Path;

/// Keys a config file may set (the model parameters plus common numerics).
pub const KNOWN_KEYS: &[&str] = &[
    "a", "sigma", "eps", "tau", "d", "k1", "k2", "ell", "alpha", "grid", "modes", "t_end", "dt",
    "amplitude", "cache_dir",
];

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "config {}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                );
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!(
                    "config {}:{}: unknown key `{key}`",
                    path.display(),
                    lineno + 1
                );
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get_f64(&self, key: &str) -> anyhow::Result<Option<f64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => Ok(Some(
                raw.parse::<f64>()
                    .with_context(|| format!("config key `{key}` = `{raw}` is not a number"))?,
            )),
        }
    }
}

/// Flag-over-file resolution.
pub fn resolve(flag: Option<f64>, file: Option<f64>, default: f64) -> f64 {
    flag.or(file).unwrap_or(default)
}
