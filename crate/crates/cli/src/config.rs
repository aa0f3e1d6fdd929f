//! Flat key=value configuration files. Keys mirror the long flag names;
//! values on the command line take precedence.

use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TrajectoryKind {
    Cw,
    Darcx,
}

#[derive(Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                );
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn get_str(&self, key: &str) -> Option<String> {
        self.entries.get(key).cloned()
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .with_context(|| format!("config key `{key}` = `{v}` is not a number"))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .with_context(|| format!("config key `{key}` = `{v}` is not an integer"))
            })
            .transpose()
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .with_context(|| format!("config key `{key}` = `{v}` is not an integer"))
            })
            .transpose()
    }

    pub fn get_i64(&self, key: &str) -> Result<Option<i64>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .with_context(|| format!("config key `{key}` = `{v}` is not an integer"))
            })
            .transpose()
    }

    pub fn get_traj(&self, key: &str) -> Result<Option<TrajectoryKind>> {
        match self.entries.get(key).map(String::as_str) {
            None => Ok(None),
            Some("cw") => Ok(Some(TrajectoryKind::Cw)),
            Some("darcx") => Ok(Some(TrajectoryKind::Darcx)),
            Some(other) => bail!("config key `{key}` must be `cw` or `darcx`, got `{other}`"),
        }
    }
}
