//! Flat `key = value` run files and the merge of file values under
//! command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// Settings read from a `--config` file. Keys are long flag names without
/// the leading dashes; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value", i + 1);
            };
            let key = key.trim().replace('_', "-");
            let value = value.trim().trim_matches('"').to_string();
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if values.insert(key.clone(), value).is_some() {
                bail!("line {}: duplicate key '{key}'", i + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Parsed value for `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key '{key}': {e}")),
        }
    }

    /// Keys not in `known`, so typos fail loudly.
    pub fn unknown_keys<'a>(&'a self, known: &[&str]) -> Vec<&'a str> {
        self.values
            .keys()
            .map(String::as_str)
            .filter(|k| !known.contains(k))
            .collect()
    }
}

/// Flag value if given, else the file value, else `None`.
pub fn pick<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}
