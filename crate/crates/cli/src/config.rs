//! Flat key/value scenario configs with dotted section names.
//!
//! Syntax: one `key = value` pair per line, `#` comments, blank lines
//! ignored. Values are scalars, identifiers, or whitespace-separated lists.
//! The full key set is documented in `docs/config_schema.md`.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                bail!("line {}: empty key", lineno + 1);
            }
            if values.insert(key.clone(), value).is_some() {
                bail!("line {}: duplicate key `{key}`", lineno + 1);
            }
        }
        Ok(RawConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| anyhow!("missing required key `{key}`"))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse().with_context(|| format!("key `{key}`: bad number `{v}`")))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key)
            .map(|v| v.parse().with_context(|| format!("key `{key}`: bad integer `{v}`")))
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        self.get(key)
            .map(|v| v.parse().with_context(|| format!("key `{key}`: bad integer `{v}`")))
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split_whitespace()
                    .map(|tok| {
                        tok.parse()
                            .with_context(|| format!("key `{key}`: bad number `{tok}`"))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn i64_list(&self, key: &str) -> Result<Option<Vec<i64>>> {
        self.get(key)
            .map(|v| {
                v.split_whitespace()
                    .map(|tok| {
                        tok.parse()
                            .with_context(|| format!("key `{key}`: bad integer `{tok}`"))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Reject keys outside the allowed set (prefix match for sections).
    pub fn check_known_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            let ok = allowed.iter().any(|a| {
                if let Some(prefix) = a.strip_suffix(".*") {
                    key.starts_with(prefix)
                } else {
                    key == a
                }
            });
            if !ok {
                bail!("unknown key `{key}` (see docs/config_schema.md)");
            }
        }
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|s| s.as_str())
    }
}
