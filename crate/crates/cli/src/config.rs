//! Flat key=value config files merged under command-line flags.
//!
//! Format: one `key=value` per line, UTF-8, `#` starts a comment, blank
//! lines ignored. Keys are the long flag names. Flags always win.

use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key=value, got {raw:?}", lineno + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if set, else the parsed config value, else the default.
    pub fn merge<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
            None => Ok(default),
        }
    }

    /// Same as [`merge`] but without a default.
    pub fn merge_opt<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
            None => Ok(None),
        }
    }
}

/// Inclusive integer range or list: "3", "2..5", or "2,3,5".
pub fn parse_value_list(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().context("range start")?;
        let hi: usize = hi.trim().parse().context("range end")?;
        if hi < lo {
            bail!("empty range {text}");
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| anyhow::anyhow!("{part:?}: {e}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let cfg = FileConfig::parse("# header\nm=3\n\nc = 0.4 # trailing\n").unwrap();
        assert_eq!(cfg.get("m"), Some("3"));
        assert_eq!(cfg.get("c"), Some("0.4"));
    }

    #[test]
    fn flags_win_over_config() {
        let cfg = FileConfig::parse("m=3").unwrap();
        assert_eq!(cfg.merge(Some(5usize), "m", 1).unwrap(), 5);
        assert_eq!(cfg.merge(None::<usize>, "m", 1).unwrap(), 3);
        assert_eq!(cfg.merge(None::<usize>, "depth", 1).unwrap(), 1);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(FileConfig::parse("just a line").is_err());
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_value_list("3").unwrap(), vec![3]);
        assert_eq!(parse_value_list("2..4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_value_list("2,5,3").unwrap(), vec![2, 5, 3]);
        assert!(parse_value_list("5..2").is_err());
    }
}
