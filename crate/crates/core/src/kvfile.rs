//! Line-oriented `key=value` config files.
//!
//! Shared by the column-schema map, design specs, scenario files, rate cards,
//! and parcel files. Blank lines and `#` comments are ignored; keys are
//! case-sensitive and may not repeat.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    path: PathBuf,
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse_str(path: impl Into<PathBuf>, text: &str) -> Result<Self> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                path: path.clone(),
                message: format!("line {}: expected key=value, got `{line}`", lineno + 1),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::Config {
                    path,
                    message: format!("line {}: duplicate key `{key}`", lineno + 1),
                });
            }
        }
        Ok(KvFile { path, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(path, &text)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn err(&self, message: String) -> Error {
        Error::Config { path: self.path.clone(), message }
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| self.err(format!("missing key `{key}`")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Comma-separated list value; empty or absent key yields an empty list.
    pub fn list(&self, key: &str) -> Vec<String> {
        match self.get(key) {
            None => Vec::new(),
            Some(v) if v.is_empty() => Vec::new(),
            Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        }
    }

    /// Rejects keys outside `allowed` so typos fail loudly.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(self.err(format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_trims() {
        let kv = KvFile::parse_str("t", "a = 1\n# comment\n\nb=x,y , z\n").unwrap();
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.list("b"), vec!["x", "y", "z"]);
        assert_eq!(kv.parse::<i64>("a").unwrap(), Some(1));
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(KvFile::parse_str("t", "a=1\na=2").is_err());
        assert!(KvFile::parse_str("t", "just words").is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        let kv = KvFile::parse_str("t", "a=1\nzz=2").unwrap();
        assert!(kv.check_keys(&["a"]).is_err());
        assert!(kv.check_keys(&["a", "zz"]).is_ok());
    }
}
