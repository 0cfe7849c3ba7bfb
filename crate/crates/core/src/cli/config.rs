use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Settings from a `key=value` file. Blank lines and `#` comments are
/// skipped; `-` and `_` are interchangeable in keys.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::InvalidInput(format!("config line {}: expected key=value, got {raw:?}", no + 1)));
            };
            let key = normalize(k);
            if key.is_empty() {
                return Err(Error::InvalidInput(format!("config line {}: empty key", no + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::InvalidInput(format!("config line {}: duplicate key {key}", no + 1)));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Merges flags over file values over defaults and records every resolved
/// value for the report.
pub struct Resolver {
    file: ConfigFile,
    used: BTreeSet<String>,
    resolved: Map<String, Value>,
}

impl Resolver {
    pub fn new(file: ConfigFile) -> Self {
        Resolver { file, used: BTreeSet::new(), resolved: Map::new() }
    }

    fn file_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let key = normalize(key);
        self.used.insert(key.clone());
        match self.file.entries.get(&key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::InvalidInput(format!("config value {key}={raw:?}: {e}"))),
        }
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Serialize + Clone,
        T::Err: Display,
    {
        let file = self.file_value::<T>(key)?;
        let v = flag.or(file).unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Serialize + Clone,
        T::Err: Display,
    {
        let file = self.file_value::<T>(key)?;
        let v = flag.or(file);
        self.record(key, &v);
        Ok(v)
    }

    /// Comma-separated list.
    pub fn list<T>(&mut self, key: &str, flag: Option<Vec<T>>, default: Vec<T>) -> Result<Vec<T>>
    where
        T: FromStr + Serialize + Clone,
        T::Err: Display,
    {
        let file = match self.file_value::<String>(key)? {
            None => None,
            Some(raw) => Some(
                raw.split(',')
                    .map(|s| s.trim().parse::<T>().map_err(|e| Error::InvalidInput(format!("config list {key}: {e}"))))
                    .collect::<Result<Vec<T>>>()?,
            ),
        };
        let v = flag.or(file).unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    fn record<T: Serialize>(&mut self, key: &str, v: &T) {
        let json = serde_json::to_value(v).unwrap_or(Value::Null);
        self.resolved.insert(normalize(key), json);
    }

    /// Resolved settings; file keys that no setting consumed are an error.
    pub fn finish(self) -> Result<Value> {
        let unknown: Vec<&String> = self.file.entries.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(Error::InvalidInput(format!("unknown config keys: {unknown:?}")));
        }
        Ok(Value::Object(self.resolved))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let file = ConfigFile::parse("# grid\nradius = 12\nn_max=7 # trailing\n\nlist = 1, 2,3\n").unwrap();
        let mut r = Resolver::new(file);
        assert_eq!(r.value("radius", None, 20.0).unwrap(), 12.0);
        assert_eq!(r.value("n-max", Some(9u32), 5).unwrap(), 9);
        assert_eq!(r.list::<u32>("list", None, vec![]).unwrap(), vec![1, 2, 3]);
        assert_eq!(r.value("absent", None, 3i32).unwrap(), 3);
        let cfg = r.finish().unwrap();
        assert_eq!(cfg["radius"], 12.0);
        assert_eq!(cfg["n-max"], 9);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ConfigFile::parse("radius 12").is_err());
        assert!(ConfigFile::parse("a=1\na=2").is_err());
        assert!(ConfigFile::parse("=3").is_err());
        let mut r = Resolver::new(ConfigFile::parse("radius=abc").unwrap());
        assert!(r.value("radius", None, 1.0f64).is_err());
        let r = Resolver::new(ConfigFile::parse("typo=1").unwrap());
        assert!(r.finish().is_err());
    }
}
