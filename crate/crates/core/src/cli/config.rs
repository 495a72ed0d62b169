//! Plain-text `key = value` run configuration. Flags override file values.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{Display, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Values from an optional config file, plus the record of what got resolved.
#[derive(Debug, Default)]
pub struct RunConfig {
    file: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<Vec<(String, String)>>,
}

impl RunConfig {
    /// Parses lines of `key = value`; `#` starts a comment, blank lines are
    /// skipped. Keys may use `-` or `_`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut file = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(Error::InvalidConfig(format!("line {}: empty key", i + 1)));
            }
            if file.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidConfig(format!("line {}: duplicate key {key}", i + 1)));
            }
        }
        Ok(Self {
            file,
            ..Self::default()
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn file_value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let key = normalize(key);
        self.used.borrow_mut().insert(key.clone());
        self.file
            .get(&key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::InvalidConfig(format!("config key {key} = {v:?}: {e}")))
            })
            .transpose()
    }

    fn record(&self, key: &str, value: &impl Display) {
        self.resolved.borrow_mut().push((normalize(key), value.to_string()));
    }

    /// Flag value, else file value, else `default`.
    pub fn get<T: FromStr + Display>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let from_file = self.file_value(key)?;
        let v = flag.or(from_file).unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    /// Like [`get`](Self::get) but with no default.
    pub fn require<T: FromStr + Display>(&self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: Display,
    {
        let from_file = self.file_value(key)?;
        let v = flag
            .or(from_file)
            .ok_or_else(|| Error::InvalidConfig(format!("--{} is required", normalize(key))))?;
        self.record(key, &v);
        Ok(v)
    }

    pub fn optional<T: FromStr + Display>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let from_file = self.file_value(key)?;
        let v = flag.or(from_file);
        match &v {
            Some(v) => self.record(key, v),
            None => self.record(key, &"none"),
        }
        Ok(v)
    }

    /// A switch: set by the flag, or by `true`/`false` in the file.
    pub fn switch(&self, key: &str, flag: bool) -> Result<bool> {
        let v = flag || self.file_value::<bool>(key)?.unwrap_or(false);
        self.record(key, &v);
        Ok(v)
    }

    /// Fails on file keys the command never asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .file
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "unknown config keys: {}",
                unknown.join(", ")
            )))
        }
    }

    /// `key=value` pairs in resolution order.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (i, (k, v)) in self.resolved.borrow().iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{k}={v}");
        }
        s
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_default() {
        let c = RunConfig::parse("seed = 9\n# comment\nthreshold=0.4  # trailing\n\nerosion_iters = 3").unwrap();
        assert_eq!(c.get("seed", Some(1u64), 0).unwrap(), 1);
        assert_eq!(c.get("threshold", None, 0.5).unwrap(), 0.4);
        assert_eq!(c.get("erosion-iters", None, 2usize).unwrap(), 3);
        assert_eq!(c.get("dilation-iters", None, 1usize).unwrap(), 1);
        assert!(c.finish().is_ok());
        assert_eq!(c.summary(), "seed=1 threshold=0.4 erosion-iters=3 dilation-iters=1");
    }

    #[test]
    fn errors() {
        assert!(RunConfig::parse("novalue").is_err());
        assert!(RunConfig::parse("a=1\na=2").is_err());
        let c = RunConfig::parse("seed = x\nextra = 1").unwrap();
        assert!(c.get::<u64>("seed", None, 0).is_err());
        assert!(c.finish().is_err());
        let c = RunConfig::parse("").unwrap();
        assert!(c.require::<String>("out", None).is_err());
    }
}
