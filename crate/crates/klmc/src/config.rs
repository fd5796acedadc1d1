//! `key=value` config files. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

/// Keys are matched with `_` and `-` treated alike.
fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key=value, got {raw:?}", no + 1))
            })?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(CliError::Config(format!("config line {}: empty key", no + 1)));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("config line {}: duplicate key {key:?}", no + 1)));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Rejects keys the subcommand does not understand.
    pub fn check_known(&self, known: &[&str]) -> CliResult<()> {
        for k in self.values.keys() {
            if !known.iter().any(|n| normalize(n) == *k) {
                return Err(CliError::Config(format!("unknown config key {k:?}")));
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(&normalize(key)) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("config key {key:?}: cannot parse {v:?}"))),
        }
    }

    /// Flag if given, else the file's value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Flag if given, else the file's value, if any.
    pub fn optional<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Like [`pick`](Self::pick) but with no default.
    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => self
                .get(key)?
                .ok_or_else(|| CliError::Config(format!("missing required setting --{key}"))),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let c = ConfigFile::parse("# run\nn = 10\nh_list=0.2,0.1\n\npotential=x11sq:a=10 # trailing\n").unwrap();
        assert_eq!(c.pick::<usize>(None, "n", 3).unwrap(), 10);
        assert_eq!(c.pick(Some(4usize), "n", 3).unwrap(), 4);
        assert_eq!(c.pick::<f64>(None, "gamma", 1.0).unwrap(), 1.0);
        assert_eq!(c.get::<String>("h-list").unwrap().unwrap(), "0.2,0.1");
        assert_eq!(c.get::<String>("potential").unwrap().unwrap(), "x11sq:a=10");
        assert!(c.check_known(&["n", "h-list", "potential"]).is_ok());
        assert!(matches!(c.check_known(&["n"]), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_malformed() {
        assert!(ConfigFile::parse("n 10").is_err());
        assert!(ConfigFile::parse("=3").is_err());
        assert!(ConfigFile::parse("n=1\nn=2").is_err());
        let c = ConfigFile::parse("n=ten").unwrap();
        assert!(matches!(c.pick::<usize>(None, "n", 3), Err(CliError::Config(_))));
        assert!(matches!(c.require::<f64>(None, "gamma"), Err(CliError::Config(_))));
    }
}
