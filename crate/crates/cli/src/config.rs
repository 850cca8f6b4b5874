// Copyright 2026 The IntRS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `key = value` run configuration files. Flags given on the command line
//! take precedence over file entries.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "model",
    "dataset",
    "sigma",
    "n1",
    "n2",
    "alpha",
    "seed",
    "out",
    "threads",
    "radius-grid",
    "cdf",
    "n",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    /// One `key = value` per line; `#` starts a comment. Keys may use `_`
    /// or `-` interchangeably.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", i + 1));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", i + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// `flag` if given, else the file entry parsed with `parse`.
    pub fn pick<T>(
        &self,
        flag: Option<T>,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| parse(v).map_err(|e| CliError::Usage(format!("config {key}: {e}"))))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let cfg = ConfigFile::parse("# run\nsigma = 32\nn2=1000 # inline\n\nradius_grid = 0:8:4\n").unwrap();
        assert_eq!(cfg.get("sigma"), Some("32"));
        assert_eq!(cfg.get("n2"), Some("1000"));
        assert_eq!(cfg.get("radius-grid"), Some("0:8:4"));
        let n2 = cfg
            .pick(None, "n2", |v| v.parse::<u64>().map_err(|e| e.to_string()))
            .unwrap();
        assert_eq!(n2, Some(1000));
        let n2 = cfg
            .pick(Some(5), "n2", |v| v.parse::<u64>().map_err(|e| e.to_string()))
            .unwrap();
        assert_eq!(n2, Some(5));
        assert_eq!(cfg.pick::<u64>(None, "seed", |_| unreachable!()).unwrap(), None);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(ConfigFile::parse("sigmaa = 3").unwrap_err().contains("unknown"));
        assert!(ConfigFile::parse("seed=1\nseed=2")
            .unwrap_err()
            .contains("duplicate"));
        assert!(ConfigFile::parse("seed").unwrap_err().contains("line 1"));
    }
}
