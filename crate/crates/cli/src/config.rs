//! Flat `key = value` config files and flag/config/default merging.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// Every key a config file may contain. `_` and `-` are interchangeable.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "batch-size",
    "candidates",
    "corpus",
    "dropout",
    "epochs",
    "hidden",
    "input",
    "iterations",
    "lr-finetune",
    "lr-initial",
    "method",
    "model",
    "multis",
    "n",
    "out",
    "per-document",
    "predictions",
    "seed",
    "singles",
    "task",
    "truth",
    "vocab",
    "vocab-out",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut problems = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                problems.push(format!("line {}: expected `key = value`", n + 1));
                continue;
            };
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                problems.push(format!("line {}: unknown key `{}`", n + 1, k.trim()));
                continue;
            }
            values.insert(key, v.trim().to_string());
        }
        if !problems.is_empty() {
            bail!("{}", problems.join("\n"));
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves settings in precedence order flag > config file > default and
/// collects every problem instead of stopping at the first.
pub struct Resolver<'a> {
    config: &'a ConfigFile,
    pub problems: Vec<String>,
}

impl<'a> Resolver<'a> {
    pub fn new(config: &'a ConfigFile) -> Self {
        Self {
            config,
            problems: Vec::new(),
        }
    }

    /// Flag value, else parsed config value, else `None`.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Option<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return flag;
        }
        let raw = self.config.get(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems.push(format!("{key}: cannot parse `{raw}`: {e}"));
                None
            }
        }
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> T
    where
        T: FromStr,
        T::Err: Display,
    {
        self.optional(key, flag).unwrap_or(default)
    }

    /// Like [`optional`](Self::optional) but records a problem when absent.
    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> PathBuf {
        match self.optional(key, flag) {
            Some(p) => p,
            None => {
                self.problems.push(format!("--{key} is required"));
                PathBuf::new()
            }
        }
    }

    /// Records a problem if the input file is missing.
    pub fn existing(&mut self, key: &str, flag: Option<PathBuf>) -> PathBuf {
        let p = self.path(key, flag);
        if !p.as_os_str().is_empty() && !p.exists() {
            self.problems.push(format!("--{key}: {} does not exist", p.display()));
        }
        p
    }

    pub fn problem(&mut self, message: impl Into<String>) {
        self.problems.push(message.into());
    }

    pub fn finish(self) -> Result<()> {
        if self.problems.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  {}", self.problems.join("\n  "))
        }
    }
}
