//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Mutex;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}` ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown curve `{0}`")]
    UnknownCurve(String),
    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),
    #[error("{0}")]
    Invalid(String),
}

/// Every key any experiment reads.
pub const KNOWN_KEYS: &[&str] = &[
    "a", "adjoint", "audits", "b", "box", "cap", "cubes", "curve", "epsilon", "family", "function",
    "grid", "kernel", "lambda", "lookups", "max_depth", "mc", "n", "out_box", "out_n",
    "pairs", "probes", "region", "root", "samples", "seed", "support", "theta", "triples", "x", "y", "z",
];

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    resolved: Mutex<BTreeMap<String, String>>,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let Some((k, v)) = o.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: 0,
                    text: o.to_string(),
                });
            };
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn raw(&self, key: &str, default: &str) -> String {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered key {key}");
        let v = self.values.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.resolved.lock().expect("config lock").insert(key.to_string(), v.clone());
        v
    }

    pub fn str(&self, key: &str, default: &str) -> String {
        self.raw(key, default)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key, default);
        v.parse::<T>().map_err(|e| ConfigError::BadValue {
            key: key.to_string(),
            value: v.clone(),
            reason: e.to_string(),
        })
    }

    /// `lo..hi`.
    pub fn range(&self, key: &str, default: &str) -> Result<(f64, f64), ConfigError> {
        let v = self.raw(key, default);
        parse_range(&v).map_err(|reason| ConfigError::BadValue {
            key: key.to_string(),
            value: v.clone(),
            reason,
        })
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str, default: &str) -> Result<Vec<f64>, ConfigError> {
        let v = self.raw(key, default);
        v.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ConfigError::BadValue {
                key: key.to_string(),
                value: v.clone(),
                reason: e.to_string(),
            })
    }

    /// Comma-separated words.
    pub fn words(&self, key: &str, default: &str) -> Vec<String> {
        self.raw(key, default)
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Every key read so far with its effective value.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.lock().expect("config lock").clone()
    }
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| "expected lo..hi".to_string())?;
    let lo: f64 = a.trim().parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    let hi: f64 = b.trim().parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err("need finite lo < hi".into());
    }
    Ok((lo, hi))
}
