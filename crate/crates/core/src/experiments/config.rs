//! Flat `key = value` sweep configuration files.
//!
//! ```text
//! # LoRa-E goodput sweep
//! region = EU868
//! dr = DR8, DR9
//! payload = 10
//! devices = log:1000:30000:16
//! horizon_ms = 3600000
//! replications = 3
//! seed = 42
//! output = out/lorae
//! ```
//!
//! Device counts accept comma-separated items, each one of `n`, `a..b`,
//! `a..b:step` (inclusive) or `log:a:b:n`.

use std::path::PathBuf;

use thiserror::Error;

use crate::params::{DrAlias, Region};

use super::log_spaced;

/// Upper bound on the number of device counts one expression may expand to.
const MAX_COUNTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {key} given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {reason}")]
    Value { line: usize, key: String, reason: String },
    #[error("bad device counts {0:?}")]
    DeviceCounts(String),
}

/// Settings read from a config file; absent keys stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub region: Option<Region>,
    pub drs: Option<Vec<DrAlias>>,
    pub payloads: Option<Vec<u32>>,
    pub device_counts: Option<Vec<u32>>,
    pub horizon_ms: Option<u64>,
    pub replications: Option<u32>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ConfigFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line });
        };
        let key = key.trim();
        let value = value.trim();
        let err = |reason: String| ConfigError::Value {
            line,
            key: key.to_string(),
            reason,
        };
        let dup = || ConfigError::Duplicate {
            line,
            key: key.to_string(),
        };
        match key {
            "region" => set(&mut cfg.region, value.parse().map_err(|e| err(format!("{e}")))?, dup)?,
            "dr" | "drs" => set(
                &mut cfg.drs,
                split_list(value, |s| s.parse::<DrAlias>().map_err(|e| e.to_string())).map_err(err)?,
                dup,
            )?,
            "payload" | "payloads" => set(
                &mut cfg.payloads,
                split_list(value, |s| s.parse::<u32>().map_err(|e| e.to_string())).map_err(err)?,
                dup,
            )?,
            "devices" | "device_counts" => set(
                &mut cfg.device_counts,
                parse_device_counts(value).map_err(|e| err(e.to_string()))?,
                dup,
            )?,
            "horizon_ms" => set(&mut cfg.horizon_ms, value.parse().map_err(|e| err(format!("{e}")))?, dup)?,
            "replications" => set(&mut cfg.replications, value.parse().map_err(|e| err(format!("{e}")))?, dup)?,
            "seed" | "master_seed" => set(&mut cfg.seed, value.parse().map_err(|e| err(format!("{e}")))?, dup)?,
            "output" => {
                if value.is_empty() {
                    return Err(err("empty path".into()));
                }
                set(&mut cfg.output, PathBuf::from(value), dup)?
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    Ok(cfg)
}

fn set<T>(slot: &mut Option<T>, v: T, dup: impl FnOnce() -> ConfigError) -> Result<(), ConfigError> {
    if slot.is_some() {
        return Err(dup());
    }
    *slot = Some(v);
    Ok(())
}

fn split_list<T>(value: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

/// Expands a device-count expression into sorted, distinct positive counts.
pub fn parse_device_counts(s: &str) -> Result<Vec<u32>, ConfigError> {
    let bad = || ConfigError::DeviceCounts(s.to_string());
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let mut out: Vec<u32> = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some(rest) = item.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [lo, hi, n] = parts[..] else { return Err(bad()) };
            let (lo, hi, n) = (num(lo)?, num(hi)?, num(n)?);
            if lo == 0 || hi < lo || n == 0 || n as usize > MAX_COUNTS {
                return Err(bad());
            }
            out.extend(log_spaced(lo, hi, n));
        } else if let Some((lo, rest)) = item.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (num(hi)?, num(step)?),
                None => (num(rest)?, 1),
            };
            let lo = num(lo)?;
            if lo == 0 || hi < lo || step == 0 || ((hi - lo) / step) as usize >= MAX_COUNTS {
                return Err(bad());
            }
            out.extend((lo..=hi).step_by(step as usize));
        } else {
            let n = num(item)?;
            if n == 0 {
                return Err(bad());
            }
            out.push(n);
        }
        if out.len() > MAX_COUNTS {
            return Err(bad());
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let text = "# comment\nregion = EU868\ndr = DR8, DR9 # fast and slow\npayload=10,50\n\
                    devices = 10..30:10, 100\nhorizon_ms = 3600000\nreplications = 3\nseed = 7\noutput = out/x\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.region, Some(Region::Eu868));
        assert_eq!(c.drs, Some(vec![DrAlias(8), DrAlias(9)]));
        assert_eq!(c.payloads, Some(vec![10, 50]));
        assert_eq!(c.device_counts, Some(vec![10, 20, 30, 100]));
        assert_eq!(c.horizon_ms, Some(3_600_000));
        assert_eq!(c.replications, Some(3));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.output, Some(PathBuf::from("out/x")));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_config("\nregion EU868"), Err(ConfigError::Syntax { line: 2 }));
        assert!(matches!(parse_config("colour = red"), Err(ConfigError::UnknownKey { line: 1, .. })));
        assert!(matches!(parse_config("seed=1\nseed=2"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(matches!(parse_config("replications = -1"), Err(ConfigError::Value { .. })));
        assert!(matches!(parse_config("dr = ,"), Err(ConfigError::Value { .. })));
        assert!(matches!(parse_config("devices = 0"), Err(ConfigError::Value { .. })));
    }

    #[test]
    fn device_count_forms() {
        assert_eq!(parse_device_counts("5").unwrap(), [5]);
        assert_eq!(parse_device_counts("1..4").unwrap(), [1, 2, 3, 4]);
        assert_eq!(parse_device_counts("3, 1..2").unwrap(), [1, 2, 3]);
        assert_eq!(parse_device_counts("log:10:1000:3").unwrap(), [10, 100, 1000]);
        for bad in ["", "0", "4..1", "1..5:0", "log:0:5:2", "log:1:5", "x", "1..4294967295"] {
            assert!(parse_device_counts(bad).is_err(), "{bad:?}");
        }
    }
}
