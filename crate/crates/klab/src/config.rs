//! Run configuration: documented defaults, a key = value config file, and
//! flag overrides (flags win). Hard caps keep desk-scale runs desk-scale.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub const ENV_CACHE_DIR: &str = "KLAB_CACHE_DIR";

pub const MAX_SCALE_L: u32 = 10;
pub const MAX_PROG_BITS: u32 = 26;
pub const MAX_BUDGET: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(OutputFormat::Json),
            "csv" => Some(OutputFormat::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    /// Reference machine version; only version 1 exists.
    pub machine_version: u32,
    /// Max total string length for pair scans (default 4).
    pub scale_l: u32,
    /// Max program bits P (default 24).
    pub prog_bits: u32,
    /// Step budget T (default 1024).
    pub budget: u32,
    /// Worker threads; 0 = autodetect.
    pub workers: usize,
    pub cache_dir: PathBuf,
    pub output_format: OutputFormat,
}

impl Default for Config {
    fn default() -> Self {
        let cache_dir = std::env::var_os(ENV_CACHE_DIR)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("klab-cache"));
        Config {
            machine_version: 1,
            scale_l: 4,
            prog_bits: 24,
            budget: 1024,
            workers: 0,
            cache_dir,
            output_format: OutputFormat::Json,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {err}")]
    Unreadable { path: PathBuf, err: std::io::Error },
    #[error("config line {line}: {msg}")]
    BadLine { line: usize, msg: String },
    #[error("{0}")]
    BadValue(String),
}

impl Config {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|err| ConfigError::Unreadable {
            path: path.to_path_buf(),
            err,
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadLine {
                line: lineno + 1,
                msg: format!("expected key = value, got {raw:?}"),
            })?;
            self.apply_kv(key.trim(), value.trim())
                .map_err(|msg| ConfigError::BadLine {
                    line: lineno + 1,
                    msg,
                })?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value {value:?} for {key}"))
        }
        match key {
            "machine_version" => self.machine_version = num(key, value)?,
            "scale_l" => self.scale_l = num(key, value)?,
            "prog_bits" => self.prog_bits = num(key, value)?,
            "budget" => self.budget = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            "output_format" => {
                self.output_format = OutputFormat::parse(value)
                    .ok_or_else(|| format!("output_format must be csv or json, got {value:?}"))?
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.machine_version != 1 {
            return Err(ConfigError::BadValue(format!(
                "machine_version {} is not available (only 1)",
                self.machine_version
            )));
        }
        if self.scale_l > MAX_SCALE_L {
            return Err(ConfigError::BadValue(format!(
                "scale_l {} exceeds the hard cap {MAX_SCALE_L}",
                self.scale_l
            )));
        }
        if self.prog_bits > MAX_PROG_BITS {
            return Err(ConfigError::BadValue(format!(
                "prog_bits {} exceeds the hard cap {MAX_PROG_BITS}",
                self.prog_bits
            )));
        }
        if self.budget > MAX_BUDGET {
            return Err(ConfigError::BadValue(format!(
                "budget {} exceeds the hard cap 2^20",
                self.budget
            )));
        }
        Ok(())
    }
}
