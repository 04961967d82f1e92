use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mdfn::{parse_pairs, MdfnConfig};

use crate::error::{Result, TrainError};

/// Learning-rate schedule. Only a constant rate is supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    #[default]
    Constant,
}

impl FromStr for Schedule {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Schedule::Constant),
            _ => Err(TrainError::config(format!("unknown schedule `{s}` (expected constant)"))),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("constant")
    }
}

/// Training run settings. The network shape, including the scale `r`,
/// lives in `model`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: MdfnConfig,
    /// LR crop edge; HR crops are `r * crop_size`.
    pub crop_size: usize,
    pub batch_size: usize,
    pub iterations: u64,
    pub lr: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub augment: bool,
    pub dataset_root: PathBuf,
    /// Save a checkpoint every this many steps; 0 keeps only the final one.
    pub checkpoint_interval: u64,
    /// Zero the wall-clock column of the loss log.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: MdfnConfig::default(),
            crop_size: 24,
            batch_size: 22,
            iterations: 100_000,
            lr: 1e-4,
            schedule: Schedule::Constant,
            seed: 0,
            augment: true,
            dataset_root: PathBuf::from("data/train"),
            checkpoint_interval: 1000,
            deterministic: false,
        }
    }
}

fn parsed<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| TrainError::config(format!("`{key}` has invalid value `{value}`")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(TrainError::config(format!("`{key}` expects true or false, got `{value}`"))),
    }
}

impl TrainConfig {
    /// Sets one key; model keys are forwarded to the network config.
    /// Returns `Ok(false)` for unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "crop_size" => self.crop_size = parsed(key, value)?,
            "batch_size" => self.batch_size = parsed(key, value)?,
            "iterations" => self.iterations = parsed(key, value)?,
            "lr" => self.lr = parsed(key, value)?,
            "schedule" => self.schedule = value.parse()?,
            "seed" => {
                self.seed = parsed(key, value)?;
                self.model.seed = self.seed;
            }
            "augment" => self.augment = flag(key, value)?,
            "dataset_root" => self.dataset_root = PathBuf::from(value),
            "checkpoint_interval" => self.checkpoint_interval = parsed(key, value)?,
            "deterministic" => self.deterministic = flag(key, value)?,
            _ => return Ok(self.model.set(key, value)?),
        }
        Ok(true)
    }

    fn from_pairs(text: &str, strict: bool) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (k, v) in parse_pairs(text)? {
            if !cfg.set(&k, &v)? && strict {
                return Err(TrainError::config(format!("unknown key `{k}`")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config file body; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(text, true)
    }

    /// Reads a config echo that may carry extra bookkeeping keys.
    pub fn from_echo(text: &str) -> Result<Self> {
        Self::from_pairs(text, false)
    }

    /// Reads a config file. A relative `dataset_root` is taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TrainError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.dataset_root.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset_root = dir.join(&cfg.dataset_root);
            }
        }
        Ok(cfg)
    }

    pub fn r(&self) -> usize {
        self.model.r
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.crop_size == 0 {
            return Err(TrainError::config("crop_size must be positive"));
        }
        if self.batch_size == 0 {
            return Err(TrainError::config("batch_size must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(TrainError::config(format!("lr={} must be positive", self.lr)));
        }
        Ok(())
    }

    /// All fields as `key=value` lines, model keys first.
    pub fn to_text(&self) -> String {
        let mut s = self.model.to_text();
        s += &format!(
            "crop_size={}\nbatch_size={}\niterations={}\nlr={}\nschedule={}\naugment={}\ndataset_root={}\ncheckpoint_interval={}\ndeterministic={}\n",
            self.crop_size,
            self.batch_size,
            self.iterations,
            self.lr,
            self.schedule,
            self.augment,
            self.dataset_root.display(),
            self.checkpoint_interval,
            self.deterministic
        );
        s
    }
}
