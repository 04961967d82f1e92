use std::fmt;
use std::str::FromStr;

use lf_core::PlaneKind;

use crate::error::{MdfnError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// All four foldings.
    Full,
    /// Sub-aperture and micro-lens branches only.
    SaOnly,
    /// The two EPI branches only.
    EpiOnly,
}

impl Variant {
    pub fn branches(self) -> &'static [PlaneKind] {
        match self {
            Variant::Full => &PlaneKind::ALL,
            Variant::SaOnly => &[PlaneKind::Sai, PlaneKind::MicroLens],
            Variant::EpiOnly => &[PlaneKind::EpiHorizontal, PlaneKind::EpiVertical],
        }
    }
}

impl FromStr for Variant {
    type Err = MdfnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "saonly" | "sa" | "sa-only" => Ok(Variant::SaOnly),
            "epionly" | "epi" | "epi-only" => Ok(Variant::EpiOnly),
            _ => Err(MdfnError::config(format!("unknown variant `{s}` (full, saonly, epionly)"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::SaOnly => "saonly",
            Variant::EpiOnly => "epionly",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Upsampler {
    DynamicFilter,
    Deconvolution,
}

impl FromStr for Upsampler {
    type Err = MdfnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dynamic" | "dynamicfilter" | "dynamic-filter" => Ok(Upsampler::DynamicFilter),
            "deconv" | "deconvolution" => Ok(Upsampler::Deconvolution),
            _ => Err(MdfnError::config(format!("unknown upsampler `{s}` (dynamic, deconv)"))),
        }
    }
}

impl fmt::Display for Upsampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Upsampler::DynamicFilter => "dynamic",
            Upsampler::Deconvolution => "deconv",
        })
    }
}

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdfnConfig {
    /// Number of fusion blocks.
    pub n: usize,
    /// Feature channels after every block.
    pub c: usize,
    /// Dynamic filter side length (odd).
    pub d: usize,
    /// Upscale factor.
    pub r: usize,
    pub variant: Variant,
    pub upsampler: Upsampler,
    pub branch_kernel: usize,
    pub dfb_mid_channels: usize,
    pub rb_mid_channels: usize,
    pub seed: u64,
}

impl Default for MdfnConfig {
    fn default() -> Self {
        MdfnConfig {
            n: 8,
            c: 80,
            d: 5,
            r: 2,
            variant: Variant::Full,
            upsampler: Upsampler::DynamicFilter,
            branch_kernel: 3,
            dfb_mid_channels: 64,
            rb_mid_channels: 32,
            seed: 0,
        }
    }
}

/// Splits `key=value` text into pairs, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| MdfnError::config(format!("line {}: expected key=value, got `{line}`", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| MdfnError::config(format!("`{key}` expects an integer, got `{value}`")))
}

impl MdfnConfig {
    pub const KEYS: [&'static str; 10] =
        ["n", "c", "d", "r", "variant", "upsampler", "branch_kernel", "dfb_mid_channels", "rb_mid_channels", "seed"];

    /// Sets one field; returns `Ok(false)` if `key` is not a model key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "n" => self.n = num(key, value)?,
            "c" => self.c = num(key, value)?,
            "d" => self.d = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "upsampler" => self.upsampler = value.parse()?,
            "branch_kernel" => self.branch_kernel = num(key, value)?,
            "dfb_mid_channels" => self.dfb_mid_channels = num(key, value)?,
            "rb_mid_channels" => self.rb_mid_channels = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses a model config file; unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = MdfnConfig::default();
        for (k, v) in parse_pairs(text)? {
            if !cfg.set(&k, &v)? {
                return Err(MdfnError::config(format!("unknown key `{k}`")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the model keys of a mixed config (e.g. a checkpoint echo),
    /// ignoring everything else.
    pub fn from_echo(text: &str) -> Result<Self> {
        let mut cfg = MdfnConfig::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let branches = self.variant.branches().len();
        if self.n < 1 {
            return Err(MdfnError::config("n must be at least 1"));
        }
        if self.c == 0 || self.c % branches != 0 {
            return Err(MdfnError::config(format!(
                "c={} must be a positive multiple of the {branches} active branches",
                self.c
            )));
        }
        if self.d % 2 == 0 {
            return Err(MdfnError::config(format!("d={} must be odd", self.d)));
        }
        if !matches!(self.r, 2 | 4) {
            return Err(MdfnError::config(format!("r={} must be 2 or 4", self.r)));
        }
        if self.branch_kernel % 2 == 0 {
            return Err(MdfnError::config(format!("branch_kernel={} must be odd", self.branch_kernel)));
        }
        if self.dfb_mid_channels == 0 || self.rb_mid_channels == 0 {
            return Err(MdfnError::config("dfb_mid_channels and rb_mid_channels must be positive"));
        }
        Ok(())
    }

    /// Output channels of each branch.
    pub fn branch_channels(&self) -> usize {
        self.c / self.variant.branches().len()
    }

    /// Spatial context consumed by the fusion blocks on each side.
    pub fn receptive_margin(&self) -> usize {
        self.n * (self.branch_kernel / 2)
    }

    pub fn to_text(&self) -> String {
        format!(
            "n={}\nc={}\nd={}\nr={}\nvariant={}\nupsampler={}\nbranch_kernel={}\ndfb_mid_channels={}\nrb_mid_channels={}\nseed={}\n",
            self.n,
            self.c,
            self.d,
            self.r,
            self.variant,
            self.upsampler,
            self.branch_kernel,
            self.dfb_mid_channels,
            self.rb_mid_channels,
            self.seed
        )
    }
}
