//! Dataset ingestion and HR/LR pair construction.

use std::fs;
use std::path::{Path, PathBuf};

use lf_core::io::{read_raw, write_raw};
use lf_core::{bicubic_resample_sai, load_lf, luma, LightField4D, Scale};
use sha2::{Digest, Sha256};

use crate::error::{Result, TrainError};

/// Angular extent every training LF is cropped to.
pub const ANGULAR: usize = 7;

/// Environment variable naming the degradation cache directory.
pub const CACHE_ENV: &str = "LFMDFN_CACHE";

/// One ingested light field: luma HR and its degraded LR counterpart.
#[derive(Clone, Debug)]
pub struct LfPair {
    pub name: String,
    pub lr: LightField4D,
    pub hr: LightField4D,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub items: Vec<LfPair>,
    pub r: usize,
}

/// Crops the spatial extent down to a multiple of `r` (keeping the top-left
/// corner) and degrades it with bicubic `1/r` downsampling on luma.
/// Returns `(lr, hr)`.
pub fn make_pair(lf_hr: &LightField4D, r: usize) -> Result<(LightField4D, LightField4D)> {
    let y = luma(lf_hr)?;
    let d = y.dims();
    let (x, w) = (d.x - d.x % r, d.y - d.y % r);
    if x == 0 || w == 0 {
        return Err(TrainError::config(format!("spatial size {}x{} is smaller than the scale {r}", d.x, d.y)));
    }
    let hr = if (x, w) == (d.x, d.y) { y } else { y.crop_spatial(0, 0, x, w)? };
    let lr = bicubic_resample_sai(&hr, Scale::down(r))?;
    Ok((lr, hr))
}

/// Centre-crops to `ANGULAR x ANGULAR` views.
pub fn angular_crop(lf: &LightField4D, path: &Path) -> Result<LightField4D> {
    let d = lf.dims();
    if d.u < ANGULAR || d.v < ANGULAR {
        return Err(TrainError::dataset(
            path,
            format!("angular resolution {}x{} is below the required {ANGULAR}x{ANGULAR}", d.u, d.v),
        ));
    }
    if (d.u, d.v) == (ANGULAR, ANGULAR) {
        return Ok(lf.clone());
    }
    Ok(lf.crop_angular((d.u - ANGULAR) / 2, (d.v - ANGULAR) / 2, ANGULAR, ANGULAR)?)
}

fn cache_key(hr: &LightField4D, r: usize) -> Result<String> {
    let mut bytes = Vec::with_capacity(hr.data().len() * 4 + 32);
    write_raw(hr, &mut bytes)?;
    bytes.extend_from_slice(format!("bicubic-x{r}").as_bytes());
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `make_pair`, memoized on disk under `cache` keyed by the HR content hash.
pub fn make_pair_cached(lf_hr: &LightField4D, r: usize, cache: Option<&Path>) -> Result<(LightField4D, LightField4D)> {
    let Some(dir) = cache else { return make_pair(lf_hr, r) };
    let hr = luma(lf_hr)?;
    let file = dir.join(format!("{}.lf4d", cache_key(&hr, r)?));
    if let Ok(bytes) = fs::read(&file) {
        if let Ok(lr) = read_raw(&mut bytes.as_slice(), &file) {
            let (x, y) = (hr.dims().x - hr.dims().x % r, hr.dims().y - hr.dims().y % r);
            let hr = hr.crop_spatial(0, 0, x, y)?;
            if lr.dims().x * r == x && lr.dims().y * r == y {
                return Ok((lr, hr));
            }
        }
    }
    let (lr, hr) = make_pair(&hr, r)?;
    let io = |e| TrainError::dataset(&file, format!("cannot write degradation cache: {e}"));
    fs::create_dir_all(dir).map_err(io)?;
    let mut buf = Vec::new();
    write_raw(&lr, &mut buf)?;
    fs::write(&file, buf).map_err(io)?;
    Ok((lr, hr))
}

/// Cache directory from `LFMDFN_CACHE`, if set and non-empty.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// LF entries of `root` in name order: subdirectories and non-hidden files.
pub fn list_entries(root: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(root).map_err(|e| TrainError::dataset(root, format!("cannot read directory: {e}")))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| TrainError::dataset(root, e.to_string()))?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

pub fn entry_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Loads every LF under `root`, centre-crops to 7x7 views and degrades by `r`.
pub fn ingest_dataset(root: &Path, r: usize, cache: Option<&Path>) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(TrainError::dataset(root, "not a directory"));
    }
    let mut items = Vec::new();
    for path in list_entries(root)? {
        let lf = load_lf(&path).map_err(|e| TrainError::dataset(&path, format!("unreadable light field: {e}")))?;
        let lf = angular_crop(&lf, &path)?;
        let (lr, hr) = make_pair_cached(&lf, r, cache)?;
        items.push(LfPair { name: entry_name(&path), lr, hr });
    }
    if items.is_empty() {
        return Err(TrainError::dataset(root, "contains no light fields"));
    }
    Ok(Dataset { items, r })
}

impl Dataset {
    /// Builds a dataset from in-memory HR light fields.
    pub fn from_lfs(lfs: Vec<(String, LightField4D)>, r: usize) -> Result<Self> {
        let items = lfs
            .into_iter()
            .map(|(name, lf)| {
                let lf = angular_crop(&lf, Path::new(&name))?;
                let (lr, hr) = make_pair(&lf, r)?;
                Ok(LfPair { name, lr, hr })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { items, r })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
