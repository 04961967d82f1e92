//! Random aligned patch sampling with dihedral augmentation.

use lf_core::{apply_transform, LfTransform, LightField4D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::dataset::Dataset;
use crate::error::{Result, TrainError};

#[derive(Clone, Debug, PartialEq)]
pub struct PatchSample {
    pub lr: LightField4D,
    pub hr: LightField4D,
    /// Index into the dataset.
    pub source: usize,
    /// Crop origin in LR pixels; the HR crop starts at `r` times this.
    pub origin: (usize, usize),
    pub transform: LfTransform,
}

/// RNG for training step `step`: one ChaCha stream per step, so any step's
/// batch can be drawn without replaying the ones before it.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Cuts the aligned LR/HR crop at LR origin `(x0, y0)` from item `source`.
pub fn cut_patch(ds: &Dataset, source: usize, origin: (usize, usize), crop: usize, t: LfTransform) -> Result<PatchSample> {
    let item = &ds.items[source];
    let r = ds.r;
    let lr = item.lr.crop_spatial(origin.0, origin.1, crop, crop)?;
    let hr = item.hr.crop_spatial(origin.0 * r, origin.1 * r, crop * r, crop * r)?;
    let (lr, hr) = if t == LfTransform::IDENTITY { (lr, hr) } else { (apply_transform(&lr, t)?, apply_transform(&hr, t)?) };
    Ok(PatchSample { lr, hr, source, origin, transform: t })
}

/// Draws `cfg.batch_size` samples: uniform LF, uniform LR crop origin,
/// uniform transform among the 16 (when augmenting).
pub fn sample_batch(ds: &Dataset, cfg: &TrainConfig, rng: &mut impl Rng) -> Result<Vec<PatchSample>> {
    if ds.is_empty() {
        return Err(TrainError::config("cannot sample from an empty dataset"));
    }
    let crop = cfg.crop_size;
    for item in &ds.items {
        let d = item.lr.dims();
        if d.x < crop || d.y < crop {
            return Err(TrainError::config(format!(
                "`{}` has LR size {}x{}, smaller than crop_size {crop}",
                item.name, d.x, d.y
            )));
        }
    }
    (0..cfg.batch_size)
        .map(|_| {
            let source = rng.random_range(0..ds.len());
            let d = ds.items[source].lr.dims();
            let origin = (rng.random_range(0..=d.x - crop), rng.random_range(0..=d.y - crop));
            let t = if cfg.augment { LfTransform::from_index(rng.random_range(0..16)) } else { LfTransform::IDENTITY };
            cut_patch(ds, source, origin, crop, t)
        })
        .collect()
}
