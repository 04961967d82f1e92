//! Trained-model wrapper: checkpoints, tiled inference and filter export.

use std::path::Path;

use lf_autodiff::{Checkpoint, ParamStore, Tape, Tensor};
use lf_core::{LfDims, LightField4D};

use crate::config::{MdfnConfig, Upsampler};
use crate::error::{MdfnError, Result};
use crate::model::{dfb_forward, forward, init_params, mdfn_features, param_specs};

/// Default LR tile edge for inference.
pub const DEFAULT_TILE: usize = 32;

/// Filter field `(U, V, rX, rY, d, d)` in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicFilterField {
    pub u: usize,
    pub v: usize,
    pub rx: usize,
    pub ry: usize,
    pub d: usize,
    pub data: Vec<f32>,
}

impl DynamicFilterField {
    /// The `d * d` taps (row-major, `i` over `u`) of output sample `(u, v, p, q)`.
    pub fn filter(&self, u: usize, v: usize, p: usize, q: usize) -> &[f32] {
        let dd = self.d * self.d;
        let k = ((u * self.v + v) * self.rx + p) * self.ry + q;
        &self.data[k * dd..(k + 1) * dd]
    }

    pub fn filters(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks(self.d * self.d)
    }
}

#[derive(Clone, Debug)]
pub struct Mdfn {
    pub cfg: MdfnConfig,
    pub params: ParamStore<f32>,
}

fn lr_tensor(lf: &LightField4D) -> Result<Tensor<f32>> {
    let d = lf.dims();
    if d.c != 1 {
        return Err(MdfnError::config(format!("model input must be single-channel luma, got {} channels", d.c)));
    }
    Ok(Tensor::new(vec![d.u, d.v, d.x, d.y], lf.data().to_vec())?)
}

impl Mdfn {
    pub fn new(cfg: MdfnConfig) -> Result<Self> {
        let params = init_params(&cfg)?;
        Ok(Mdfn { cfg, params })
    }

    /// Restores the model part of a checkpoint; unrelated records (such as
    /// optimizer moments) and unrelated config keys are ignored.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let cfg = MdfnConfig::from_echo(&ckpt.config)?;
        let mut params = ParamStore::new();
        for spec in param_specs(&cfg) {
            let t = ckpt
                .tensors
                .get(&spec.name)
                .ok_or_else(|| MdfnError::Checkpoint(format!("missing parameter `{}`", spec.name)))?;
            if t.shape() != spec.shape.as_slice() {
                return Err(MdfnError::Checkpoint(format!(
                    "`{}` has shape {:?}, config implies {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
            params.insert(spec.name, Tensor::new(spec.shape, t.data().to_vec())?)?;
        }
        Ok(Mdfn { cfg, params })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    /// Checkpoint holding the parameters; `extra` config lines are appended
    /// after the model echo.
    pub fn to_checkpoint(&self, extra: &str) -> Checkpoint {
        let mut ckpt = Checkpoint { config: self.cfg.to_text() + extra, ..Default::default() };
        for (name, t) in self.params.iter() {
            ckpt.tensors.insert(name.to_string(), Tensor::new(t.shape().to_vec(), t.data().to_vec()).expect("consistent"));
        }
        ckpt
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(self.to_checkpoint("").save(path)?)
    }

    /// Runs the whole light field in one pass.
    pub fn forward_full(&self, lr: &LightField4D) -> Result<LightField4D> {
        let mut tape = Tape::inference();
        let x = tape.leaf(lr_tensor(lr)?);
        let p = self.params.bind(&mut tape);
        let y = forward(&mut tape, x, &p, &self.cfg)?;
        let d = lr.dims();
        Ok(LightField4D::new(LfDims::new(d.u, d.v, d.x * self.cfg.r, d.y * self.cfg.r, 1), tape.value(y).to_vec())?)
    }

    /// Super-resolves a luma light field tile by tile. Each tile carries the
    /// blocks' receptive margin, so the result matches a single pass.
    pub fn super_resolve(&self, lr: &LightField4D) -> Result<LightField4D> {
        self.super_resolve_tiled(lr, DEFAULT_TILE)
    }

    pub fn super_resolve_tiled(&self, lr: &LightField4D, tile: usize) -> Result<LightField4D> {
        let d = lr.dims();
        let r = self.cfg.r;
        if d.x <= tile && d.y <= tile {
            return self.forward_full(lr);
        }
        let tile = tile.max(1);
        let m = self.cfg.receptive_margin();
        let out_dims = LfDims::new(d.u, d.v, d.x * r, d.y * r, 1);
        let mut out = vec![0.0f32; out_dims.len()];
        for x0 in (0..d.x).step_by(tile) {
            for y0 in (0..d.y).step_by(tile) {
                let (x1, y1) = ((x0 + tile).min(d.x), (y0 + tile).min(d.y));
                let (ax, ay) = (x0.saturating_sub(m), y0.saturating_sub(m));
                let (bx, by) = ((x1 + m).min(d.x), (y1 + m).min(d.y));
                let part = self.forward_full(&lr.crop_spatial(ax, ay, bx - ax, by - ay)?)?;
                let pd = part.dims();
                for u in 0..d.u {
                    for v in 0..d.v {
                        for px in (x0 * r)..(x1 * r) {
                            let src = pd.offset(u, v, px - ax * r, (y0 - ay) * r, 0);
                            let dst = out_dims.offset(u, v, px, y0 * r, 0);
                            let n = (y1 - y0) * r;
                            out[dst..dst + n].copy_from_slice(&part.data()[src..src + n]);
                        }
                    }
                }
            }
        }
        Ok(LightField4D::new(out_dims, out)?)
    }

    /// Dynamic filter field for the whole input.
    pub fn filter_field(&self, lr: &LightField4D) -> Result<DynamicFilterField> {
        if self.cfg.upsampler != Upsampler::DynamicFilter {
            return Err(MdfnError::config("model uses the deconvolution upsampler and has no dynamic filters"));
        }
        let mut tape = Tape::inference();
        let x = tape.leaf(lr_tensor(lr)?);
        let p = self.params.bind(&mut tape);
        let f = mdfn_features(&mut tape, x, &p, &self.cfg)?;
        let filt = dfb_forward(&mut tape, f, &p, &self.cfg)?;
        let s = tape.shape(filt).to_vec();
        Ok(DynamicFilterField { u: s[0], v: s[1], rx: s[2], ry: s[3], d: s[4], data: tape.value(filt).to_vec() })
    }

    /// The `r * r` filters generated for LR pixel `(x, y)` of view `(u, v)`,
    /// ordered by sub-pixel offset `(dx, dy)`. Only the neighbourhood within
    /// the receptive margin is evaluated.
    pub fn filters_at(&self, lr: &LightField4D, u: usize, v: usize, x: usize, y: usize) -> Result<Vec<Vec<f32>>> {
        let d = lr.dims();
        for (axis, i, n) in [("u", u, d.u), ("v", v, d.v), ("x", x, d.x), ("y", y, d.y)] {
            if i >= n {
                return Err(lf_core::LfError::Range { axis, index: i, len: n }.into());
            }
        }
        let m = self.cfg.receptive_margin();
        let (ax, ay) = (x.saturating_sub(m), y.saturating_sub(m));
        let (bx, by) = ((x + m + 1).min(d.x), (y + m + 1).min(d.y));
        let field = self.filter_field(&lr.crop_spatial(ax, ay, bx - ax, by - ay)?)?;
        let r = self.cfg.r;
        let mut out = Vec::with_capacity(r * r);
        for dx in 0..r {
            for dy in 0..r {
                out.push(field.filter(u, v, (x - ax) * r + dx, (y - ay) * r + dy).to_vec());
            }
        }
        Ok(out)
    }
}
