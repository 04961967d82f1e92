//! Procedural light fields: textured fronto-parallel layers at different
//! depths, so that views differ by per-layer disparity shifts.

use std::f64::consts::TAU;

use lf_core::{LfDims, LightField4D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

const MIN_PERIOD: f64 = 3.0;
const MAX_PERIOD: f64 = 40.0;
const AMP_PER_PX: f64 = 0.004;

#[derive(Clone, Debug)]
struct Wave {
    amp: f64,
    fx: f64,
    fy: f64,
    phase: f64,
}

#[derive(Clone, Debug)]
struct Layer {
    /// Pixel shift per unit of angular offset.
    disparity: f64,
    /// Centre and half extents in spatial pixels; `None` fills the plane.
    rect: Option<(f64, f64, f64, f64)>,
    disc: bool,
    base: f64,
    tint: [f64; 3],
    waves: Vec<Wave>,
}

impl Layer {
    fn random(rng: &mut ChaCha8Rng, size: (f64, f64), background: bool) -> Self {
        // amplitude proportional to period: a 1/f spectrum like natural images
        let waves = (0..6)
            .map(|_| {
                let period: f64 = rng.random_range(MIN_PERIOD..MAX_PERIOD);
                let angle = rng.random_range(0.0..TAU);
                Wave {
                    amp: AMP_PER_PX * period * rng.random_range(0.5..1.0),
                    fx: angle.cos() / period,
                    fy: angle.sin() / period,
                    phase: rng.random_range(0.0..TAU),
                }
            })
            .collect();
        let rect = (!background).then(|| {
            (
                rng.random_range(0.2..0.8) * size.0,
                rng.random_range(0.2..0.8) * size.1,
                rng.random_range(0.15..0.35) * size.0,
                rng.random_range(0.15..0.35) * size.1,
            )
        });
        Layer {
            disparity: if background { rng.random_range(-0.5..0.5) } else { rng.random_range(-1.5..1.5) },
            rect,
            disc: rng.random_bool(0.5),
            base: rng.random_range(0.3..0.7),
            tint: [rng.random_range(0.8..1.2), rng.random_range(0.8..1.2), rng.random_range(0.8..1.2)],
            waves,
        }
    }

    fn covers(&self, x: f64, y: f64) -> bool {
        match self.rect {
            None => true,
            Some((cx, cy, hx, hy)) => {
                let (dx, dy) = ((x - cx) / hx, (y - cy) / hy);
                if self.disc {
                    dx * dx + dy * dy <= 1.0
                } else {
                    dx.abs() <= 1.0 && dy.abs() <= 1.0
                }
            }
        }
    }

    fn shade(&self, x: f64, y: f64, c: usize) -> f64 {
        let t: f64 = self.waves.iter().map(|w| w.amp * (TAU * (w.fx * x + w.fy * y) + w.phase).sin()).sum();
        ((self.base + t) * self.tint[c]).clamp(0.0, 1.0)
    }
}

/// Renders a random layered scene with `dims.c` channels (1 or 3) and values
/// in `[0, 1]`. The same seed always gives the same light field.
pub fn synthetic_lf(dims: LfDims, seed: u64) -> Result<LightField4D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = (dims.x as f64, dims.y as f64);
    let count = rng.random_range(2..=4);
    let mut layers: Vec<Layer> = std::iter::once(Layer::random(&mut rng, size, true))
        .chain((0..count).map(|_| Layer::random(&mut rng, size, false)))
        .collect();
    // nearer layers (larger disparity) occlude farther ones
    layers.sort_by(|a, b| b.disparity.total_cmp(&a.disparity));
    let (uc, vc) = ((dims.u as f64 - 1.0) / 2.0, (dims.v as f64 - 1.0) / 2.0);
    Ok(LightField4D::from_fn(dims, |u, v, x, y, c| {
        let (du, dv) = (u as f64 - uc, v as f64 - vc);
        for layer in layers.iter().filter(|l| l.rect.is_some()).chain(layers.iter().filter(|l| l.rect.is_none())) {
            let (sx, sy) = (x as f64 + layer.disparity * du, y as f64 + layer.disparity * dv);
            if layer.covers(sx, sy) {
                return layer.shade(sx, sy, c.min(2)) as f32;
            }
        }
        0.0
    })?)
}
