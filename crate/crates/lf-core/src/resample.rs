//! Separable cubic-convolution resampling of every view.

use crate::error::{LfError, Result};
use crate::lightfield::LightField4D;

/// Cubic convolution coefficient.
pub const CUBIC_A: f64 = -0.5;

/// Rational scale factor `num / den` applied to both spatial axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scale {
    pub num: usize,
    pub den: usize,
}

impl Scale {
    pub fn up(r: usize) -> Self {
        Scale { num: r, den: 1 }
    }

    pub fn down(r: usize) -> Self {
        Scale { num: 1, den: r }
    }

    fn ratio(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn apply(self, n: usize) -> Result<usize> {
        if self.num == 0 || self.den == 0 {
            return Err(LfError::dims("scale must be positive"));
        }
        if (n * self.num) % self.den != 0 {
            return Err(LfError::dims(format!("extent {n} is not divisible for scale {}/{}", self.num, self.den)));
        }
        Ok(n * self.num / self.den)
    }
}

pub fn cubic(t: f64) -> f64 {
    let a = CUBIC_A;
    let t = t.abs();
    if t <= 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    } else {
        0.0
    }
}

/// Symmetric (edge-repeating) reflection into `0..n`.
fn reflect(mut j: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if j < 0 {
            j = -j - 1;
        } else if j >= n {
            j = 2 * n - j - 1;
        } else {
            return j as usize;
        }
    }
}

/// Normalized taps `(source index, weight)` for each output sample along one axis.
///
/// Output `i` sits at input coordinate `(i + 0.5) / s - 0.5`. When shrinking
/// (`s < 1`) the kernel is stretched by `1 / s` to suppress aliasing.
pub fn axis_weights(n_in: usize, scale: Scale) -> Result<Vec<Vec<(usize, f64)>>> {
    let n_out = scale.apply(n_in)?;
    let s = scale.ratio();
    let stretch = if s < 1.0 { s } else { 1.0 };
    let support = 2.0 / stretch;
    let mut out = Vec::with_capacity(n_out);
    for i in 0..n_out {
        // Exact for integer factors: ((2i+1)·den − num) / (2·num).
        let center = ((2 * i + 1) * scale.den) as f64 / (2 * scale.num) as f64 - 0.5;
        let lo = (center - support).floor() as isize;
        let hi = (center + support).ceil() as isize;
        let mut taps = Vec::with_capacity((hi - lo + 1) as usize);
        for j in lo..=hi {
            let w = cubic((j as f64 - center) * stretch);
            if w != 0.0 {
                taps.push((reflect(j, n_in), w));
            }
        }
        let total: f64 = taps.iter().map(|t| t.1).sum();
        for t in &mut taps {
            t.1 /= total;
        }
        out.push(taps);
    }
    Ok(out)
}

/// Resamples each view and channel independently on both spatial axes;
/// the angular grid is unchanged.
pub fn bicubic_resample_sai(lf: &LightField4D, scale: Scale) -> Result<LightField4D> {
    let d = lf.dims();
    let wx = axis_weights(d.x, scale)?;
    let wy = axis_weights(d.y, scale)?;
    let (ox, oy) = (wx.len(), wy.len());
    let out_dims = d.with_spatial(ox, oy);
    let mut out = vec![0.0f32; out_dims.len()];
    let mut rows = vec![0.0f64; d.x * oy];
    let c = d.c;
    for (view, src) in lf.data().chunks(d.x * d.y * c).enumerate() {
        let dst = &mut out[view * ox * oy * c..(view + 1) * ox * oy * c];
        for ch in 0..c {
            for x in 0..d.x {
                let line = &src[x * d.y * c..(x + 1) * d.y * c];
                for (j, taps) in wy.iter().enumerate() {
                    rows[x * oy + j] = taps.iter().map(|&(k, w)| w * line[k * c + ch] as f64).sum();
                }
            }
            for (i, taps) in wx.iter().enumerate() {
                for j in 0..oy {
                    let v: f64 = taps.iter().map(|&(k, w)| w * rows[k * oy + j]).sum();
                    dst[(i * oy + j) * c + ch] = v as f32;
                }
            }
        }
    }
    LightField4D::new(out_dims, out)
}
