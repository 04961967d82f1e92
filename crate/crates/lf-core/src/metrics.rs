//! PSNR and single-scale SSIM.

use crate::color::luma;
use crate::error::{LfError, Result};
use crate::image2d::Image2D;
use crate::lightfield::LightField4D;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn mse(a: &[f32], b: &[f32]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum();
    sum / a.len() as f64
}

/// Peak signal-to-noise ratio in dB; identical inputs give `f64::INFINITY`.
pub fn psnr(a: &Image2D, b: &Image2D, peak: f64) -> Result<f64> {
    a.same_shape(b)?;
    Ok(psnr_from_mse(mse(&a.data, &b.data), peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut g = std::array::from_fn(|i| {
        let t = i as f64 - half;
        (-t * t / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    });
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= total);
    g
}

/// Separable 'valid' Gaussian filtering of a row-major `h x w` plane.
fn blur_valid(src: &[f64], h: usize, w: usize, g: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let mut tmp = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            tmp[r * ow + c] = g.iter().enumerate().map(|(k, wk)| wk * src[r * w + c + k]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = g.iter().enumerate().map(|(k, wk)| wk * tmp[(r + k) * ow + c]).sum();
        }
    }
    out
}

/// Mean SSIM over the valid region with an explicit data range.
pub fn ssim_with_range(a: &Image2D, b: &Image2D, range: f64) -> Result<f64> {
    a.same_shape(b)?;
    if a.channels != 1 {
        return Err(LfError::Channels { expected: 1, found: a.channels });
    }
    let (h, w) = (a.height, a.width);
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(LfError::dims(format!("image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")));
    }
    let g = gaussian_taps();
    let x: Vec<f64> = a.data.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.data.iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let [mx, my, sxx, syy, sxy] = [&x, &y, &xx, &yy, &xy].map(|p| blur_valid(p, h, w, &g));
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ma, mb) = (mx[i], my[i]);
        let va = sxx[i] - ma * ma;
        let vb = syy[i] - mb * mb;
        let cov = sxy[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mx.len() as f64)
}

/// SSIM for data on a `[0, 1]` scale.
pub fn ssim(a: &Image2D, b: &Image2D) -> Result<f64> {
    ssim_with_range(a, b, 1.0)
}

/// Per-view and mean scores of a light field pair on the luma channel.
#[derive(Clone, Debug, PartialEq)]
pub struct LfScores {
    pub psnr: f64,
    pub ssim: f64,
    pub per_view: Vec<(f64, f64)>,
}

/// PSNR/SSIM on Y for every view, averaged in view index order.
pub fn lf_metrics(reference: &LightField4D, test: &LightField4D) -> Result<LfScores> {
    if reference.dims() != test.dims() {
        return Err(LfError::dims(format!("cannot compare {} with {}", reference.dims(), test.dims())));
    }
    let (a, b) = (luma(reference)?, luma(test)?);
    let d = a.dims();
    let mut per_view = Vec::with_capacity(d.views());
    for u in 0..d.u {
        for v in 0..d.v {
            let (va, vb) = (a.view_sai(u, v)?, b.view_sai(u, v)?);
            per_view.push((psnr(&va, &vb, 1.0)?, ssim(&va, &vb)?));
        }
    }
    let n = per_view.len() as f64;
    let psnr = per_view.iter().map(|p| p.0).sum::<f64>() / n;
    let ssim = per_view.iter().map(|p| p.1).sum::<f64>() / n;
    Ok(LfScores { psnr, ssim, per_view })
}
