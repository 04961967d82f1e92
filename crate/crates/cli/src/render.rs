//! 8-bit image output for filter grids and EPIs.

use std::path::Path;

use image::{GrayImage, RgbImage};
use lf_core::Image2D;

use crate::error::{CliError, CliResult};

/// Pixel edge of one filter tap in the heat grid.
pub const TAP_PX: usize = 12;
/// Gap between neighbouring tiles.
pub const GAP_PX: usize = 4;

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Black, red, yellow, white ramp over `t` in `[0, 1]`.
pub fn heat(t: f32) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * 3.0;
    let (r, g, b) = if t < 1.0 {
        (t, 0.0, 0.0)
    } else if t < 2.0 {
        (1.0, t - 1.0, 0.0)
    } else {
        (1.0, 1.0, t - 2.0)
    };
    [to_u8(r), to_u8(g), to_u8(b)]
}

/// Tiles `r x r` filters of `d x d` taps; tile `(dx, dy)` sits at grid row
/// `dx`, column `dy`. All tiles share one colour scale.
pub fn filter_grid(filters: &[Vec<f32>], r: usize, d: usize) -> RgbImage {
    let lo = filters.iter().flatten().copied().fold(f32::INFINITY, f32::min);
    let hi = filters.iter().flatten().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let side = r * d * TAP_PX + (r + 1) * GAP_PX;
    let mut img = RgbImage::from_pixel(side as u32, side as u32, image::Rgb([64, 64, 64]));
    for (k, f) in filters.iter().enumerate() {
        let (row, col) = (k / r, k % r);
        let (oy, ox) = (GAP_PX + row * (d * TAP_PX + GAP_PX), GAP_PX + col * (d * TAP_PX + GAP_PX));
        for i in 0..d {
            for j in 0..d {
                let px = image::Rgb(heat((f[i * d + j] - lo) / span));
                for a in 0..TAP_PX {
                    for b in 0..TAP_PX {
                        img.put_pixel((ox + j * TAP_PX + b) as u32, (oy + i * TAP_PX + a) as u32, px);
                    }
                }
            }
        }
    }
    img
}

/// Nearest-neighbour magnification by `scale`, optionally stretching the
/// value range to `[0, 1]`.
pub fn prepare(img: &Image2D, scale: usize, normalize: bool) -> Image2D {
    let (lo, hi) = img.data.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let stretch = |v: f32| if normalize && hi > lo { (v - lo) / (hi - lo) } else { v };
    let s = scale.max(1);
    let (h, w, c) = (img.height * s, img.width * s, img.channels);
    let mut data = Vec::with_capacity(h * w * c);
    for row in 0..h {
        for col in 0..w {
            for ch in 0..c {
                data.push(stretch(img.at(row / s, col / s, ch)));
            }
        }
    }
    Image2D { height: h, width: w, channels: c, data }
}

pub fn save_image(img: &Image2D, path: &Path) -> CliResult<()> {
    let bytes: Vec<u8> = img.data.iter().map(|&v| to_u8(v)).collect();
    let (w, h) = (img.width as u32, img.height as u32);
    let res = match img.channels {
        1 => GrayImage::from_raw(w, h, bytes).expect("sized").save(path),
        3 => RgbImage::from_raw(w, h, bytes).expect("sized").save(path),
        c => return Err(CliError::input(format!("cannot write a {c}-channel image"))),
    };
    res.map_err(|e| CliError::output(path, e))
}
