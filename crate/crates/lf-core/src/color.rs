//! BT.601 studio-swing YCbCr on `[0, 1]` scaled data.

use crate::error::{LfError, Result};
use crate::image2d::Image2D;
use crate::lightfield::LightField4D;

const OFFSET: [f64; 3] = [16.0 / 255.0, 128.0 / 255.0, 128.0 / 255.0];

const FORWARD: [[f64; 3]; 3] = [
    [65.481 / 255.0, 128.553 / 255.0, 24.966 / 255.0],
    [-37.797 / 255.0, -74.203 / 255.0, 112.0 / 255.0],
    [112.0 / 255.0, -93.786 / 255.0, -18.214 / 255.0],
];

fn inverse(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *cell = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

fn convert_pixels(data: &mut [f32], f: impl Fn([f64; 3]) -> [f64; 3]) {
    for px in data.chunks_exact_mut(3) {
        let out = f([px[0] as f64, px[1] as f64, px[2] as f64]);
        for (d, s) in px.iter_mut().zip(out) {
            *d = s as f32;
        }
    }
}

fn to_ycbcr(p: [f64; 3]) -> [f64; 3] {
    let mut out = OFFSET;
    for (o, row) in out.iter_mut().zip(&FORWARD) {
        *o += row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
    }
    out
}

fn to_rgb(inv: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    let q = [p[0] - OFFSET[0], p[1] - OFFSET[1], p[2] - OFFSET[2]];
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(inv) {
        *o = row[0] * q[0] + row[1] * q[1] + row[2] * q[2];
    }
    out
}

fn need_rgb(channels: usize) -> Result<()> {
    if channels != 3 {
        return Err(LfError::Channels { expected: 3, found: channels });
    }
    Ok(())
}

pub fn rgb_to_ycbcr(img: &Image2D) -> Result<Image2D> {
    need_rgb(img.channels)?;
    let mut out = img.clone();
    convert_pixels(&mut out.data, to_ycbcr);
    Ok(out)
}

pub fn ycbcr_to_rgb(img: &Image2D) -> Result<Image2D> {
    need_rgb(img.channels)?;
    let mut out = img.clone();
    let inv = inverse(&FORWARD);
    convert_pixels(&mut out.data, |p| to_rgb(&inv, p));
    Ok(out)
}

pub fn lf_rgb_to_ycbcr(lf: &LightField4D) -> Result<LightField4D> {
    need_rgb(lf.dims().c)?;
    let mut out = lf.clone();
    convert_pixels(out.data_mut(), to_ycbcr);
    Ok(out)
}

pub fn lf_ycbcr_to_rgb(lf: &LightField4D) -> Result<LightField4D> {
    need_rgb(lf.dims().c)?;
    let mut out = lf.clone();
    let inv = inverse(&FORWARD);
    convert_pixels(out.data_mut(), |p| to_rgb(&inv, p));
    Ok(out)
}

/// Luma channel: one-channel input is taken as Y already, RGB is converted.
pub fn luma(lf: &LightField4D) -> Result<LightField4D> {
    match lf.dims().c {
        1 => Ok(lf.clone()),
        3 => lf_rgb_to_ycbcr(lf)?.channel(0),
        c => Err(LfError::Channels { expected: 3, found: c }),
    }
}
