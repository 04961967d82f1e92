//! Light field persistence: a raw float container and 8-bit PNG layouts.
//!
//! * raw: `b"LF4D"`, `u32` version, `u32` extents `U V X Y C`, then `f32`
//!   samples in `(u,v,x,y,c)` order; everything little-endian.
//! * view directory: one `view_{u:02}_{v:02}.png` per view.
//! * grid image: a single `(U*X) x (V*Y)` PNG with view `(u, v)` tiled at
//!   block `(u, v)`; the angular extents are encoded in the file stem as a
//!   trailing `_{U}x{V}`, e.g. `scene_7x7.png`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{LfError, Result};
use crate::lightfield::{LfDims, LightField4D};

pub const RAW_MAGIC: &[u8; 4] = b"LF4D";
pub const RAW_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LfFormat {
    Raw,
    ViewDir,
    Grid,
}

impl LfFormat {
    /// `.png` means a grid image, an existing directory or an extension-less
    /// path means a view directory, anything else is raw.
    pub fn detect(path: &Path) -> LfFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => LfFormat::Grid,
            _ if path.is_dir() => LfFormat::ViewDir,
            None => LfFormat::ViewDir,
            Some(_) => LfFormat::Raw,
        }
    }
}

pub fn load_lf(path: &Path) -> Result<LightField4D> {
    match LfFormat::detect(path) {
        LfFormat::Raw => read_raw(&mut BufReader::new(File::open(path)?), path),
        LfFormat::ViewDir => load_view_dir(path),
        LfFormat::Grid => load_grid(path),
    }
}

pub fn save_lf(lf: &LightField4D, path: &Path) -> Result<()> {
    save_lf_as(lf, path, LfFormat::detect(path))
}

pub fn save_lf_as(lf: &LightField4D, path: &Path, format: LfFormat) -> Result<()> {
    match format {
        LfFormat::Raw => {
            let mut w = BufWriter::new(File::create(path)?);
            write_raw(lf, &mut w)?;
            w.flush()?;
            Ok(())
        }
        LfFormat::ViewDir => save_view_dir(lf, path),
        LfFormat::Grid => save_grid(lf, path),
    }
}

pub fn write_raw(lf: &LightField4D, w: &mut impl Write) -> Result<()> {
    let d = lf.dims();
    w.write_all(RAW_MAGIC)?;
    w.write_u32::<LittleEndian>(RAW_VERSION)?;
    for e in [d.u, d.v, d.x, d.y, d.c] {
        w.write_u32::<LittleEndian>(e as u32)?;
    }
    for &v in lf.data() {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn read_raw(r: &mut impl Read, path: &Path) -> Result<LightField4D> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RAW_MAGIC {
        return Err(LfError::format(path, "bad magic, not an LF4D file"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != RAW_VERSION {
        return Err(LfError::format(path, format!("unsupported version {version}")));
    }
    let mut e = [0usize; 5];
    for v in &mut e {
        *v = r.read_u32::<LittleEndian>()? as usize;
    }
    let dims = LfDims::new(e[0], e[1], e[2], e[3], e[4]);
    let mut data = vec![0.0f32; dims.len()];
    r.read_f32_into::<LittleEndian>(&mut data)
        .map_err(|err| LfError::format(path, format!("truncated payload for {dims}: {err}")))?;
    LightField4D::new(dims, data)
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Decodes an image into `(height, width, channels, samples in [0,1])`.
fn decode(img: DynamicImage) -> (usize, usize, usize, Vec<f32>) {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        (h, w, 3, img.to_rgb32f().into_raw())
    } else {
        (h, w, 1, img.to_luma32f().into_raw())
    }
}

fn encode(h: usize, w: usize, c: usize, samples: &[f32], path: &Path) -> Result<()> {
    let bytes: Vec<u8> = samples.iter().map(|&v| quantize(v)).collect();
    let (w, h) = (w as u32, h as u32);
    match c {
        1 => GrayImage::from_raw(w, h, bytes).expect("buffer sized").save(path)?,
        3 => RgbImage::from_raw(w, h, bytes).expect("buffer sized").save(path)?,
        _ => return Err(LfError::Channels { expected: 3, found: c }),
    }
    Ok(())
}

pub fn view_file_name(u: usize, v: usize) -> String {
    format!("view_{u:02}_{v:02}.png")
}

fn parse_view_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("view_")?.strip_suffix(".png")?;
    let (u, v) = rest.split_once('_')?;
    Some((u.parse().ok()?, v.parse().ok()?))
}

fn load_view_dir(dir: &Path) -> Result<LightField4D> {
    let mut present = Vec::new();
    for entry in fs::read_dir(dir)? {
        if let Some(uv) = entry?.file_name().to_str().and_then(parse_view_name) {
            present.push(uv);
        }
    }
    if present.is_empty() {
        return Err(LfError::format(dir, "no view_UU_VV.png files"));
    }
    let nu = present.iter().map(|p| p.0).max().unwrap_or(0) + 1;
    let nv = present.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    let mut dims: Option<LfDims> = None;
    let mut data = Vec::new();
    for u in 0..nu {
        for v in 0..nv {
            let file = dir.join(view_file_name(u, v));
            if !file.is_file() {
                return Err(LfError::format(dir, format!("missing view ({u}, {v}): {}", file.display())));
            }
            let (h, w, c, px) = decode(image::open(&file)?);
            let here = LfDims::new(nu, nv, h, w, c);
            match dims {
                None => dims = Some(here),
                Some(d) if d != here => {
                    return Err(LfError::format(
                        &file,
                        format!("view is {h}x{w}x{c}, expected {}x{}x{}", d.x, d.y, d.c),
                    ))
                }
                _ => {}
            }
            data.extend_from_slice(&px);
        }
    }
    LightField4D::new(dims.expect("at least one view"), data)
}

fn save_view_dir(lf: &LightField4D, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let d = lf.dims();
    for u in 0..d.u {
        for v in 0..d.v {
            encode(d.x, d.y, d.c, lf.sai_slice(u, v)?, &dir.join(view_file_name(u, v)))?;
        }
    }
    Ok(())
}

/// Angular extents from a `name_{U}x{V}.png` stem.
pub fn grid_angular_dims(path: &Path) -> Option<(usize, usize)> {
    let stem = path.file_stem()?.to_str()?;
    let tail = stem.rsplit('_').next()?;
    let (u, v) = tail.split_once('x')?;
    Some((u.parse().ok()?, v.parse().ok()?))
}

fn load_grid(path: &Path) -> Result<LightField4D> {
    let (nu, nv) = grid_angular_dims(path)
        .ok_or_else(|| LfError::format(path, "grid image name must end in _UxV, e.g. scene_7x7.png"))?;
    let (h, w, c, px) = decode(image::open(path)?);
    if nu == 0 || nv == 0 || h % nu != 0 || w % nv != 0 {
        return Err(LfError::format(path, format!("{h}x{w} image does not tile into {nu}x{nv} views")));
    }
    let dims = LfDims::new(nu, nv, h / nu, w / nv, c);
    LightField4D::from_fn(dims, |u, v, x, y, ch| px[((u * dims.x + x) * w + v * dims.y + y) * c + ch])
}

fn save_grid(lf: &LightField4D, path: &Path) -> Result<()> {
    let d = lf.dims();
    if grid_angular_dims(path) != Some((d.u, d.v)) {
        return Err(LfError::format(path, format!("grid image name must end in _{}x{}", d.u, d.v)));
    }
    let (h, w) = (d.u * d.x, d.v * d.y);
    let mut px = vec![0.0f32; h * w * d.c];
    for u in 0..d.u {
        for v in 0..d.v {
            for x in 0..d.x {
                let dst = ((u * d.x + x) * w + v * d.y) * d.c;
                let src = d.offset(u, v, x, 0, 0);
                px[dst..dst + d.y * d.c].copy_from_slice(&lf.data()[src..src + d.y * d.c]);
            }
        }
    }
    encode(h, w, d.c, &px, path)
}
