use crate::error::{LfError, Result};
use crate::image2d::Image2D;
use crate::PlaneKind;

/// Extents of a light field: angular `(u, v)`, spatial `(x, y)` and channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LfDims {
    pub u: usize,
    pub v: usize,
    pub x: usize,
    pub y: usize,
    pub c: usize,
}

impl LfDims {
    pub fn new(u: usize, v: usize, x: usize, y: usize, c: usize) -> Self {
        LfDims { u, v, x, y, c }
    }

    pub fn len(&self) -> usize {
        self.u * self.v * self.x * self.y * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn views(&self) -> usize {
        self.u * self.v
    }

    pub fn with_channels(self, c: usize) -> Self {
        LfDims { c, ..self }
    }

    pub fn with_spatial(self, x: usize, y: usize) -> Self {
        LfDims { x, y, ..self }
    }

    /// Flat offset of `(u, v, x, y, c)` in the row-major `(u,v,x,y,c)` buffer.
    #[inline]
    pub fn offset(&self, u: usize, v: usize, x: usize, y: usize, c: usize) -> usize {
        (((u * self.v + v) * self.x + x) * self.y + y) * self.c + c
    }
}

impl std::fmt::Display for LfDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{},{})", self.u, self.v, self.x, self.y, self.c)
    }
}

/// Dense 4D light field `I(u, v, x, y, c)`, row-major in that axis order.
#[derive(Clone, Debug, PartialEq)]
pub struct LightField4D {
    dims: LfDims,
    data: Vec<f32>,
}

fn check(axis: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(LfError::Range { axis, index, len });
    }
    Ok(())
}

impl LightField4D {
    pub fn new(dims: LfDims, data: Vec<f32>) -> Result<Self> {
        if [dims.u, dims.v, dims.x, dims.y, dims.c].contains(&0) {
            return Err(LfError::dims(format!("all extents must be positive, got {dims}")));
        }
        if data.len() != dims.len() {
            return Err(LfError::dims(format!("{dims} needs {} values, got {}", dims.len(), data.len())));
        }
        Ok(LightField4D { dims, data })
    }

    pub fn filled(dims: LfDims, value: f32) -> Result<Self> {
        Self::new(dims, vec![value; dims.len()])
    }

    /// Builds a light field by evaluating `f(u, v, x, y, c)` in layout order.
    pub fn from_fn(dims: LfDims, mut f: impl FnMut(usize, usize, usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.len());
        for u in 0..dims.u {
            for v in 0..dims.v {
                for x in 0..dims.x {
                    for y in 0..dims.y {
                        for c in 0..dims.c {
                            data.push(f(u, v, x, y, c));
                        }
                    }
                }
            }
        }
        Self::new(dims, data)
    }

    pub fn dims(&self) -> LfDims {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.dims.offset(u, v, x, y, c)]
    }

    /// Contiguous storage of view `(u, v)`, shaped `(X, Y, C)`.
    pub fn sai_slice(&self, u: usize, v: usize) -> Result<&[f32]> {
        check("u", u, self.dims.u)?;
        check("v", v, self.dims.v)?;
        let n = self.dims.x * self.dims.y * self.dims.c;
        let start = (u * self.dims.v + v) * n;
        Ok(&self.data[start..start + n])
    }

    pub fn view_sai(&self, u: usize, v: usize) -> Result<Image2D> {
        let d = self.dims;
        Image2D::new(d.x, d.y, d.c, self.sai_slice(u, v)?.to_vec())
    }

    pub fn view_microlens(&self, x: usize, y: usize) -> Result<Image2D> {
        let d = self.dims;
        check("x", x, d.x)?;
        check("y", y, d.y)?;
        let mut out = Vec::with_capacity(d.u * d.v * d.c);
        for u in 0..d.u {
            for v in 0..d.v {
                let o = d.offset(u, v, x, y, 0);
                out.extend_from_slice(&self.data[o..o + d.c]);
            }
        }
        Image2D::new(d.u, d.v, d.c, out)
    }

    /// EPI slice. `EpiHorizontal` fixes `(u=a, x=b)` and yields a `(V, Y)`
    /// image; `EpiVertical` fixes `(v=a, y=b)` and yields a `(U, X)` image.
    pub fn view_epi(&self, kind: PlaneKind, a: usize, b: usize) -> Result<Image2D> {
        let d = self.dims;
        match kind {
            PlaneKind::EpiHorizontal => {
                check("u", a, d.u)?;
                check("x", b, d.x)?;
                let mut out = Vec::with_capacity(d.v * d.y * d.c);
                for v in 0..d.v {
                    let o = d.offset(a, v, b, 0, 0);
                    out.extend_from_slice(&self.data[o..o + d.y * d.c]);
                }
                Image2D::new(d.v, d.y, d.c, out)
            }
            PlaneKind::EpiVertical => {
                check("v", a, d.v)?;
                check("y", b, d.y)?;
                let mut out = Vec::with_capacity(d.u * d.x * d.c);
                for u in 0..d.u {
                    for x in 0..d.x {
                        let o = d.offset(u, a, x, b, 0);
                        out.extend_from_slice(&self.data[o..o + d.c]);
                    }
                }
                Image2D::new(d.u, d.x, d.c, out)
            }
            other => Err(LfError::dims(format!("{other:?} is not an EPI kind"))),
        }
    }

    /// Single channel `c` as a one-channel light field.
    pub fn channel(&self, c: usize) -> Result<LightField4D> {
        check("c", c, self.dims.c)?;
        let data = self.data.iter().skip(c).step_by(self.dims.c).copied().collect();
        Self::new(self.dims.with_channels(1), data)
    }

    /// Interleaves single-channel light fields of identical extents.
    pub fn stack_channels(parts: &[LightField4D]) -> Result<LightField4D> {
        let first = parts.first().ok_or_else(|| LfError::dims("no channels to stack"))?;
        let d = first.dims;
        for p in parts {
            if p.dims != d.with_channels(1) {
                return Err(LfError::dims(format!("cannot stack {} with {}", p.dims, d)));
            }
        }
        let mut data = Vec::with_capacity(d.len() * parts.len());
        for i in 0..d.len() {
            data.extend(parts.iter().map(|p| p.data[i]));
        }
        Self::new(d.with_channels(parts.len()), data)
    }

    /// Sub-light-field of `nu x nv` views starting at `(u0, v0)`.
    pub fn crop_angular(&self, u0: usize, v0: usize, nu: usize, nv: usize) -> Result<LightField4D> {
        let d = self.dims;
        if nu == 0 || nv == 0 || u0 + nu > d.u || v0 + nv > d.v {
            return Err(LfError::dims(format!("angular crop {u0}+{nu} x {v0}+{nv} exceeds {}x{}", d.u, d.v)));
        }
        let view = d.x * d.y * d.c;
        let mut data = Vec::with_capacity(nu * nv * view);
        for u in u0..u0 + nu {
            let start = (u * d.v + v0) * view;
            data.extend_from_slice(&self.data[start..start + nv * view]);
        }
        Self::new(LfDims { u: nu, v: nv, ..d }, data)
    }

    /// Central `n x n` views; for even surplus the extra view is dropped at the end.
    pub fn crop_angular_center(&self, n: usize) -> Result<LightField4D> {
        let d = self.dims;
        if d.u < n || d.v < n {
            return Err(LfError::dims(format!("angular grid {}x{} smaller than {n}x{n}", d.u, d.v)));
        }
        self.crop_angular((d.u - n) / 2, (d.v - n) / 2, n, n)
    }

    /// Spatial window `[x0, x0+h) x [y0, y0+w)` of every view.
    pub fn crop_spatial(&self, x0: usize, y0: usize, h: usize, w: usize) -> Result<LightField4D> {
        let d = self.dims;
        if h == 0 || w == 0 || x0 + h > d.x || y0 + w > d.y {
            return Err(LfError::dims(format!("spatial crop {x0}+{h} x {y0}+{w} exceeds {}x{}", d.x, d.y)));
        }
        let mut data = Vec::with_capacity(d.u * d.v * h * w * d.c);
        for u in 0..d.u {
            for v in 0..d.v {
                for x in x0..x0 + h {
                    let o = d.offset(u, v, x, y0, 0);
                    data.extend_from_slice(&self.data[o..o + w * d.c]);
                }
            }
        }
        Self::new(d.with_spatial(h, w), data)
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> LightField4D {
        LightField4D { dims: self.dims, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
