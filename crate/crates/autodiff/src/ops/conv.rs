//! Stride-1 zero-padded 2D cross-correlation and its strided transpose.
//!
//! Convention: `y[n, co, i, j] = b[co] + sum_{ci, ki, kj} w[co, ci, ki, kj] *
//! x[n, ci, i + ki - ph, j + kj - pw]`, with out-of-range reads equal to zero.
//! The kernel is not flipped.
//!
//! Both directions lower to GEMM through an im2col buffer whose rows are
//! `(channel, ki, kj)` and whose columns are output positions.

use crate::error::{Result, TensorError};
use crate::scalar::{gemm, MatLayout, Scalar};
use crate::tape::{Backward, BackwardCtx, Tape, Var};

/// Geometry shared by `im2col` and `col2im`.
#[derive(Clone, Copy, Debug)]
struct Patches {
    channels: usize,
    /// Extent of the dense image the patches are read from / written to.
    height: usize,
    width: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    ph: usize,
    pw: usize,
    /// Number of patch positions along each axis.
    rows: usize,
    cols: usize,
}

impl Patches {
    fn k(&self) -> usize {
        self.channels * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.rows * self.cols
    }

    /// Source index range along one axis: for patch offset `k`, positions
    /// `o` in `[lo, hi)` read image coordinate `o*stride + k - pad` in range.
    fn valid(k: usize, pad: usize, stride: usize, extent: usize, count: usize) -> (usize, usize) {
        let lo_num = pad.saturating_sub(k);
        let lo = lo_num.div_ceil(stride);
        // o*stride + k - pad <= extent - 1  <=>  o <= (extent - 1 + pad - k) / stride
        let hi = if extent + pad > k { ((extent - 1 + pad - k) / stride + 1).min(count) } else { 0 };
        (lo.min(hi), hi)
    }

    fn im2col<T: Scalar>(&self, src: &[T], col: &mut [T]) {
        let p = self.positions();
        debug_assert_eq!(col.len(), self.k() * p);
        let img = self.height * self.width;
        for c in 0..self.channels {
            let plane = &src[c * img..(c + 1) * img];
            for ki in 0..self.kh {
                let (r_lo, r_hi) = Self::valid(ki, self.ph, self.stride, self.height, self.rows);
                for kj in 0..self.kw {
                    let (c_lo, c_hi) = Self::valid(kj, self.pw, self.stride, self.width, self.cols);
                    let row = (c * self.kh + ki) * self.kw + kj;
                    let dst = &mut col[row * p..(row + 1) * p];
                    for oi in 0..self.rows {
                        let out = &mut dst[oi * self.cols..(oi + 1) * self.cols];
                        if oi < r_lo || oi >= r_hi || c_lo >= c_hi {
                            out.fill(T::zero());
                            continue;
                        }
                        let ii = oi * self.stride + ki - self.ph;
                        let line = &plane[ii * self.width..(ii + 1) * self.width];
                        out[..c_lo].fill(T::zero());
                        out[c_hi..].fill(T::zero());
                        if self.stride == 1 {
                            let s = c_lo + kj - self.pw;
                            out[c_lo..c_hi].copy_from_slice(&line[s..s + (c_hi - c_lo)]);
                        } else {
                            for oj in c_lo..c_hi {
                                out[oj] = line[oj * self.stride + kj - self.pw];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`Patches::im2col`]: accumulates `col` into `dst`.
    fn col2im<T: Scalar>(&self, col: &[T], dst: &mut [T]) {
        let p = self.positions();
        let img = self.height * self.width;
        for c in 0..self.channels {
            let plane = &mut dst[c * img..(c + 1) * img];
            for ki in 0..self.kh {
                let (r_lo, r_hi) = Self::valid(ki, self.ph, self.stride, self.height, self.rows);
                for kj in 0..self.kw {
                    let (c_lo, c_hi) = Self::valid(kj, self.pw, self.stride, self.width, self.cols);
                    if c_lo >= c_hi {
                        continue;
                    }
                    let row = (c * self.kh + ki) * self.kw + kj;
                    let src = &col[row * p..(row + 1) * p];
                    for oi in r_lo..r_hi {
                        let ii = oi * self.stride + ki - self.ph;
                        let line = &mut plane[ii * self.width..(ii + 1) * self.width];
                        let vals = &src[oi * self.cols..(oi + 1) * self.cols];
                        for oj in c_lo..c_hi {
                            line[oj * self.stride + kj - self.pw] += vals[oj];
                        }
                    }
                }
            }
        }
    }
}

/// Geometry of one stride-1 convolution call.
#[derive(Clone, Copy, Debug)]
pub struct Conv2dGeom {
    pub n: usize,
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub ph: usize,
    pub pw: usize,
}

impl Conv2dGeom {
    pub fn out_hw(&self) -> (usize, usize) {
        (self.h + 2 * self.ph + 1 - self.kh, self.w + 2 * self.pw + 1 - self.kw)
    }

}

/// Flat channel-major arrangement used by the shifted-GEMM lowering.
///
/// Every image of one channel lives in a single row of length `m` with a
/// pixel pitch of `wp` and `rows` rows per image. Output anchor `q` reads
/// input position `q + ki*wp + kj` for tap `(ki, kj)`. Kernels of size
/// `2p+1` let neighbouring rows and images share their zero borders, which
/// matters for the many tiny images of angular foldings.
struct ShiftPlan {
    wp: usize,
    rows: usize,
    /// Flat position of pixel `(0, 0)` of image 0.
    x0: usize,
    /// Anchors computed per channel.
    span: usize,
    m: usize,
}

impl Conv2dGeom {
    fn plan(&self) -> ShiftPlan {
        if self.kh == 2 * self.ph + 1 && self.kw == 2 * self.pw + 1 {
            let (wp, rows) = (self.w + self.pw, self.h + self.ph);
            let x0 = self.ph * wp + self.pw;
            let span = self.n * rows * wp;
            ShiftPlan { wp, rows, x0, span, m: span + 2 * x0 }
        } else {
            let (wp, rows) = (self.w + 2 * self.pw, self.h + 2 * self.ph);
            let m = self.n * rows * wp;
            let span = m - ((self.kh - 1) * wp + (self.kw - 1));
            ShiftPlan { wp, rows, x0: self.ph * wp + self.pw, span, m }
        }
    }

    /// View of `w[:, :, ki, kj]` as a `(cout, cin)` matrix.
    fn tap_layout(&self) -> MatLayout {
        MatLayout {
            rows: self.cout,
            cols: self.cin,
            row_stride: self.cin * self.kh * self.kw,
            col_stride: self.kh * self.kw,
        }
    }

    /// `(N, C, H, W)` -> zero-padded flat `(C, m)`.
    fn pad_channel_major<T: Scalar>(&self, x: &[T], s: &ShiftPlan) -> Vec<T> {
        let mut xp = vec![T::zero(); self.cin * s.m];
        for n in 0..self.n {
            for c in 0..self.cin {
                let src = &x[((n * self.cin + c) * self.h) * self.w..][..self.h * self.w];
                let dst = &mut xp[c * s.m + s.x0 + n * s.rows * s.wp..];
                for i in 0..self.h {
                    dst[i * s.wp..][..self.w].copy_from_slice(&src[i * self.w..(i + 1) * self.w]);
                }
            }
        }
        xp
    }
}

/// Column tile for the shifted GEMMs; keeps the packed operand panels cache resident.
const TILE: usize = 2048;

fn chunks(span: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..span).step_by(TILE).map(move |lo| (lo, TILE.min(span - lo)))
}

fn is_pointwise(g: &Conv2dGeom) -> bool {
    g.kh == 1 && g.kw == 1 && g.ph == 0 && g.pw == 0
}

/// Forward stride-1 convolution on raw buffers.
///
/// Non-pointwise kernels use a shifted-GEMM lowering: each kernel tap is a
/// single GEMM over the whole batch (see [`ShiftPlan`]), with no im2col.
pub fn conv2d_forward<T: Scalar>(x: &[T], w: &[T], b: &[T], g: &Conv2dGeom) -> Vec<T> {
    let (oh, ow) = g.out_hw();
    let p = oh * ow;
    let mut y = vec![T::zero(); g.n * g.cout * p];
    if is_pointwise(g) {
        for n in 0..g.n {
            let xn = &x[n * g.cin * p..(n + 1) * g.cin * p];
            let yn = &mut y[n * g.cout * p..(n + 1) * g.cout * p];
            for (co, row) in yn.chunks_mut(p).enumerate() {
                row.fill(b[co]);
            }
            gemm(w, MatLayout::row_major(g.cout, g.cin), xn, MatLayout::row_major(g.cin, p), T::one(), yn, MatLayout::row_major(g.cout, p));
        }
        return y;
    }
    let s = g.plan();
    let xp = g.pad_channel_major(x, &s);
    let mut full = vec![T::zero(); g.cout * s.span];
    for (lo, len) in chunks(s.span) {
        let lb = MatLayout { rows: g.cin, cols: len, row_stride: s.m, col_stride: 1 };
        let lc = MatLayout { rows: g.cout, cols: len, row_stride: s.span, col_stride: 1 };
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let shift = lo + ki * s.wp + kj;
                gemm(&w[ki * g.kw + kj..], g.tap_layout(), &xp[shift..], lb, T::one(), &mut full[lo..], lc);
            }
        }
    }
    for n in 0..g.n {
        for co in 0..g.cout {
            let dst = &mut y[(n * g.cout + co) * p..][..p];
            let src = &full[co * s.span + n * s.rows * s.wp..];
            for i in 0..oh {
                for (d, v) in dst[i * ow..(i + 1) * ow].iter_mut().zip(&src[i * s.wp..i * s.wp + ow]) {
                    *d = *v + b[co];
                }
            }
        }
    }
    y
}

/// Backward of [`conv2d_forward`]; returns `(dx, dw, db)` for the requested parts.
#[allow(clippy::type_complexity)]
pub fn conv2d_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    dy: &[T],
    g: &Conv2dGeom,
    need: [bool; 3],
) -> (Option<Vec<T>>, Option<Vec<T>>, Option<Vec<T>>) {
    let (oh, ow) = g.out_hw();
    let p = oh * ow;
    let db = need[2].then(|| {
        let mut db = vec![T::zero(); g.cout];
        for (i, row) in dy.chunks(p).enumerate() {
            db[i % g.cout] += row.iter().copied().sum::<T>();
        }
        db
    });
    if is_pointwise(g) {
        let mut dx = need[0].then(|| vec![T::zero(); x.len()]);
        let mut dw = need[1].then(|| vec![T::zero(); w.len()]);
        for n in 0..g.n {
            let dyn_ = &dy[n * g.cout * p..(n + 1) * g.cout * p];
            if let Some(dw) = dw.as_mut() {
                let xn = &x[n * g.cin * p..(n + 1) * g.cin * p];
                gemm(dyn_, MatLayout::row_major(g.cout, p), xn, MatLayout::transposed(g.cin, p), T::one(), dw, MatLayout::row_major(g.cout, g.cin));
            }
            if let Some(dx) = dx.as_mut() {
                let dxn = &mut dx[n * g.cin * p..(n + 1) * g.cin * p];
                gemm(w, MatLayout::transposed(g.cout, g.cin), dyn_, MatLayout::row_major(g.cout, p), T::zero(), dxn, MatLayout::row_major(g.cin, p));
            }
        }
        return (dx, dw, db);
    }
    let s = g.plan();
    // Upstream gradient scattered onto the anchor grid; padding anchors stay zero.
    let mut full = vec![T::zero(); g.cout * s.span];
    for n in 0..g.n {
        for co in 0..g.cout {
            let src = &dy[(n * g.cout + co) * p..][..p];
            let dst = &mut full[co * s.span + n * s.rows * s.wp..];
            for i in 0..oh {
                dst[i * s.wp..i * s.wp + ow].copy_from_slice(&src[i * ow..(i + 1) * ow]);
            }
        }
    }
    let dw = need[1].then(|| {
        let xp = g.pad_channel_major(x, &s);
        let mut dw = vec![T::zero(); w.len()];
        for (lo, len) in chunks(s.span) {
            let la = MatLayout { rows: g.cout, cols: len, row_stride: s.span, col_stride: 1 };
            let lx = MatLayout { rows: len, cols: g.cin, row_stride: 1, col_stride: s.m };
            for ki in 0..g.kh {
                for kj in 0..g.kw {
                    let shift = lo + ki * s.wp + kj;
                    gemm(&full[lo..], la, &xp[shift..], lx, T::one(), &mut dw[ki * g.kw + kj..], g.tap_layout());
                }
            }
        }
        dw
    });
    let dx = need[0].then(|| {
        let mut dxp = vec![T::zero(); g.cin * s.m];
        let tap = g.tap_layout();
        let tap_t = MatLayout { rows: tap.cols, cols: tap.rows, row_stride: tap.col_stride, col_stride: tap.row_stride };
        for (lo, len) in chunks(s.span) {
            let la = MatLayout { rows: g.cout, cols: len, row_stride: s.span, col_stride: 1 };
            let ld = MatLayout { rows: g.cin, cols: len, row_stride: s.m, col_stride: 1 };
            for ki in 0..g.kh {
                for kj in 0..g.kw {
                    let shift = lo + ki * s.wp + kj;
                    gemm(&w[ki * g.kw + kj..], tap_t, &full[lo..], la, T::one(), &mut dxp[shift..], ld);
                }
            }
        }
        let mut dx = vec![T::zero(); x.len()];
        for n in 0..g.n {
            for c in 0..g.cin {
                let src = &dxp[c * s.m + s.x0 + n * s.rows * s.wp..];
                let dst = &mut dx[((n * g.cin + c) * g.h) * g.w..][..g.h * g.w];
                for i in 0..g.h {
                    dst[i * g.w..(i + 1) * g.w].copy_from_slice(&src[i * s.wp..][..g.w]);
                }
            }
        }
        dx
    });
    (dx, dw, db)
}

/// Geometry of a strided transposed convolution with a square kernel.
#[derive(Clone, Copy, Debug)]
pub struct ConvTransposeGeom {
    pub n: usize,
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvTransposeGeom {
    pub fn out_hw(&self) -> (usize, usize) {
        (
            (self.h - 1) * self.stride + self.k - 2 * self.pad,
            (self.w - 1) * self.stride + self.k - 2 * self.pad,
        )
    }

    /// Patches over the *output* image, one per input position.
    fn patches(&self) -> Patches {
        let (oh, ow) = self.out_hw();
        Patches {
            channels: self.cout,
            height: oh,
            width: ow,
            kh: self.k,
            kw: self.k,
            stride: self.stride,
            ph: self.pad,
            pw: self.pad,
            rows: self.h,
            cols: self.w,
        }
    }
}

/// Transposed convolution; weight layout `(cin, cout, k, k)`.
pub fn conv_transpose2d_forward<T: Scalar>(x: &[T], w: &[T], b: &[T], g: &ConvTransposeGeom) -> Vec<T> {
    let pt = g.patches();
    let (k, p) = (pt.k(), pt.positions());
    let (oh, ow) = g.out_hw();
    let out_img = g.cout * oh * ow;
    let mut y = vec![T::zero(); g.n * out_img];
    let mut col = vec![T::zero(); k * p];
    for n in 0..g.n {
        let xn = &x[n * g.cin * p..(n + 1) * g.cin * p];
        gemm(w, MatLayout::transposed(g.cin, k), xn, MatLayout::row_major(g.cin, p), T::zero(), &mut col, MatLayout::row_major(k, p));
        let yn = &mut y[n * out_img..(n + 1) * out_img];
        pt.col2im(&col, yn);
        for (co, plane) in yn.chunks_mut(oh * ow).enumerate() {
            plane.iter_mut().for_each(|v| *v += b[co]);
        }
    }
    y
}

#[allow(clippy::type_complexity)]
pub fn conv_transpose2d_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    dy: &[T],
    g: &ConvTransposeGeom,
    need: [bool; 3],
) -> (Option<Vec<T>>, Option<Vec<T>>, Option<Vec<T>>) {
    let pt = g.patches();
    let (k, p) = (pt.k(), pt.positions());
    let (oh, ow) = g.out_hw();
    let out_img = g.cout * oh * ow;
    let mut dx = need[0].then(|| vec![T::zero(); x.len()]);
    let mut dw = need[1].then(|| vec![T::zero(); w.len()]);
    let db = need[2].then(|| {
        let mut db = vec![T::zero(); g.cout];
        for (i, plane) in dy.chunks(oh * ow).enumerate() {
            db[i % g.cout] += plane.iter().copied().sum::<T>();
        }
        db
    });
    let mut col = vec![T::zero(); k * p];
    for n in 0..g.n {
        pt.im2col(&dy[n * out_img..(n + 1) * out_img], &mut col);
        if let Some(dx) = dx.as_mut() {
            let dxn = &mut dx[n * g.cin * p..(n + 1) * g.cin * p];
            gemm(w, MatLayout::row_major(g.cin, k), &col, MatLayout::row_major(k, p), T::zero(), dxn, MatLayout::row_major(g.cin, p));
        }
        if let Some(dw) = dw.as_mut() {
            let xn = &x[n * g.cin * p..(n + 1) * g.cin * p];
            gemm(xn, MatLayout::row_major(g.cin, p), &col, MatLayout::transposed(k, p), T::one(), dw, MatLayout::row_major(g.cin, k));
        }
    }
    (dx, dw, db)
}

struct Conv2dRule(Conv2dGeom);

impl<T: Scalar> Backward<T> for Conv2dRule {
    fn name(&self) -> &'static str {
        "conv2d"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let need = [ctx.needs[0], ctx.needs[1], ctx.needs[2]];
        let (dx, dw, db) = conv2d_backward(ctx.inputs[0], ctx.inputs[1], ctx.grad, &self.0, need);
        vec![dx, dw, db]
    }
}

struct ConvTransposeRule(ConvTransposeGeom);

impl<T: Scalar> Backward<T> for ConvTransposeRule {
    fn name(&self) -> &'static str {
        "conv_transpose2d"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let need = [ctx.needs[0], ctx.needs[1], ctx.needs[2]];
        let (dx, dw, db) =
            conv_transpose2d_backward(ctx.inputs[0], ctx.inputs[1], ctx.grad, &self.0, need);
        vec![dx, dw, db]
    }
}

fn dims4(op: &'static str, what: &str, shape: &[usize]) -> Result<[usize; 4]> {
    <[usize; 4]>::try_from(shape)
        .map_err(|_| TensorError::shape(op, format!("{what} must be rank 4, got {shape:?}")))
}

impl<T: Scalar> Tape<T> {
    /// `x: (N, Cin, H, W)`, `w: (Cout, Cin, kh, kw)`, `b: (Cout)`; stride 1.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, pad: (usize, usize)) -> Result<Var> {
        let [n, cin, h, wd] = dims4("conv2d", "input", self.shape(x))?;
        let [cout, wcin, kh, kw] = dims4("conv2d", "weight", self.shape(w))?;
        if wcin != cin {
            return Err(TensorError::shape("conv2d", format!("input has {cin} channels, weight expects {wcin}")));
        }
        if self.shape(b) != [cout] {
            return Err(TensorError::shape("conv2d", format!("bias shape {:?} for {cout} outputs", self.shape(b))));
        }
        if kh == 0 || kw == 0 || kh > h + 2 * pad.0 || kw > wd + 2 * pad.1 {
            return Err(TensorError::shape(
                "conv2d",
                format!("kernel {kh}x{kw} does not fit padded input {}x{}", h + 2 * pad.0, wd + 2 * pad.1),
            ));
        }
        let geom = Conv2dGeom { n, cin, cout, h, w: wd, kh, kw, ph: pad.0, pw: pad.1 };
        let (oh, ow) = geom.out_hw();
        let y = conv2d_forward(self.value(x), self.value(w), self.value(b), &geom);
        Ok(self.push_op(vec![n, cout, oh, ow], y, &[x, w, b], Conv2dRule(geom)))
    }

    /// `x: (N, Cin, H, W)`, `w: (Cin, Cout, k, k)`, `b: (Cout)`.
    /// Output extent is `(H - 1) * stride + k - 2 * pad`.
    pub fn conv_transpose2d(&mut self, x: Var, w: Var, b: Var, stride: usize, pad: usize) -> Result<Var> {
        let [n, cin, h, wd] = dims4("conv_transpose2d", "input", self.shape(x))?;
        let [wcin, cout, kh, kw] = dims4("conv_transpose2d", "weight", self.shape(w))?;
        if wcin != cin {
            return Err(TensorError::shape("conv_transpose2d", format!("input has {cin} channels, weight expects {wcin}")));
        }
        if kh != kw {
            return Err(TensorError::shape("conv_transpose2d", format!("kernel must be square, got {kh}x{kw}")));
        }
        if self.shape(b) != [cout] {
            return Err(TensorError::shape("conv_transpose2d", format!("bias shape {:?} for {cout} outputs", self.shape(b))));
        }
        if stride == 0 || h == 0 || wd == 0 || (h - 1) * stride + kh <= 2 * pad || (wd - 1) * stride + kh <= 2 * pad {
            return Err(TensorError::shape("conv_transpose2d", format!("stride {stride}, pad {pad}, kernel {kh} gives empty output")));
        }
        let geom = ConvTransposeGeom { n, cin, cout, h, w: wd, k: kh, stride, pad };
        let (oh, ow) = geom.out_hw();
        let y = conv_transpose2d_forward(self.value(x), self.value(w), self.value(b), &geom);
        Ok(self.push_op(vec![n, cout, oh, ow], y, &[x, w, b], ConvTransposeRule(geom)))
    }
}
