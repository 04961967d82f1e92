//! Per-pixel angular filtering used to upsample the input light field.
//!
//! For every output sample `(u, v, p, q)` with LR source pixel
//! `(x, y) = (p / r, q / r)`:
//!
//! ```text
//! out(u, v, p, q) = sum_{i,j < d} F(u, v, p, q, i, j) * lr(u + i - d/2, v + j - d/2, x, y)
//! ```
//!
//! The window walks the micro-lens image at fixed `(x, y)`; taps that fall
//! outside the angular grid read zero. Tap `i` runs over `u`, `j` over `v`.

use lf_autodiff::{Backward, BackwardCtx, Scalar, Tape, TensorError, Var};

/// Geometry shared by the forward and backward kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterGeom {
    pub u: usize,
    pub v: usize,
    pub x: usize,
    pub y: usize,
    pub r: usize,
    pub d: usize,
}

impl FilterGeom {
    /// Reads the geometry from a filter shape `(U, V, rX, rY, d, d)` and an
    /// input shape `(U, V, X, Y)`.
    pub fn from_shapes(filters: &[usize], lr: &[usize]) -> Result<Self, TensorError> {
        let err = |detail: String| TensorError::Shape { op: "apply_dynamic_filters", detail };
        let ([fu, fv, fx, fy, d0, d1], [u, v, x, y]) = (filters, lr) else {
            return Err(err(format!("filters {filters:?} must be rank 6 and input {lr:?} rank 4")));
        };
        if (fu, fv) != (u, v) || d0 != d1 || *d0 == 0 || *x == 0 || *y == 0 {
            return Err(err(format!("filters {filters:?} do not match input {lr:?}")));
        }
        if fx % x != 0 || fy % y != 0 || fx / x != fy / y || fx / x == 0 {
            return Err(err(format!("filter grid {fx}x{fy} is not a common multiple of {x}x{y}")));
        }
        Ok(FilterGeom { u: *u, v: *v, x: *x, y: *y, r: fx / x, d: *d0 })
    }

    fn out_len(&self) -> usize {
        self.u * self.v * self.x * self.y * self.r * self.r
    }

    /// Calls `f(out_index, filter_base, lr_index_per_tap)` for every output
    /// sample; `taps[k]` is `None` where tap `k` falls outside the grid.
    fn for_each(&self, mut f: impl FnMut(usize, usize, &[Option<usize>])) {
        let (rx, ry, dd) = (self.r * self.x, self.r * self.y, self.d * self.d);
        let half = (self.d / 2) as isize;
        let mut taps = vec![None; dd];
        for u in 0..self.u {
            for v in 0..self.v {
                for x in 0..self.x {
                    for y in 0..self.y {
                        for i in 0..self.d {
                            let su = u as isize + i as isize - half;
                            for j in 0..self.d {
                                let sv = v as isize + j as isize - half;
                                taps[i * self.d + j] = (su >= 0 && sv >= 0 && su < self.u as isize && sv < self.v as isize)
                                    .then(|| ((su as usize * self.v + sv as usize) * self.x + x) * self.y + y);
                            }
                        }
                        for dx in 0..self.r {
                            for dy in 0..self.r {
                                let p = ((u * self.v + v) * rx + x * self.r + dx) * ry + y * self.r + dy;
                                f(p, p * dd, &taps);
                            }
                        }
                    }
                }
            }
        }
    }
}

pub fn dynamic_filter_forward<T: Scalar>(filters: &[T], lr: &[T], g: &FilterGeom) -> Vec<T> {
    let mut out = vec![T::zero(); g.out_len()];
    g.for_each(|p, base, taps| {
        let mut acc = T::zero();
        for (k, t) in taps.iter().enumerate() {
            if let Some(s) = t {
                acc += filters[base + k] * lr[*s];
            }
        }
        out[p] = acc;
    });
    out
}

/// Returns `(d_filters, d_lr)` for upstream gradient `dy`.
pub fn dynamic_filter_backward<T: Scalar>(
    filters: &[T],
    lr: &[T],
    dy: &[T],
    g: &FilterGeom,
    need: [bool; 2],
) -> (Option<Vec<T>>, Option<Vec<T>>) {
    let mut df = need[0].then(|| vec![T::zero(); filters.len()]);
    let mut dl = need[1].then(|| vec![T::zero(); lr.len()]);
    g.for_each(|p, base, taps| {
        let gp = dy[p];
        for (k, t) in taps.iter().enumerate() {
            if let Some(s) = *t {
                if let Some(df) = df.as_mut() {
                    df[base + k] = gp * lr[s];
                }
                if let Some(dl) = dl.as_mut() {
                    dl[s] += gp * filters[base + k];
                }
            }
        }
    });
    (df, dl)
}

struct DynamicFilterRule {
    geom: FilterGeom,
}

impl<T: Scalar> Backward<T> for DynamicFilterRule {
    fn name(&self) -> &'static str {
        "apply_dynamic_filters"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let (df, dl) = dynamic_filter_backward(ctx.inputs[0], ctx.inputs[1], ctx.grad, &self.geom, [ctx.needs[0], ctx.needs[1]]);
        vec![df, dl]
    }
}

/// Differentiable filtering of `lr` `(U, V, X, Y)` with a filter field
/// `(U, V, rX, rY, d, d)`, producing `(U, V, rX, rY)`.
pub fn apply_dynamic_filters<T: Scalar>(tape: &mut Tape<T>, filters: Var, lr: Var) -> Result<Var, TensorError> {
    let geom = FilterGeom::from_shapes(tape.shape(filters), tape.shape(lr))?;
    let out = dynamic_filter_forward(tape.value(filters), tape.value(lr), &geom);
    let shape = vec![geom.u, geom.v, geom.r * geom.x, geom.r * geom.y];
    Ok(tape.push_op(shape, out, &[filters, lr], DynamicFilterRule { geom }))
}
