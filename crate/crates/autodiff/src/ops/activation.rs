use crate::error::{Result, TensorError};
use crate::ops::{check_axis, split_axis};
use crate::scalar::Scalar;
use crate::tape::{Backward, BackwardCtx, Tape, Var};

/// PReLU with one learnable slope per channel (axis 1).
struct PreluRule {
    channels: usize,
    inner: usize,
}

impl<T: Scalar> Backward<T> for PreluRule {
    fn name(&self) -> &'static str {
        "prelu"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let (x, a, g) = (ctx.inputs[0], ctx.inputs[1], ctx.grad);
        let dx = ctx.needs[0].then(|| {
            x.iter()
                .zip(g)
                .enumerate()
                .map(|(i, (&xv, &gv))| {
                    if xv >= T::zero() {
                        gv
                    } else {
                        gv * a[(i / self.inner) % self.channels]
                    }
                })
                .collect()
        });
        let da = ctx.needs[1].then(|| {
            let mut da = vec![T::zero(); self.channels];
            for (i, (&xv, &gv)) in x.iter().zip(g).enumerate() {
                if xv < T::zero() {
                    da[(i / self.inner) % self.channels] += gv * xv;
                }
            }
            da
        });
        vec![dx, da]
    }
}

struct SoftmaxRule {
    axis: usize,
}

impl<T: Scalar> Backward<T> for SoftmaxRule {
    fn name(&self) -> &'static str {
        "softmax"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let (outer, len, inner) = split_axis(ctx.output_shape, self.axis);
        let (y, g) = (ctx.output, ctx.grad);
        let mut dx = vec![T::zero(); y.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                let mut dot = T::zero();
                for k in 0..len {
                    dot += g[base + k * inner] * y[base + k * inner];
                }
                for k in 0..len {
                    let at = base + k * inner;
                    dx[at] = y[at] * (g[at] - dot);
                }
            }
        }
        vec![Some(dx)]
    }
}

impl<T: Scalar> Tape<T> {
    /// `y = x` for `x >= 0`, `a[c] * x` otherwise, with `c` the index on axis 1.
    pub fn prelu(&mut self, x: Var, slope: Var) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if shape.len() < 2 {
            return Err(TensorError::shape("prelu", format!("input rank < 2: {shape:?}")));
        }
        let channels = shape[1];
        if self.shape(slope) != [channels] {
            return Err(TensorError::shape(
                "prelu",
                format!("slope shape {:?} for {} channels", self.shape(slope), channels),
            ));
        }
        let inner: usize = shape[2..].iter().product();
        let a = self.value(slope);
        let out = self
            .value(x)
            .iter()
            .enumerate()
            .map(|(i, &v)| if v >= T::zero() { v } else { v * a[(i / inner) % channels] })
            .collect();
        Ok(self.push_op(shape, out, &[x, slope], PreluRule { channels, inner }))
    }

    /// Numerically stable softmax along `axis`.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        check_axis(axis, shape.len())?;
        let (outer, len, inner) = split_axis(&shape, axis);
        let xv = self.value(x);
        let mut out = vec![T::zero(); xv.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                let mut max = T::neg_infinity();
                for k in 0..len {
                    max = max.max(xv[base + k * inner]);
                }
                let mut total = T::zero();
                for k in 0..len {
                    let e = (xv[base + k * inner] - max).exp();
                    out[base + k * inner] = e;
                    total += e;
                }
                for k in 0..len {
                    out[base + k * inner] = out[base + k * inner] / total;
                }
            }
        }
        Ok(self.push_op(shape, out, &[x], SoftmaxRule { axis }))
    }
}
