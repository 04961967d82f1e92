//! Layout operations: reshape, permute, concat and sub-pixel shuffles.
//! All of them move values without arithmetic, so their backward passes are
//! the inverse moves applied to the upstream gradient.

use crate::error::{Result, TensorError};
use crate::ops::{check_axis, split_axis};
use crate::scalar::Scalar;
use crate::tape::{Backward, BackwardCtx, Tape, Var};
use crate::tensor::{numel, strides};

/// Reorders a row-major buffer so that output axis `i` is input axis `perm[i]`.
pub fn permute_data<T: Copy>(data: &[T], shape: &[usize], perm: &[usize]) -> Vec<T> {
    let rank = shape.len();
    assert_eq!(perm.len(), rank, "permutation rank");
    if rank == 0 || data.is_empty() {
        return data.to_vec();
    }
    let in_strides = strides(shape);
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let inner = out_shape[rank - 1];
    let inner_stride = src_strides[rank - 1];
    let mut out = Vec::with_capacity(data.len());
    let mut idx = vec![0usize; rank - 1];
    let mut base = 0usize;
    loop {
        if inner_stride == 1 {
            out.extend_from_slice(&data[base..base + inner]);
        } else {
            out.extend((0..inner).map(|i| data[base + i * inner_stride]));
        }
        let mut d = rank - 1;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            idx[d] += 1;
            base += src_strides[d];
            if idx[d] < out_shape[d] {
                break;
            }
            base -= src_strides[d] * out_shape[d];
            idx[d] = 0;
        }
    }
}

pub(crate) fn inverse_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn validate_perm(perm: &[usize], rank: usize) -> Result<()> {
    let mut seen = vec![false; rank];
    if perm.len() != rank {
        return Err(TensorError::shape("permute", format!("perm {perm:?} for rank {rank}")));
    }
    for &p in perm {
        if p >= rank || seen[p] {
            return Err(TensorError::shape("permute", format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `(N, C*r*r, H, W) -> (N, C, H*r, W*r)`; input channel `c*r*r + dx*r + dy`
/// lands on output channel `c` at sub-position `(dx, dy)`.
pub fn pixel_shuffle_data<T: Copy + Default>(data: &[T], shape: [usize; 4], r: usize) -> Vec<T> {
    let [n, cr, h, w] = shape;
    let c = cr / (r * r);
    let mut out = vec![T::default(); data.len()];
    let (oh, ow) = (h * r, w * r);
    for b in 0..n {
        for ch in 0..c {
            for dx in 0..r {
                for dy in 0..r {
                    let src_c = ch * r * r + dx * r + dy;
                    let src = &data[((b * cr + src_c) * h) * w..][..h * w];
                    let dst = &mut out[((b * c + ch) * oh) * ow..][..oh * ow];
                    for y in 0..h {
                        let row = &mut dst[(y * r + dx) * ow..][..ow];
                        for x in 0..w {
                            row[x * r + dy] = src[y * w + x];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Inverse of [`pixel_shuffle_data`]: `(N, C, H*r, W*r) -> (N, C*r*r, H, W)`.
pub fn pixel_unshuffle_data<T: Copy + Default>(data: &[T], shape: [usize; 4], r: usize) -> Vec<T> {
    let [n, c, oh, ow] = shape;
    let (h, w) = (oh / r, ow / r);
    let cr = c * r * r;
    let mut out = vec![T::default(); data.len()];
    for b in 0..n {
        for ch in 0..c {
            for dx in 0..r {
                for dy in 0..r {
                    let dst_c = ch * r * r + dx * r + dy;
                    let src = &data[((b * c + ch) * oh) * ow..][..oh * ow];
                    let dst = &mut out[((b * cr + dst_c) * h) * w..][..h * w];
                    for y in 0..h {
                        let row = &src[(y * r + dx) * ow..][..ow];
                        for x in 0..w {
                            dst[y * w + x] = row[x * r + dy];
                        }
                    }
                }
            }
        }
    }
    out
}

struct ReshapeRule;

impl<T: Scalar> Backward<T> for ReshapeRule {
    fn name(&self) -> &'static str {
        "reshape"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        vec![Some(ctx.grad.to_vec())]
    }
}

struct PermuteRule {
    out_shape: Vec<usize>,
    inverse: Vec<usize>,
}

impl<T: Scalar> Backward<T> for PermuteRule {
    fn name(&self) -> &'static str {
        "permute"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        vec![Some(permute_data(ctx.grad, &self.out_shape, &self.inverse))]
    }
}

struct ConcatRule {
    axis: usize,
}

impl<T: Scalar> Backward<T> for ConcatRule {
    fn name(&self) -> &'static str {
        "concat"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let (outer, total, inner) = split_axis(ctx.output_shape, self.axis);
        let mut offset = 0;
        let mut grads = Vec::with_capacity(ctx.inputs.len());
        for (shape, &need) in ctx.input_shapes.iter().zip(&ctx.needs) {
            let block = shape[self.axis] * inner;
            if need {
                let mut g = Vec::with_capacity(outer * block);
                for o in 0..outer {
                    let start = o * total * inner + offset;
                    g.extend_from_slice(&ctx.grad[start..start + block]);
                }
                grads.push(Some(g));
            } else {
                grads.push(None);
            }
            offset += block;
        }
        grads
    }
}

struct PixelShuffleRule {
    out_shape: [usize; 4],
    r: usize,
}

impl<T: Scalar> Backward<T> for PixelShuffleRule {
    fn name(&self) -> &'static str {
        "pixel_shuffle"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        vec![Some(pixel_unshuffle_data(ctx.grad, self.out_shape, self.r))]
    }
}

struct PixelUnshuffleRule {
    out_shape: [usize; 4],
    r: usize,
}

impl<T: Scalar> Backward<T> for PixelUnshuffleRule {
    fn name(&self) -> &'static str {
        "pixel_unshuffle"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        vec![Some(pixel_shuffle_data(ctx.grad, self.out_shape, self.r))]
    }
}

fn rank4(op: &'static str, shape: &[usize]) -> Result<[usize; 4]> {
    <[usize; 4]>::try_from(shape)
        .map_err(|_| TensorError::shape(op, format!("expected rank 4, got {shape:?}")))
}

impl<T: Scalar> Tape<T> {
    /// Zero-copy reshape.
    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        if numel(&shape) != numel(self.shape(x)) {
            return Err(TensorError::shape(
                "reshape",
                format!("{:?} -> {:?}", self.shape(x), shape),
            ));
        }
        let value = self.shared_value(x);
        Ok(self.push_shared(shape, value, &[x], ReshapeRule))
    }

    pub fn permute(&mut self, x: Var, perm: &[usize]) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        validate_perm(perm, shape.len())?;
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return self.reshape(x, shape);
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let out = permute_data(self.value(x), &shape, perm);
        let rule = PermuteRule { out_shape: out_shape.clone(), inverse: inverse_perm(perm) };
        Ok(self.push_op(out_shape, out, &[x], rule))
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var> {
        let first = xs
            .first()
            .ok_or_else(|| TensorError::shape("concat", "no inputs"))?;
        let base = self.shape(*first).to_vec();
        check_axis(axis, base.len())?;
        let mut total = 0;
        for &x in xs {
            let s = self.shape(x);
            let agrees = s.len() == base.len()
                && s.iter().zip(&base).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !agrees {
                return Err(TensorError::shape(
                    "concat",
                    format!("{s:?} does not match {base:?} off axis {axis}"),
                ));
            }
            total += s[axis];
        }
        let mut out_shape = base.clone();
        out_shape[axis] = total;
        let (outer, _, inner) = split_axis(&base, axis);
        let mut out = Vec::with_capacity(numel(&out_shape));
        for o in 0..outer {
            for &x in xs {
                let block = self.shape(x)[axis] * inner;
                out.extend_from_slice(&self.value(x)[o * block..(o + 1) * block]);
            }
        }
        Ok(self.push_op(out_shape, out, xs, ConcatRule { axis }))
    }

    pub fn pixel_shuffle(&mut self, x: Var, r: usize) -> Result<Var> {
        let [n, c, h, w] = rank4("pixel_shuffle", self.shape(x))?;
        if r == 0 || c % (r * r) != 0 {
            return Err(TensorError::shape(
                "pixel_shuffle",
                format!("{c} channels not divisible by r^2 = {}", r * r),
            ));
        }
        let out_shape = [n, c / (r * r), h * r, w * r];
        let out = pixel_shuffle_data(self.value(x), [n, c, h, w], r);
        Ok(self.push_op(out_shape.to_vec(), out, &[x], PixelShuffleRule { out_shape, r }))
    }

    pub fn pixel_unshuffle(&mut self, x: Var, r: usize) -> Result<Var> {
        let [n, c, h, w] = rank4("pixel_unshuffle", self.shape(x))?;
        if r == 0 || h % r != 0 || w % r != 0 {
            return Err(TensorError::shape(
                "pixel_unshuffle",
                format!("spatial {h}x{w} not divisible by {r}"),
            ));
        }
        let out_shape = [n, c * r * r, h / r, w / r];
        let out = pixel_unshuffle_data(self.value(x), [n, c, h, w], r);
        Ok(self.push_op(out_shape.to_vec(), out, &[x], PixelUnshuffleRule { out_shape, r }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;
    use proptest::prelude::*;

    #[test]
    fn permute_matches_index_formula() {
        let shape = [2, 3, 4];
        let data: Vec<u32> = (0..24).collect();
        let out = permute_data(&data, &shape, &[2, 0, 1]);
        // out[k][i][j] = in[i][j][k]
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(out[(k * 2 + i) * 3 + j], data[(i * 3 + j) * 4 + k]);
                }
            }
        }
    }

    #[test]
    fn shuffle_of_four_channels() {
        let out = pixel_shuffle_data(&[1, 2, 3, 4], [1, 4, 1, 1], 2);
        assert_eq!(out, vec![1, 2, 3, 4]);
        // two pixels wide: channel blocks interleave per pixel
        let out = pixel_shuffle_data(&[1, 5, 2, 6, 3, 7, 4, 8], [1, 4, 1, 2], 2);
        assert_eq!(out, vec![1, 2, 5, 6, 3, 4, 7, 8]);
    }

    #[test]
    fn shuffle_rejects_indivisible_channels() {
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(vec![1, 3, 2, 2], vec![0.0; 12]).unwrap();
        assert!(tape.pixel_shuffle(x, 2).is_err());
    }

    #[test]
    fn concat_two_units_and_split_gradient() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::new(vec![1], vec![1.0]).unwrap().with_requires_grad(true));
        let b = tape.leaf(Tensor::new(vec![1], vec![2.0]).unwrap().with_requires_grad(true));
        let c = tape.concat(&[a, b], 0).unwrap();
        assert_eq!(tape.value(c), &[1.0, 2.0]);
        let w = tape.constant(vec![2], vec![3.0, 5.0]).unwrap();
        let p = tape.mul(c, w).unwrap();
        let s = tape.sum(p);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(a).unwrap(), &[3.0]);
        assert_eq!(g.get(b).unwrap(), &[5.0]);
    }

    #[test]
    fn concat_axis_errors() {
        let mut tape = Tape::<f32>::new();
        let a = tape.constant(vec![2, 2], vec![0.0; 4]).unwrap();
        let b = tape.constant(vec![3, 3], vec![0.0; 9]).unwrap();
        assert!(matches!(tape.concat(&[a, a], 2), Err(TensorError::Axis { .. })));
        assert!(tape.concat(&[a, b], 0).is_err());
    }

    #[test]
    fn concat_middle_axis_layout() {
        let mut tape = Tape::<f32>::new();
        let a = tape.constant(vec![2, 1, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = tape.constant(vec![2, 2, 2], vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = tape.concat(&[a, b], 1).unwrap();
        assert_eq!(tape.shape(c), &[2, 3, 2]);
        assert_eq!(
            tape.value(c),
            &[1.0, 2.0, 5.0, 6.0, 7.0, 8.0, 3.0, 4.0, 9.0, 10.0, 11.0, 12.0]
        );
    }

    proptest! {
        #[test]
        fn shuffle_roundtrip_preserves_values(
            n in 1usize..3, c in 1usize..3, r in 1usize..4, h in 1usize..4, w in 1usize..4,
        ) {
            let shape = [n, c * r * r, h, w];
            let data: Vec<i64> = (0..numel(&shape) as i64).collect();
            let shuffled = pixel_shuffle_data(&data, shape, r);
            let mut sorted = shuffled.clone();
            sorted.sort_unstable();
            prop_assert_eq!(&sorted, &data);
            let back = pixel_unshuffle_data(&shuffled, [n, c, h * r, w * r], r);
            prop_assert_eq!(back, data);
        }

        #[test]
        fn permute_then_inverse_is_identity(
            dims in proptest::collection::vec(1usize..4, 1..5),
            seed in any::<u64>(),
        ) {
            let rank = dims.len();
            let mut perm: Vec<usize> = (0..rank).collect();
            // Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..rank).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let data: Vec<usize> = (0..numel(&dims)).collect();
            let out = permute_data(&data, &dims, &perm);
            let out_shape: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
            let back = permute_data(&out, &out_shape, &inverse_perm(&perm));
            prop_assert_eq!(back, data);
        }
    }
}
