mod activation;
pub mod conv;
mod elementwise;
mod loss;
pub mod shape;

pub use shape::{permute_data, pixel_shuffle_data, pixel_unshuffle_data};

use crate::error::{Result, TensorError};

pub(crate) fn check_axis(axis: usize, rank: usize) -> Result<()> {
    if axis >= rank {
        return Err(TensorError::Axis { axis, rank });
    }
    Ok(())
}

/// `(outer, axis_len, inner)` split of `shape` around `axis`.
pub(crate) fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}
