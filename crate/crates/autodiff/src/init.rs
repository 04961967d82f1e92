use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tensor::{numel, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FanMode {
    FanIn,
    FanOut,
}

/// `(fan_in, fan_out)` for a weight laid out as `(out, in, k...)`.
pub fn fans(shape: &[usize]) -> (usize, usize) {
    match shape {
        [] => (0, 0),
        [n] => (*n, *n),
        [o, i, rest @ ..] => {
            let receptive: usize = rest.iter().product();
            (i * receptive, o * receptive)
        }
    }
}

/// He-normal initialization: zero mean, variance `2 / fan`.
pub fn kaiming_init<T: Scalar>(shape: &[usize], mode: FanMode, seed: u64) -> Result<Tensor<T>> {
    if shape.is_empty() || numel(shape) == 0 {
        return Err(TensorError::EmptyShape);
    }
    let (fan_in, fan_out) = fans(shape);
    let fan = match mode {
        FanMode::FanIn => fan_in,
        FanMode::FanOut => fan_out,
    };
    let std = (2.0 / fan as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("std is finite and positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..numel(shape)).map(|_| T::from_f64_lossy(normal.sample(&mut rng))).collect();
    Tensor::new(shape.to_vec(), data)
}
