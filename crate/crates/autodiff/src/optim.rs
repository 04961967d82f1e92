use crate::error::{Result, TensorError};
use crate::params::ParamStore;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moments, kept in the parameter store's iteration order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<Vec<T>>,
    pub second: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamStore<T>, config: AdamConfig) -> Self {
        let zeros = || params.iter().map(|(_, t)| vec![T::zero(); t.len()]).collect();
        Self { config, step: 0, first: zeros(), second: zeros() }
    }

    fn check_shapes(&self, params: &ParamStore<T>) -> Result<()> {
        if self.first.len() != params.len() || self.second.len() != params.len() {
            return Err(TensorError::shape(
                "adam",
                format!("state tracks {} tensors, store has {}", self.first.len(), params.len()),
            ));
        }
        for (((name, t), m), v) in params.iter().zip(&self.first).zip(&self.second) {
            if m.len() != t.len() || v.len() != t.len() {
                return Err(TensorError::shape("adam", format!("moment size mismatch for `{name}`")));
            }
        }
        Ok(())
    }
}

/// One bias-corrected Adam update; gradients are cleared afterwards.
pub fn adam_step<T: Scalar>(params: &mut ParamStore<T>, state: &mut AdamState<T>) -> Result<()> {
    state.check_shapes(params)?;
    if let Some((name, _)) = params.iter().find(|(_, t)| t.grad().is_none()) {
        return Err(TensorError::MissingGrad(name.to_string()));
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let (b1, b2) = (T::from_f64_lossy(beta1), T::from_f64_lossy(beta2));
    let (one_b1, one_b2) = (T::from_f64_lossy(1.0 - beta1), T::from_f64_lossy(1.0 - beta2));
    let step_size = T::from_f64_lossy(lr / bc1);
    let inv_bc2_sqrt = T::from_f64_lossy(1.0 / bc2.sqrt());
    let eps = T::from_f64_lossy(eps);
    for (((_, p), m), v) in params.iter_mut().zip(&mut state.first).zip(&mut state.second) {
        let g = p.grad().expect("checked above").to_vec();
        for (((w, gi), mi), vi) in p.data_mut().iter_mut().zip(&g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = b1 * *mi + one_b1 * *gi;
            *vi = b2 * *vi + one_b2 * *gi * *gi;
            let denom = vi.sqrt() * inv_bc2_sqrt + eps;
            *w -= step_size * *mi / denom;
        }
        p.clear_grad();
    }
    Ok(())
}
