//! Central finite-difference verification of reverse-mode gradients.

use crate::error::Result;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Denominator floor for relative errors, so that gradients that are zero
/// on both sides do not divide by zero.
pub const REL_ERR_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn record(&mut self, analytic: f64, numeric: f64) {
        let abs = (analytic - numeric).abs();
        let rel = abs / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
        self.max_abs_err = self.max_abs_err.max(abs);
        self.max_rel_err = self.max_rel_err.max(rel);
        self.checked += 1;
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        self.max_abs_err = self.max_abs_err.max(other.max_abs_err);
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self.checked += other.checked;
    }
}

/// `(f(x + eps e_i) - f(x - eps e_i)) / 2 eps` for each `i` in `indices`.
pub fn central_differences<F>(mut f: F, x: &[f64], eps: f64, indices: &[usize]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    indices
        .iter()
        .map(|&i| {
            probe[i] = x[i] + eps;
            let plus = f(&probe)?;
            probe[i] = x[i] - eps;
            let minus = f(&probe)?;
            probe[i] = x[i];
            Ok((plus - minus) / (2.0 * eps))
        })
        .collect()
}

fn eval_scalar<F>(f: &F, x: &Tensor<f64>, data: &[f64]) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let v = tape.leaf(Tensor::new(x.shape().to_vec(), data.to_vec())?);
    let y = f(&mut tape, v)?;
    Ok(tape.value(y)[0])
}

/// Compares the reverse-mode gradient of scalar `f` at `x` against central
/// differences over every element of `x`.
pub fn grad_check<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    let indices: Vec<usize> = (0..x.len()).collect();
    grad_check_at(f, x, eps, &indices)
}

/// Like [`grad_check`], restricted to the given element indices.
pub fn grad_check_at<F>(f: F, x: &Tensor<f64>, eps: f64, indices: &[usize]) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let v = tape.leaf(x.clone().with_requires_grad(true));
    let y = f(&mut tape, v)?;
    let grads = tape.backward(y)?;
    let analytic = grads.get(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; x.len()]);
    let numeric = central_differences(|d| eval_scalar(&f, x, d), x.data(), eps, indices)?;
    let mut report = GradCheckReport::default();
    for (&i, n) in indices.iter().zip(numeric) {
        report.record(analytic[i], n);
    }
    Ok(report)
}
