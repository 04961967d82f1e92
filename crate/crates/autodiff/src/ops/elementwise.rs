use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tape::{Backward, BackwardCtx, Tape, Var};

struct AddRule;

impl<T: Scalar> Backward<T> for AddRule {
    fn name(&self) -> &'static str {
        "add"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        ctx.needs.iter().map(|&n| n.then(|| ctx.grad.to_vec())).collect()
    }
}

struct MulRule;

impl<T: Scalar> Backward<T> for MulRule {
    fn name(&self) -> &'static str {
        "mul"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let (a, b) = (ctx.inputs[0], ctx.inputs[1]);
        vec![
            ctx.needs[0].then(|| ctx.grad.iter().zip(b).map(|(&g, &y)| g * y).collect()),
            ctx.needs[1].then(|| ctx.grad.iter().zip(a).map(|(&g, &x)| g * x).collect()),
        ]
    }
}

struct ScaleRule<T>(T);

impl<T: Scalar> Backward<T> for ScaleRule<T> {
    fn name(&self) -> &'static str {
        "scale"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        vec![Some(ctx.grad.iter().map(|&g| g * self.0).collect())]
    }
}

struct SumRule;

impl<T: Scalar> Backward<T> for SumRule {
    fn name(&self) -> &'static str {
        "sum"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        vec![Some(vec![ctx.grad[0]; ctx.inputs[0].len()])]
    }
}

impl<T: Scalar> Tape<T> {
    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::shape(
                op,
                format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| x + y).collect();
        Ok(self.push_op(self.shape(a).to_vec(), out, &[a, b], AddRule))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| x * y).collect();
        Ok(self.push_op(self.shape(a).to_vec(), out, &[a, b], MulRule))
    }

    pub fn scale(&mut self, x: Var, s: T) -> Var {
        let out = self.value(x).iter().map(|&v| v * s).collect();
        self.push_op(self.shape(x).to_vec(), out, &[x], ScaleRule(s))
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().copied().sum();
        self.push_op(vec![], vec![s], &[x], SumRule)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = T::from_usize(self.value(x).len()).unwrap_or_else(T::one);
        let s = self.sum(x);
        self.scale(s, T::one() / n)
    }
}

#[cfg(test)]
mod tests {
    use crate::{Tape, Tensor};

    #[test]
    fn add_used_twice_accumulates() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap().with_requires_grad(true));
        let y = tape.add(x, x).unwrap();
        let z = tape.mul(y, x).unwrap();
        let s = tape.sum(z);
        let g = tape.backward(s).unwrap();
        // s = sum(2x^2) -> ds/dx = 4x
        assert_eq!(g.get(x).unwrap(), &[4.0, 8.0]);
    }

    #[test]
    fn mean_gradient_is_uniform() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::new(vec![4], vec![1.0, -2.0, 3.0, 0.0]).unwrap().with_requires_grad(true));
        let m = tape.mean(x);
        assert_eq!(tape.value(m), &[0.5]);
        let g = tape.backward(m).unwrap();
        assert_eq!(g.get(x).unwrap(), &[0.25; 4]);
    }
}
