use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tape::{Backward, BackwardCtx, Tape, Var};

struct L1Rule;

impl<T: Scalar> Backward<T> for L1Rule {
    fn name(&self) -> &'static str {
        "l1_loss"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>> {
        let (x, y) = (ctx.inputs[0], ctx.inputs[1]);
        let scale = ctx.grad[0] / T::from_usize(x.len()).unwrap_or_else(T::one);
        // sign(0) = 0: the subgradient at a kink is taken as zero.
        let sign = |d: T| {
            if d > T::zero() {
                scale
            } else if d < T::zero() {
                -scale
            } else {
                T::zero()
            }
        };
        let dx: Vec<T> = x.iter().zip(y).map(|(&a, &b)| sign(a - b)).collect();
        let dy = ctx.needs[1].then(|| dx.iter().map(|&v| -v).collect());
        vec![ctx.needs[0].then_some(dx), dy]
    }
}

impl<T: Scalar> Tape<T> {
    /// Mean absolute error over all elements.
    pub fn l1_loss(&mut self, x: Var, y: Var) -> Result<Var> {
        if self.shape(x) != self.shape(y) {
            return Err(TensorError::shape(
                "l1_loss",
                format!("{:?} vs {:?}", self.shape(x), self.shape(y)),
            ));
        }
        let n = self.value(x).len();
        let total: T = self.value(x).iter().zip(self.value(y)).map(|(&a, &b)| (a - b).abs()).sum();
        let loss = total / T::from_usize(n.max(1)).unwrap_or_else(T::one);
        Ok(self.push_op(vec![], vec![loss], &[x, y], L1Rule))
    }
}
