//! Define-by-run computation record.
//!
//! Every operation appends a node holding its output value and, when any of
//! its inputs requires a gradient, a boxed [`Backward`] rule. Calling
//! [`Tape::backward`] walks the nodes in reverse insertion order, which is a
//! valid reverse topological order because inputs always precede outputs.

use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tensor::{numel, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Everything a backward rule may read.
pub struct BackwardCtx<'a, T> {
    pub inputs: Vec<&'a [T]>,
    pub input_shapes: Vec<&'a [usize]>,
    pub output: &'a [T],
    pub output_shape: &'a [usize],
    pub grad: &'a [T],
    /// `needs[i]` is false when input `i` does not require a gradient; rules
    /// may skip that computation and return `None`.
    pub needs: Vec<bool>,
}

/// Vector-Jacobian product of one recorded operation.
pub trait Backward<T: Scalar> {
    fn name(&self) -> &'static str;

    /// Returns one entry per input, each either `None` or a buffer with the
    /// input's element count.
    fn backward(&self, ctx: &BackwardCtx<'_, T>) -> Vec<Option<Vec<T>>>;
}

struct Node<T: Scalar> {
    shape: Vec<usize>,
    value: Option<Rc<Vec<T>>>,
    inputs: Vec<Var>,
    rule: Option<Box<dyn Backward<T>>>,
    requires_grad: bool,
}

pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    recording: bool,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), recording: true }
    }

    /// A tape that never records backward rules. Intermediate values can be
    /// released with [`Tape::free`] to bound peak memory.
    pub fn inference() -> Self {
        Self { nodes: Vec::new(), recording: false }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a leaf. Its gradient is retained if `tensor.requires_grad()`.
    pub fn leaf(&mut self, tensor: Tensor<T>) -> Var {
        let requires_grad = self.recording && tensor.requires_grad();
        let shape = tensor.shape().to_vec();
        let data = tensor.into_data();
        self.push_node(shape, Rc::new(data), Vec::new(), None, requires_grad)
    }

    /// Records a leaf that never requires a gradient.
    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<T>) -> Result<Var> {
        if numel(&shape) != data.len() {
            return Err(TensorError::shape(
                "constant",
                format!("shape {:?} vs {} elements", shape, data.len()),
            ));
        }
        Ok(self.push_node(shape, Rc::new(data), Vec::new(), None, false))
    }

    /// Records the output of an operation. Downstream crates use this to add
    /// custom differentiable operators.
    pub fn push_op<B: Backward<T> + 'static>(
        &mut self,
        shape: Vec<usize>,
        value: Vec<T>,
        inputs: &[Var],
        rule: B,
    ) -> Var {
        debug_assert_eq!(numel(&shape), value.len(), "{} output size", rule.name());
        self.push_shared(shape, Rc::new(value), inputs, rule)
    }

    pub(crate) fn push_shared<B: Backward<T> + 'static>(
        &mut self,
        shape: Vec<usize>,
        value: Rc<Vec<T>>,
        inputs: &[Var],
        rule: B,
    ) -> Var {
        let requires_grad =
            self.recording && inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let rule: Option<Box<dyn Backward<T>>> =
            if requires_grad { Some(Box::new(rule)) } else { None };
        let inputs = if requires_grad { inputs.to_vec() } else { Vec::new() };
        self.push_node(shape, value, inputs, rule, requires_grad)
    }

    fn push_node(
        &mut self,
        shape: Vec<usize>,
        value: Rc<Vec<T>>,
        inputs: Vec<Var>,
        rule: Option<Box<dyn Backward<T>>>,
        requires_grad: bool,
    ) -> Var {
        self.nodes.push(Node { shape, value: Some(value), inputs, rule, requires_grad });
        Var(self.nodes.len() - 1)
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Value of `v`.
    ///
    /// # Panics
    /// If `v` was released with [`Tape::free`].
    pub fn value(&self, v: Var) -> &[T] {
        self.nodes[v.0]
            .value
            .as_deref()
            .unwrap_or_else(|| panic!("value of node {} was freed", v.0))
    }

    pub(crate) fn shared_value(&self, v: Var) -> Rc<Vec<T>> {
        self.nodes[v.0].value.clone().unwrap_or_else(|| panic!("value of node {} was freed", v.0))
    }

    pub fn to_tensor(&self, v: Var) -> Tensor<T> {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("node shape is consistent")
    }

    /// Drops the stored value of `v`. Only allowed on non-recording tapes,
    /// where no backward rule can need it later.
    pub fn free(&mut self, v: Var) {
        if !self.recording {
            self.nodes[v.0].value = None;
        }
    }

    /// Reverse pass from a scalar `loss`. Only leaf gradients are retained.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if !self.recording {
            return Err(TensorError::NotRecording);
        }
        let node = &self.nodes[loss.0];
        if numel(&node.shape) != 1 {
            return Err(TensorError::NonScalarLoss(node.shape.clone()));
        }
        let mut grads: Vec<Option<Vec<T>>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        if node.requires_grad {
            grads[loss.0] = Some(vec![T::one()]);
        }
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            let Some(rule) = &node.rule else { continue };
            let Some(g) = grads[i].take() else { continue };
            let ctx = BackwardCtx {
                inputs: node.inputs.iter().map(|v| self.value(*v)).collect(),
                input_shapes: node.inputs.iter().map(|v| self.shape(*v)).collect(),
                output: self.value(Var(i)),
                output_shape: &node.shape,
                grad: &g,
                needs: node.inputs.iter().map(|v| self.nodes[v.0].requires_grad).collect(),
            };
            let input_grads = rule.backward(&ctx);
            debug_assert_eq!(input_grads.len(), node.inputs.len(), "{}", rule.name());
            for (v, ig) in node.inputs.iter().zip(input_grads) {
                let Some(ig) = ig else { continue };
                if !self.nodes[v.0].requires_grad {
                    continue;
                }
                debug_assert_eq!(ig.len(), self.value(*v).len(), "{} input grad", rule.name());
                match &mut grads[v.0] {
                    Some(acc) => acc.iter_mut().zip(&ig).for_each(|(a, &b)| *a += b),
                    slot @ None => *slot = Some(ig),
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Leaf gradients produced by [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}
