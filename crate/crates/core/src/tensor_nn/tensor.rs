//! Tape nodes, the backward pass, and plain parameter storage.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use num_traits::Float;
use rand::distributions::uniform::SampleUniform;

use crate::error::{CoreError, Result};

/// Element types the engine supports.
pub trait Scalar:
    Float + SampleUniform + core::fmt::Debug + Send + Sync + 'static
{
    /// Shorthand for lossy conversion from f64 literals.
    fn c(v: f64) -> Self {
        Self::from(v).expect("constant conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Backward closure: receives the node's output gradient, returns one
/// gradient buffer per parent (empty vec = no gradient for that parent).
pub(crate) type BackwardFn<T> = Box<dyn Fn(&[T]) -> Vec<Vec<T>>>;

pub(crate) struct Node<T: Scalar> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
    pub grad: Option<Vec<T>>,
    /// Leaf flag: gradients are retained here.
    pub requires_grad: bool,
    /// True when this node or any ancestor requires gradients.
    pub needs_grad: bool,
    pub parents: Vec<Tensor<T>>,
    pub backward_fn: Option<BackwardFn<T>>,
}

/// Handle to one tape node. Cloning shares the node.
pub struct Tensor<T: Scalar> {
    pub(crate) node: Rc<RefCell<Node<T>>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Self { node: Rc::clone(&self.node) }
    }
}

impl<T: Scalar> Tensor<T> {
    fn from_node(node: Node<T>) -> Self {
        Self { node: Rc::new(RefCell::new(node)) }
    }

    /// Non-differentiable input.
    pub fn constant(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        Self::check(&shape, data.len())?;
        Ok(Self::from_node(Node {
            shape,
            data,
            grad: None,
            requires_grad: false,
            needs_grad: false,
            parents: Vec::new(),
            backward_fn: None,
        }))
    }

    /// Leaf that accumulates gradients.
    pub fn parameter(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        Self::check(&shape, data.len())?;
        Ok(Self::from_node(Node {
            shape,
            data,
            grad: None,
            requires_grad: true,
            needs_grad: true,
            parents: Vec::new(),
            backward_fn: None,
        }))
    }

    fn check(shape: &[usize], len: usize) -> Result<()> {
        let product: usize = shape.iter().product();
        if product != len {
            return Err(CoreError::ShapeMismatch(alloc::format!(
                "shape {shape:?} does not hold {len} values"
            )));
        }
        Ok(())
    }

    pub(crate) fn from_op(
        shape: Vec<usize>,
        data: Vec<T>,
        parents: Vec<Tensor<T>>,
        backward_fn: BackwardFn<T>,
    ) -> Self {
        let needs_grad = parents.iter().any(|p| p.node.borrow().needs_grad);
        Self::from_node(Node {
            shape,
            data,
            grad: None,
            requires_grad: false,
            needs_grad,
            parents: if needs_grad { parents } else { Vec::new() },
            backward_fn: if needs_grad { Some(backward_fn) } else { None },
        })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.node.borrow().shape.clone()
    }

    pub fn len(&self) -> usize {
        self.node.borrow().data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.node.borrow().data.clone()
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self) -> T {
        let node = self.node.borrow();
        debug_assert_eq!(node.data.len(), 1);
        node.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.node.borrow().requires_grad
    }

    pub fn grad_to_vec(&self) -> Option<Vec<T>> {
        self.node.borrow().grad.clone()
    }

    pub fn zero_grad(&self) {
        self.node.borrow_mut().grad = None;
    }

    /// Overwrite the stored values (optimizer update path).
    pub fn set_data(&self, data: &[T]) {
        let mut node = self.node.borrow_mut();
        debug_assert_eq!(node.data.len(), data.len());
        node.data.copy_from_slice(data);
    }

    /// Apply an in-place update to the stored values.
    pub(crate) fn update_data(&self, f: impl FnMut(usize, &mut T)) {
        let mut node = self.node.borrow_mut();
        let mut f = f;
        for (i, v) in node.data.iter_mut().enumerate() {
            f(i, v);
        }
    }

    /// Reverse-mode pass seeded with ones at this node.
    ///
    /// Gradients accumulate into every reachable leaf with
    /// `requires_grad`; call [`Tensor::zero_grad`] (or the optimizer) to
    /// clear them between steps.
    pub fn backward(&self) {
        let order = self.topo_order();
        {
            let mut node = self.node.borrow_mut();
            let len = node.data.len();
            node.grad = Some(vec![T::one(); len]);
        }
        for t in order.iter().rev() {
            let node = t.node.borrow();
            if !node.needs_grad {
                continue;
            }
            let (Some(backward_fn), Some(grad)) = (&node.backward_fn, &node.grad) else {
                continue;
            };
            let parent_grads = backward_fn(grad);
            let parents = node.parents.clone();
            drop(node);
            for (parent, pg) in parents.iter().zip(parent_grads) {
                if pg.is_empty() {
                    continue;
                }
                let mut pn = parent.node.borrow_mut();
                if !pn.needs_grad {
                    continue;
                }
                match &mut pn.grad {
                    Some(existing) => {
                        for (e, g) in existing.iter_mut().zip(&pg) {
                            *e = *e + *g;
                        }
                    }
                    None => pn.grad = Some(pg),
                }
            }
            // Interior activations do not retain gradients.
            let mut node = t.node.borrow_mut();
            if !node.requires_grad {
                node.grad = None;
            }
        }
    }

    fn topo_order(&self) -> Vec<Tensor<T>> {
        let mut order = Vec::new();
        let mut visited: BTreeSet<usize> = BTreeSet::new();
        // Iterative post-order DFS keyed by node address.
        let mut stack: Vec<(Tensor<T>, bool)> = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            let key = Rc::as_ptr(&t.node) as usize;
            if expanded {
                order.push(t);
                continue;
            }
            if !visited.insert(key) {
                continue;
            }
            let parents = t.node.borrow().parents.clone();
            stack.push((t, true));
            for p in parents {
                if !visited.contains(&(Rc::as_ptr(&p.node) as usize)) {
                    stack.push((p, false));
                }
            }
        }
        order
    }
}

/// One named parameter: plain data plus the trainable flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
    pub trainable: bool,
}

/// Named parameter tensors with per-tensor trainable flags.
///
/// This is plain storage (no tape state), so it can cross threads, be
/// checkpointed, and be transferred between pre-training and downstream
/// models. [`ParamGroup::bind`] materializes tape leaves for training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamGroup<T> {
    entries: Vec<ParamEntry<T>>,
}

impl<T: Scalar> ParamGroup<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn push(&mut self, entry: ParamEntry<T>) -> Result<()> {
        if self.entries.iter().any(|e| e.name == entry.name) {
            return Err(CoreError::Config(alloc::format!(
                "duplicate parameter name '{}'",
                entry.name
            )));
        }
        let product: usize = entry.shape.iter().product();
        if product != entry.data.len() {
            return Err(CoreError::ShapeMismatch(alloc::format!(
                "parameter '{}' shape {:?} vs {} values",
                entry.name,
                entry.shape,
                entry.data.len()
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ParamEntry<T>> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn entries(&self) -> &[ParamEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Flip the trainable flag on every parameter whose name matches.
    pub fn set_trainable(&mut self, predicate: impl Fn(&str) -> bool, trainable: bool) {
        for e in self.entries.iter_mut() {
            if predicate(&e.name) {
                e.trainable = trainable;
            }
        }
    }

    /// Materialize tape leaves; trainable entries require gradients.
    pub fn bind(&self) -> BoundParams<T> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let tensor = if e.trainable {
                    Tensor::parameter(e.shape.clone(), e.data.clone())
                } else {
                    Tensor::constant(e.shape.clone(), e.data.clone())
                }
                .expect("validated at push");
                BoundParam { name: e.name.clone(), tensor, trainable: e.trainable }
            })
            .collect();
        BoundParams { entries }
    }
}

/// A live (tape-bound) parameter.
pub struct BoundParam<T: Scalar> {
    pub name: String,
    pub tensor: Tensor<T>,
    pub trainable: bool,
}

/// Tape-bound view of a [`ParamGroup`] used during training.
pub struct BoundParams<T: Scalar> {
    pub entries: Vec<BoundParam<T>>,
}

impl<T: Scalar> BoundParams<T> {
    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| &e.tensor)
            .ok_or_else(|| CoreError::Config(alloc::format!("missing parameter '{name}'")))
    }

    /// Copy current values back into plain storage.
    pub fn export(&self) -> ParamGroup<T> {
        let mut group = ParamGroup::new();
        for e in &self.entries {
            group
                .push(ParamEntry {
                    name: e.name.clone(),
                    shape: e.tensor.shape(),
                    data: e.tensor.to_vec(),
                    trainable: e.trainable,
                })
                .expect("names unique by construction");
        }
        group
    }
}
