//! Minimal dense-tensor reverse-mode differentiation core.
//!
//! A dynamically built tape of reference-counted nodes carries exactly the
//! operations the encoder and heads need: 2-D matmul, bias/residual adds,
//! ReLU, sigmoid, layer norm, head split/merge, scaled dot-product
//! attention, dropout, masked-row substitution, and the L1/BCE losses.
//! Everything is generic over `f32`/`f64`; training runs in single
//! precision, gradient checks in double.

mod optim;
mod ops;
mod tensor;

pub use optim::{adam_step, step_lr, AdamState};
pub use ops::{
    add, add_bias, bce_loss, dot_const, dropout, l1_loss, layer_norm, linear, matmul,
    merge_heads, multi_head_attention, relu, reshape, scaled_dot_attention, sigmoid,
    split_heads, substitute_rows, transformer_block, AttentionParams, BlockParams,
};
pub use tensor::{BoundParam, BoundParams, ParamEntry, ParamGroup, Scalar, Tensor};
