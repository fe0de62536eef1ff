//! EEG cognitive-load pipeline core.
//!
//! Everything numerical lives here: IIR preprocessing filters, Welch PSD and
//! differential-entropy feature extraction, sequence tokenization with
//! masking, a small reverse-mode tensor engine with the transformer encoder
//! built on top, two-stage training (masked-autoencoder pre-training, then
//! frozen or fine-tuned transfer to binary cognitive-load classification),
//! per-segment vote aggregation, and a k-fold evaluation harness.
//!
//! The crate is `no_std` (with `alloc`) so the numerics can be reused from
//! constrained targets; file formats, CSV ingestion and the CLI live in the
//! companion `cogload-cli` crate.

#![cfg_attr(not(test), no_std)]
// The unit-test harness links std, whose inherent f64 methods shadow the
// num_traits::Float imports that the no_std build resolves through.
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

pub mod aggregate;
pub mod data;
pub mod error;
pub mod evalharness;
pub mod features;
pub mod model;
pub mod pipeline;
pub mod seeding;
pub mod sigproc;
pub mod tensor_nn;
pub mod tokenizer;

mod fft;

pub use error::CoreError;
