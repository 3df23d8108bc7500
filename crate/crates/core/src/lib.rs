//! Deterministic engine and desk-scale simulator for split and federated
//! training over a simulated vehicular edge network.
//!
//! The crate is `no_std` (with `alloc`): everything here is pure computation.
//! File formats, configuration and the command-line surface live in the
//! companion `splitsim-cli` crate.
//!
//! Module map:
//! - [`tensor`], [`layer`], [`model`], [`engine`]: a minimal neural-network
//!   engine with exact forward/backward propagation, SGD, and per-layer
//!   parameter-byte and FLOP accounting.
//! - [`split`]: cut-index partitioning of a model into a vehicle-side and a
//!   server-side sub-model, plus the smashed-data exchange contract.
//! - [`data`]: synthetic dataset generation and IID / label-skewed
//!   partitioning across vehicles.
//! - [`net`]: seeded channel-rate sampling and the transmission/computation
//!   time model.
//! - [`orchestrator`]: the five training schemes (CL, FL, SL, SFL, ASFL),
//!   aggregation, rate-threshold cut selection, and per-round metrics.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod engine;
pub mod layer;
pub mod model;
pub mod net;
pub mod orchestrator;
pub mod rng;
pub mod split;
pub mod tensor;
pub mod testing;

pub use engine::{backward, forward, loss_and_grad, sgd_step, ForwardCache, RangeGradients};
pub use layer::LayerKind;
pub use model::{build_model, flops, param_bytes, resmini, ModelSpec, ParameterSet};
pub use split::{merge, smashed_bytes, split, CutIndex, SmashedBatch, SplitModel};
pub use tensor::{Batch, Tensor, TensorShape};
