//! Learned one-shot compression with decoder side information.
//!
//! This crate trains neural compressors for the Wyner-Ziv setting (lossy
//! compression of `X` when the decoder observes a correlated `Y`), evaluates
//! them against the closed-form quadratic-Gaussian bounds, inspects the
//! learned quantizers for binning behavior, and ships a static-model range
//! coder so the marginal scheme produces real bitstreams.
//!
//! Start with the runnable examples (`cargo run --release --example ...`):
//! each one demonstrates a major capability end to end. The same
//! functionality is scriptable through the `wzlearn` binary.

pub mod autodiff;
pub mod cli;
pub mod distributions;
pub mod entropy_coding;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod matrix;
pub mod models;
pub mod sources;
pub mod training;
pub mod util;

pub use error::{Error, Result};
pub use evaluation::RdPoint;
pub use models::{PriorKind, SystemConfig, WzSystem};
pub use sources::{CorrelationDirection, SourceModel};
pub use training::{TrainConfig, TrainReport};
