//! Batch learning from logged bandit feedback.
//!
//! Logged `(context, action, loss, propensity)` data, softmax policies,
//! counterfactual risk estimators (IPS, SNIPS, translated IPS, DR, ATENP),
//! policy training with estimated propensities (etIPS) and evaluation
//! harnesses built on supervised-to-bandit conversion.

pub mod data;
pub mod document;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod numeric;
pub mod policy;
pub mod training;

pub use error::{Error, ErrorKind, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
