//! Model comparison from three angles: static representational similarity
//! (linear CKA, orthogonal Procrustes), functional similarity (linear mode
//! connectivity, predictive Jensen-Shannon divergence) and sparsity
//! similarity (global magnitude pruning sweeps).
//!
//! The [`toymodel`] module provides seeded ReLU MLPs so every view can be
//! exercised end to end without external models; activation and prediction
//! dumps from other frameworks enter through [`tensorio`].

pub mod error;
pub mod cli;
pub mod fsutil;
pub mod metrics;
pub mod plot;
pub mod tensorio;
pub mod pruning;
pub mod toymodel;
pub mod triangle;

pub use error::{Error, Result};
