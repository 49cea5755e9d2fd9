//! Frustrated sawtooth Josephson chain: mapping onto a long-range XX spin
//! chain and exact diagonalization of the resulting model.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod cli;
pub mod error;
pub mod io;
pub mod observables;
pub mod spinchain;
pub mod stats;
pub mod svg;
pub mod sweep;
pub mod variational;

pub use error::{Error, Result};
