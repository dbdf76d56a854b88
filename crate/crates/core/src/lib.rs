//! Simulation and analysis of a heralded dual-rail photonic entanglement
//! experiment: pair sources, storage, homodyne tomography and entanglement
//! measures on a truncated two-mode Fock space.

// negated comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channels;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod seeds;
pub mod source;
pub mod special;
pub mod tomography;

pub use error::{Error, Result};
