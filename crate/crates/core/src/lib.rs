// `!(a > b)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beables;
pub mod density;
pub mod detection;
pub mod error;
pub mod harness;
pub mod photon_wave;
pub mod quadrature;
pub mod scenarios;
pub mod spacetime;

pub use error::{Error, Result};
