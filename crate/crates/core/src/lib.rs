//! OFDM baseband simulation and channel estimation.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod estimators;
pub mod harness;
pub mod modem;
pub mod numkernel;
pub mod seed;

pub use num_complex::Complex64;
pub use numkernel::{ComplexMatrix, ComplexVector};
