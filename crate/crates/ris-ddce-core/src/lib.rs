//! Numerical core for uplink channel estimation with a hybrid RIS, whose
//! elements can both reflect and sense the impinging signal.
//!
//! Everything here is `no_std` + `alloc`: complex linear algebra, the channel
//! and signal model, PSK detection, the pilot-directed and decision-directed
//! estimators, RIS phase configuration, and the BER / spectral-efficiency
//! analysis.
#![cfg_attr(not(feature = "std"), no_std)]
// NaN-rejecting guards are written as negated comparisons on purpose, and
// matrix kernels index several arrays with one loop variable.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod constellation;
pub mod dd;
pub mod estimate;
pub mod linalg;
pub mod model;
pub mod pd;
pub mod phase;

pub use linalg::{CMatrix, CVector, LinalgError, SeededStream, C64};
