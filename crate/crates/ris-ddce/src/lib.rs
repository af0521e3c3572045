//! Scenario files, Monte Carlo experiments, reports and acceptance checks
//! for hybrid-RIS channel estimation.

// NaN-rejecting guards are written as negated comparisons on purpose, and
// matrix kernels index several arrays with one loop variable.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod report;
pub mod scenarios;
pub mod sim;
pub mod validation;
