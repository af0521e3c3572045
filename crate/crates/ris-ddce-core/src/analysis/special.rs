//! Gaussian tail functions.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail.
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Scaled complementary error function `exp(x²) erfc(x)` for `x ≥ 0`.
pub fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        libm::exp(x * x) * libm::erfc(x)
    } else {
        let y = 1.0 / (x * x);
        (1.0 - 0.5 * y + 0.75 * y * y - 1.875 * y * y * y) / (x * libm::sqrt(PI))
    }
}
