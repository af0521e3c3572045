//! Decision-wedge probabilities `P[ŝ = S(ℓ) | s = S(0)]`.
//!
//! The wedge of symbol `ℓ` spans `((2ℓ−1)π/D, (2ℓ+1)π/D)`. The radial
//! integral of each density is done in closed form and the angle adaptively.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::quad::integrate;
use super::special::{erfcx, phi};
use super::AnalysisError;

const REL_TOL: f64 = 1e-10;
const ABS_TOL: f64 = 1e-15;

/// `∫_0^∞ r p(r cosθ, r sinθ) dr` for independent `N(m, vx)` and `N(0, vy)`
/// components.
pub fn radial_gaussian(theta: f64, m: f64, vx: f64, vy: f64) -> f64 {
    let (s, c) = libm::sincos(theta);
    let a = c * c / vx + s * s / vy;
    let b = m * c / vx;
    let cc = m * m / vx;
    let sa = libm::sqrt(a);
    let t = b / sa;
    let term1 = libm::exp(-0.5 * cc) / a;
    let term2 = if t >= 0.0 {
        // exp(-(C - B²/A)/2) = exp(-m² s²/(2 vx vy A))
        let e = m * m * s * s / (vx * vy * a);
        libm::exp(-0.5 * e) * (b / a) * libm::sqrt(2.0 * PI / a) * phi(t)
    } else {
        libm::exp(-0.5 * cc) * (b / a) * libm::sqrt(2.0 * PI / a) * 0.5 * erfcx(-t / core::f64::consts::SQRT_2)
    };
    (term1 + term2) / (2.0 * PI * libm::sqrt(vx * vy))
}

/// Angular density of `(√P g + ñ)/(√P g + n)` with `g ~ CN(0, σ_g²)` and
/// independent `n, ñ ~ CN(0, N0)`, integrated over the radius.
///
/// Both parts share the variance `Pσ_g² + N0` and correlation
/// `ρ = Pσ_g²/(Pσ_g² + N0)`, so the ratio has density
/// `(1−ρ²)/(π(1 + r² − 2ρ r cosθ)²)`. Small differences are formed directly
/// to keep precision when `N0` is tiny.
pub fn radial_ratio(theta: f64, power: f64, sigma_g2: f64, noise: f64) -> f64 {
    let s2 = power * sigma_g2 + noise;
    let rho = power * sigma_g2 / s2;
    let one_minus_rho = noise / s2;
    let one_minus_rho2 = one_minus_rho * (1.0 + rho);
    let half = libm::sin(0.5 * theta);
    let beta = rho * libm::cos(theta);
    // 1 − β = (1 − ρ) + ρ(1 − cosθ)
    let one_minus_beta = one_minus_rho + 2.0 * rho * half * half;
    let q = one_minus_beta * (1.0 + beta);
    let sq = libm::sqrt(q);
    let x = beta / sq;
    // π/2 + atan(x) without cancellation for large negative x
    let angle = if x < 0.0 {
        libm::atan(-1.0 / x)
    } else {
        0.5 * PI + libm::atan(x)
    };
    let integral = 0.5 + beta * (beta / (2.0 * q) + angle / (2.0 * q * sq));
    one_minus_rho2 / PI * integral
}

fn wedges(order: usize, mut density: impl FnMut(f64) -> f64) -> Result<Vec<f64>, AnalysisError> {
    let d = order as f64;
    let mut p = Vec::with_capacity(order);
    for l in 0..order {
        let lo = (2.0 * l as f64 - 1.0) * PI / d;
        let hi = (2.0 * l as f64 + 1.0) * PI / d;
        let r = integrate(&mut density, lo, hi, REL_TOL, ABS_TOL).map_err(|e| {
            AnalysisError::Numerics {
                achieved: e.achieved,
                target: e.target,
            }
        })?;
        p.push(r.value);
    }
    check_probabilities(&p)?;
    Ok(p)
}

pub(crate) fn check_probabilities(p: &[f64]) -> Result<(), AnalysisError> {
    let sum: f64 = p.iter().sum();
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if !sum.is_finite() || (sum - 1.0).abs() > 1e-8 || min < -1e-12 {
        return Err(AnalysisError::Numerics {
            achieved: (sum - 1.0).abs(),
            target: 1e-8,
        });
    }
    Ok(())
}

/// Wedge probabilities of `x + j y` with `x ~ N(mean, var_re)`,
/// `y ~ N(0, var_im)`.
pub fn gaussian_wedge_probabilities(
    mean: f64,
    var_re: f64,
    var_im: f64,
    order: usize,
) -> Result<Vec<f64>, AnalysisError> {
    if !(var_re > 0.0 && var_im > 0.0) || !mean.is_finite() {
        return Err(AnalysisError::InvalidInput("wedge variances must be positive and finite"));
    }
    wedges(order, |t| radial_gaussian(t, mean, var_re, var_im))
}

/// Wedge probabilities of the one-tap equalized RIS observation.
pub fn ratio_wedge_probabilities(
    power: f64,
    sigma_g2: f64,
    noise: f64,
    order: usize,
) -> Result<Vec<f64>, AnalysisError> {
    if !(power > 0.0 && sigma_g2 > 0.0 && noise > 0.0) {
        return Err(AnalysisError::InvalidInput("ratio density needs positive parameters"));
    }
    wedges(order, |t| radial_ratio(t, power, sigma_g2, noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::quad::integrate as quad;
    use crate::analysis::special::q;

    fn numeric_radial(f: impl Fn(f64) -> f64, rmax: f64) -> f64 {
        quad(f, 0.0, rmax, 1e-12, 0.0).unwrap().value
    }

    #[test]
    fn gaussian_radial_matches_numeric_integration() {
        for &(th, m, vx, vy) in &[(0.3, 2.0, 1.0, 0.5), (2.5, 1.0, 0.3, 2.0), (-1.2, 0.0, 1.0, 1.0), (3.0, 4.0, 0.2, 0.2)] {
            let pdf = |r: f64| {
                let x = r * libm::cos(th);
                let y = r * libm::sin(th);
                r * libm::exp(-0.5 * ((x - m) * (x - m) / vx + y * y / vy))
                    / (2.0 * PI * libm::sqrt(vx * vy))
            };
            let want = numeric_radial(pdf, m.abs() + 40.0);
            let got = radial_gaussian(th, m, vx, vy);
            assert!((got - want).abs() <= 1e-10 * want.max(1e-300), "{got} {want}");
        }
    }

    #[test]
    fn ratio_radial_matches_numeric_integration() {
        let (p, sg2, n0) = (2.0, 0.7, 0.4);
        let s2 = p * sg2 + n0;
        let rho = p * sg2 / s2;
        for &th in &[0.0, 0.4, 1.7, 3.1] {
            // density of w = u/v for correlated unit-variance-normalized circular Gaussians
            let pdf = |r: f64| {
                let c = libm::cos(th);
                let den = 1.0 + r * r - 2.0 * rho * r * c;
                r * (1.0 - rho * rho) / (PI * den * den)
            };
            let want = quad(pdf, 0.0, 1e3, 1e-12, 0.0).unwrap().value
                + quad(pdf, 1e3, 1e7, 1e-12, 0.0).unwrap().value;
            let got = radial_ratio(th, p, sg2, n0);
            assert!((got - want).abs() < 1e-6 * want, "{got} {want}");
        }
    }

    #[test]
    fn vanishing_noise_concentrates_on_symbol_zero() {
        let p = gaussian_wedge_probabilities(1e3, 1.0, 1.0, 8).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        let p = ratio_wedge_probabilities(1e6, 1.0, 1e-6, 16).unwrap();
        assert!(p[0] > 1.0 - 1e-5);
    }

    #[test]
    fn isotropic_zero_mean_is_uniform() {
        for d in [2, 4, 8, 16, 32] {
            let p = gaussian_wedge_probabilities(0.0, 1.3, 1.3, d).unwrap();
            assert!(p.iter().all(|x| (x - 1.0 / d as f64).abs() < 1e-12));
        }
    }

    #[test]
    fn binary_case_is_a_gaussian_tail() {
        let (m, vx) = (0.8, 0.5);
        let p = gaussian_wedge_probabilities(m, vx, 2.0, 2).unwrap();
        assert!((p[1] - q(m / libm::sqrt(vx))).abs() < 1e-8);
    }

    #[test]
    fn ratio_probabilities_are_reflection_symmetric() {
        let p = ratio_wedge_probabilities(1.0, 1.0, 0.5, 16).unwrap();
        for l in 1..16 {
            assert!((p[l] - p[16 - l]).abs() < 1e-10);
        }
    }
}
