//! BER and spectral-efficiency analysis of the single-antenna, single-user
//! link without a direct path.
//!
//! The RIS phases follow the estimated reflected channel, so each element
//! contributes `z_i ≈ a_i â_i^* / √E|â_i|²` to the effective channel
//! `f = Σ z_i`, which is approximated as Gaussian.

mod dd2;
mod quad;
mod special;
mod wedge;

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

pub use dd2::{dd2_moments, lemma1_moments, TraceTerms, XiMoments, SYMMETRY_TOL};
pub use quad::{integrate, Integral, NotConverged};
pub use special::{erfcx, phi, q};
pub use wedge::{gaussian_wedge_probabilities, radial_gaussian, radial_ratio, ratio_wedge_probabilities};

use crate::constellation::{gray, PskOrder};
use crate::model::dbm_to_watts;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    InvalidInput(&'static str),
    /// Quadrature or probability normalization missed its tolerance.
    Numerics { achieved: f64, target: f64 },
    /// Detection probabilities are not reflection symmetric.
    SymmetryViolation { max_deviation: f64 },
    /// The Gaussian approximation produced a non-positive second moment.
    ApproximationBreakdown { quantity: &'static str, value: f64 },
    NoCrossover { lo_dbm: f64, hi_dbm: f64 },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::InvalidInput(msg) => write!(f, "invalid analysis input: {msg}"),
            AnalysisError::Numerics { achieved, target } => {
                write!(f, "numerical tolerance missed: achieved {achieved:.3e}, target {target:.3e}")
            }
            AnalysisError::SymmetryViolation { max_deviation } => {
                write!(f, "detection probabilities not symmetric (max deviation {max_deviation:.3e})")
            }
            AnalysisError::ApproximationBreakdown { quantity, value } => {
                write!(f, "Gaussian approximation breaks down: {quantity} = {value:.6e}")
            }
            AnalysisError::NoCrossover { lo_dbm, hi_dbm } => {
                write!(f, "no SE crossover between {lo_dbm} and {hi_dbm} dBm")
            }
        }
    }
}

impl core::error::Error for AnalysisError {}

/// Parameters of the analysed link. Powers are in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisInput {
    /// RIS elements `N`, including the single sensing element.
    pub elements: usize,
    pub power: f64,
    pub noise_bs: f64,
    pub noise_ris: f64,
    /// User-RIS per-element variance.
    pub sigma_g2: f64,
    /// RIS-BS per-element variance.
    pub sigma_h2: f64,
    pub order: PskOrder,
    pub coherence: usize,
}

impl AnalysisInput {
    pub fn sigma_a2(&self) -> f64 {
        self.sigma_g2 * self.sigma_h2
    }

    pub fn with_power_dbm(mut self, dbm: f64) -> Self {
        self.power = dbm_to_watts(dbm);
        self
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let positive = [self.power, self.noise_bs, self.noise_ris, self.sigma_g2, self.sigma_h2];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(AnalysisError::InvalidInput("powers and variances must be positive and finite"));
        }
        if self.elements < 2 {
            return Err(AnalysisError::InvalidInput("at least two RIS elements are required"));
        }
        if self.coherence <= self.elements {
            return Err(AnalysisError::InvalidInput("coherence time must exceed N"));
        }
        Ok(())
    }
}

/// Mean and variances of the effective channel `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChannelMoments {
    pub mean_re: f64,
    pub mean_im: f64,
    pub var_re: f64,
    pub var_im: f64,
}

/// Wedge probabilities of `√P f + n`, `n ~ CN(0, N0)`.
pub fn wedge_probabilities(
    f: &EffectiveChannelMoments,
    power: f64,
    noise: f64,
    order: PskOrder,
) -> Result<Vec<f64>, AnalysisError> {
    gaussian_wedge_probabilities(
        libm::sqrt(power) * f.mean_re,
        power * f.var_re + 0.5 * noise,
        power * f.var_im + 0.5 * noise,
        order.get(),
    )
}

/// Gray-weighted bit error rate given symbol-decision probabilities, where
/// `p[ℓ]` is the probability of deciding `ℓ` positions away from the sent
/// symbol and the data are uniform.
///
/// The bit distance at a fixed offset depends on the sent symbol once
/// `D >= 16` (and for asymmetric `p` at `D = 8`), so each offset is weighted by
/// its distance averaged over all sent symbols.
pub fn ber_from_probs(p: &[f64]) -> f64 {
    let d = p.len();
    let bits = d.trailing_zeros() as f64;
    p.iter()
        .enumerate()
        .map(|(l, &pl)| pl * mean_offset_bit_distance(l, d))
        .sum::<f64>()
        / bits
}

/// Gray bit distance between symbols `a` and `a + offset`, averaged over `a`.
pub fn mean_offset_bit_distance(offset: usize, order: usize) -> f64 {
    let total: u32 = (0..order)
        .map(|a| (gray(a) ^ gray((a + offset) % order)).count_ones())
        .sum();
    total as f64 / order as f64
}

/// Effective-channel moments of `count` i.i.d. elements with estimation
/// error variance `sigma_e2`.
pub fn pd_channel_moments(count: usize, sigma_a2: f64, sigma_e2: f64) -> EffectiveChannelMoments {
    let den = sigma_a2 + sigma_e2;
    let mu = sigma_a2 / libm::sqrt(den);
    let var_r = (6.0 * sigma_a2 * sigma_a2 + sigma_a2 * sigma_e2) / (2.0 * den);
    let var_i = sigma_a2 * sigma_e2 / (2.0 * den);
    let c = count as f64;
    EffectiveChannelMoments {
        mean_re: c * mu,
        mean_im: 0.0,
        var_re: c * var_r,
        var_im: c * var_i,
    }
}

/// Pilot-directed BER and wedge probabilities, `N` estimation slots.
pub fn ber_pd(inp: &AnalysisInput) -> Result<(f64, Vec<f64>), AnalysisError> {
    inp.validate()?;
    let n = inp.elements as f64;
    let f = pd_channel_moments(inp.elements, inp.sigma_a2(), inp.noise_bs / (inp.power * n));
    let p = wedge_probabilities(&f, inp.power, inp.noise_bs, inp.order)?;
    Ok((ber_from_probs(&p), p))
}

/// High-SNR approximation with the decision half-angle `θ = π/D`.
pub fn ber_pd_high_snr(inp: &AnalysisInput) -> Result<f64, AnalysisError> {
    inp.validate()?;
    let d = inp.order.get() as f64;
    let tan = libm::tan(PI / d);
    let n = inp.elements as f64;
    let sa2 = inp.sigma_a2();
    let p = inp.power;
    let n0 = inp.noise_bs;
    let num = PI * libm::sqrt(p) * n * libm::sqrt(sa2) * tan;
    let den = 4.0 * libm::sqrt((p * n * (1.0 - PI * PI / 16.0) * sa2 + 0.5 * n0) * tan * tan + 0.5 * n0);
    Ok(high_snr_ber(num / den, inp.order))
}

/// `2 Q(x) / log2 D`.
pub fn high_snr_ber(x: f64, order: PskOrder) -> f64 {
    2.0 * q(x) / order.bits_per_symbol() as f64
}

/// BER of one-tap detection at a single sensing element.
pub fn ber_dd1(
    power: f64,
    sigma_g2: f64,
    noise_ris: f64,
    order: PskOrder,
) -> Result<(f64, Vec<f64>), AnalysisError> {
    let p = ratio_wedge_probabilities(power, sigma_g2, noise_ris, order.get())?;
    Ok((ber_from_probs(&p), p))
}

/// BER after decision-directed estimation with detection-error moments `xi`.
pub fn ber_dd2(inp: &AnalysisInput, xi: &XiMoments) -> Result<(f64, Vec<f64>), AnalysisError> {
    let f = dd2_moments(inp, xi)?;
    let p = wedge_probabilities(&f, inp.power, inp.noise_bs, inp.order)?;
    Ok((ber_from_probs(&p), p))
}

/// `((τ_c − N)/τ_c)(1 − BER) log2 D`.
pub fn se_pd_from_ber(inp: &AnalysisInput, ber: f64) -> f64 {
    let tc = inp.coherence as f64;
    (tc - inp.elements as f64) / tc * (1.0 - ber) * inp.order.bits_per_symbol() as f64
}

/// Data slots `N−2` during estimation and `τ_c−(N−1)` afterwards.
pub fn se_dd_from_ber(inp: &AnalysisInput, ber_dd1: f64, ber_dd2: f64) -> f64 {
    let tc = inp.coherence as f64;
    let n = inp.elements as f64;
    let d1 = n - 2.0;
    let d2 = tc - (n - 1.0);
    (d1 * (1.0 - ber_dd1) + d2 * (1.0 - ber_dd2)) / tc * inp.order.bits_per_symbol() as f64
}

pub fn se_pd(inp: &AnalysisInput) -> Result<f64, AnalysisError> {
    Ok(se_pd_from_ber(inp, ber_pd(inp)?.0))
}

/// Every analytical quantity at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPoint {
    pub ber_pd: f64,
    pub ber_pd_high_snr: f64,
    pub ber_dd1: f64,
    pub xi: XiMoments,
    pub ber_dd2: f64,
    pub se_pd: f64,
    pub se_dd: f64,
}

pub fn se_dd(inp: &AnalysisInput) -> Result<f64, AnalysisError> {
    inp.validate()?;
    let (b1, p1) = ber_dd1(inp.power, inp.sigma_g2, inp.noise_ris, inp.order)?;
    let xi = lemma1_moments(&p1)?;
    let (b2, _) = ber_dd2(inp, &xi)?;
    Ok(se_dd_from_ber(inp, b1, b2))
}

pub fn analyze_point(inp: &AnalysisInput) -> Result<AnalysisPoint, AnalysisError> {
    let (bpd, _) = ber_pd(inp)?;
    let high = ber_pd_high_snr(inp)?;
    let (b1, p1) = ber_dd1(inp.power, inp.sigma_g2, inp.noise_ris, inp.order)?;
    let xi = lemma1_moments(&p1)?;
    let (b2, _) = ber_dd2(inp, &xi)?;
    Ok(AnalysisPoint {
        ber_pd: bpd,
        ber_pd_high_snr: high,
        ber_dd1: b1,
        xi,
        ber_dd2: b2,
        se_pd: se_pd_from_ber(inp, bpd),
        se_dd: se_dd_from_ber(inp, b1, b2),
    })
}

/// Resolution of [`find_crossover`] in dB.
pub const CROSSOVER_RESOLUTION_DB: f64 = 0.1;

/// Lowest transmit power (dBm) in `[lo, hi]` where `SE_DD − SE_PD` changes
/// sign, to 0.1 dB. Points where the analysis is undefined are skipped
/// during the 1 dB scan.
pub fn find_crossover(inp: &AnalysisInput, lo_dbm: f64, hi_dbm: f64) -> Result<f64, AnalysisError> {
    let gap = |dbm: f64| -> Result<f64, AnalysisError> {
        let at = inp.with_power_dbm(dbm);
        Ok(se_dd(&at)? - se_pd(&at)?)
    };
    let steps = libm::ceil(hi_dbm - lo_dbm).max(1.0) as usize;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=steps {
        let x = (lo_dbm + i as f64).min(hi_dbm);
        let g = match gap(x) {
            Ok(g) => g,
            Err(AnalysisError::ApproximationBreakdown { .. }) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some((px, pg)) = prev {
            if pg == 0.0 {
                return Ok(px);
            }
            if (pg < 0.0) != (g < 0.0) {
                let (mut a, mut b, mut ga) = (px, x, pg);
                while b - a > CROSSOVER_RESOLUTION_DB {
                    let m = 0.5 * (a + b);
                    let gm = gap(m)?;
                    if (gm < 0.0) == (ga < 0.0) {
                        a = m;
                        ga = gm;
                    } else {
                        b = m;
                    }
                }
                return Ok(0.5 * (a + b));
            }
        }
        prev = Some((x, g));
    }
    Err(AnalysisError::NoCrossover { lo_dbm, hi_dbm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(d: usize) -> PskOrder {
        PskOrder::new(d).unwrap()
    }

    fn input(n: usize, dbm: f64, d: usize) -> AnalysisInput {
        AnalysisInput {
            elements: n,
            power: dbm_to_watts(dbm),
            noise_bs: 1.258_925_411_794_166_6e-14,
            noise_ris: 3.162_277_660_168_379_4e-10,
            sigma_g2: 3.981e-7,
            sigma_h2: 3.981e-7,
            order: order(d),
            coherence: 500,
        }
    }

    #[test]
    fn ber_from_probs_examples() {
        let mut p = alloc::vec![0.0; 8];
        p[0] = 1.0;
        assert_eq!(ber_from_probs(&p), 0.0);
        assert!((ber_from_probs(&[0.25; 4]) - 0.5).abs() < 1e-15);
        for d in [2usize, 4, 8, 16, 32] {
            let u = alloc::vec![1.0 / d as f64; d];
            assert!((ber_from_probs(&u) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn offset_weights_average_over_sent_symbols() {
        // D = 8: offsets 3 and 5 have distances {1, 3} from symbol 0 but 2 on average
        assert_eq!(mean_offset_bit_distance(3, 8), 2.0);
        assert_eq!(mean_offset_bit_distance(5, 8), 2.0);
        // D = 16 by enumeration of the binary-reflected code
        let want = [0.0, 1.0, 2.0, 2.0, 2.0, 2.5, 3.0, 2.5, 2.0, 2.5, 3.0, 2.5, 2.0, 2.0, 2.0, 1.0];
        for (l, w) in want.iter().enumerate() {
            assert_eq!(mean_offset_bit_distance(l, 16), *w, "offset {l}");
        }
        // symbol-0 weights agree for a symmetric 8-PSK decision profile
        let p = [0.6, 0.1, 0.05, 0.04, 0.02, 0.04, 0.05, 0.1];
        let from_zero: f64 = p.iter().enumerate().map(|(l, q)| q * gray(l).count_ones() as f64).sum::<f64>() / 3.0;
        assert!((ber_from_probs(&p) - from_zero).abs() < 1e-15);
    }

    #[test]
    fn se_examples() {
        let inp = input(50, 0.0, 16);
        assert!((se_pd_from_ber(&inp, 0.0) - 3.6).abs() < 1e-12);
        assert!((se_dd_from_ber(&inp, 0.0, 0.0) - 3.992).abs() < 1e-12);
    }

    #[test]
    fn high_snr_examples() {
        assert!((high_snr_ber(0.0, order(8)) - 1.0 / 3.0).abs() < 1e-15);
        // D = 4: tanθ = 1 collapses the argument
        let inp = input(50, 3.0, 4);
        let n = 50.0;
        let sa2 = inp.sigma_a2();
        let x = PI * libm::sqrt(inp.power) * n * libm::sqrt(sa2)
            / (4.0 * libm::sqrt(inp.power * n * (1.0 - PI * PI / 16.0) * sa2 + inp.noise_bs));
        let got = ber_pd_high_snr(&inp).unwrap();
        assert!((got - q(x)).abs() <= 1e-12 * q(x));
    }

    #[test]
    fn dd2_with_perfect_detection_is_the_pd_pipeline() {
        for (n, dbm) in [(10, 0.0), (50, 5.0), (120, -3.0)] {
            let inp = input(n, dbm, 8);
            let f = dd2_moments(&inp, &XiMoments::default()).unwrap();
            let nm1 = (n - 1) as f64;
            let g = pd_channel_moments(n - 1, inp.sigma_a2(), inp.noise_bs / (inp.power * nm1));
            for (x, y) in [(f.mean_re, g.mean_re), (f.var_re, g.var_re), (f.var_im, g.var_im)] {
                assert!((x - y).abs() <= 1e-10 * y.abs(), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn probabilities_are_normalized() {
        for dbm in [-5.0, 0.0, 5.0, 10.0, 15.0] {
            for d in [8, 16] {
                let inp = input(50, dbm, d);
                let (_, p) = ber_pd(&inp).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
                let (_, p) = ber_dd1(inp.power, inp.sigma_g2, inp.noise_ris, inp.order).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn more_elements_lower_pd_ber() {
        let mut last = 1.0;
        for n in [10, 20, 40, 80, 160] {
            let (b, _) = ber_pd(&input(n, 0.0, 8)).unwrap();
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn dd1_vanishes_at_high_snr() {
        let (b, p) = ber_dd1(1.0, 1.0, 1e-9, order(8)).unwrap();
        assert!(b < 1e-6 && p[0] > 1.0 - 1e-6);
    }

    #[test]
    fn crossover_absent_when_dd_dominates() {
        // a quiet RIS makes the decision-directed scheme better everywhere
        let mut inp = input(50, 0.0, 8);
        inp.noise_ris = 1e-20;
        assert!(matches!(
            find_crossover(&inp, -5.0, 15.0),
            Err(AnalysisError::NoCrossover { .. })
        ));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let mut inp = input(50, 0.0, 8);
        inp.sigma_g2 = 0.0;
        assert!(matches!(ber_pd(&inp), Err(AnalysisError::InvalidInput(_))));
        let mut inp = input(50, 0.0, 8);
        inp.coherence = 40;
        assert!(se_dd(&inp).is_err());
    }
}
