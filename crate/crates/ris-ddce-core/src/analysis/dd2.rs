//! Moments of the per-slot detection error `ξ_t = 1 − s_t ŝ_t^*` and of the
//! effective channel after decision-directed estimation with `Φ = V_{N−1}`.

use core::f64::consts::TAU;

use super::{AnalysisError, AnalysisInput, EffectiveChannelMoments};
use crate::linalg::{dft_matrix, CMatrix, C64};

/// `E[ξ]`, `E[ξ²]`, `E[|ξ|²]`; the first two are real for symmetric
/// detection probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XiMoments {
    pub mean: f64,
    pub second: f64,
    pub abs_second: f64,
}

/// Tolerance on `p_d = p_{D−d}` required by the folded closed forms.
pub const SYMMETRY_TOL: f64 = 1e-6;

/// Closed forms over `p_0..p_{D/2}`, folding `d` with `D−d`.
pub fn lemma1_moments(p: &[f64]) -> Result<XiMoments, AnalysisError> {
    let d = p.len();
    if d < 2 || d % 2 != 0 {
        return Err(AnalysisError::InvalidInput("probability vector length must be an even order"));
    }
    let deviation = (1..d).map(|i| (p[i] - p[d - i]).abs()).fold(0.0, f64::max);
    if deviation > SYMMETRY_TOL {
        return Err(AnalysisError::SymmetryViolation { max_deviation: deviation });
    }
    let h = d / 2;
    let w = TAU / d as f64;
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for (i, &pi) in p.iter().enumerate().take(h).skip(1) {
        let c1 = libm::cos(w * i as f64);
        let c2 = libm::cos(2.0 * w * i as f64);
        s1 += pi * c1;
        s2 += pi * (c2 - 2.0 * c1);
        s3 += pi * (1.0 - c1);
    }
    Ok(XiMoments {
        mean: 1.0 - p[0] + p[h] - 2.0 * s1,
        second: 1.0 - p[0] + 3.0 * p[h] + 2.0 * s2,
        abs_second: 4.0 * p[h] + 4.0 * s3,
    })
}

/// Covariance-type matrix of `(ξ_0, …, ξ_{n−1})` with the pilot slot
/// `ξ_0 = 0`: `diag` on the data diagonal, `off` between distinct data slots.
#[derive(Debug, Clone, Copy)]
struct SlotMoments {
    diag: f64,
    off: f64,
}

impl SlotMoments {
    fn matrix(self, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |s, t| {
            if s == 0 || t == 0 {
                C64::new(0.0, 0.0)
            } else if s == t {
                C64::new(self.diag, 0.0)
            } else {
                C64::new(self.off, 0.0)
            }
        })
    }
}

/// `Σ_{s,s'} c_s d_{s'} R_{s,s'}`.
fn bilinear(c: &[C64], r: &CMatrix, d: &[C64]) -> C64 {
    let rd = r.mul_vec(d).expect("square slot matrix");
    c.iter().zip(rd.iter()).map(|(x, y)| x * y).sum()
}

/// Expectations entering the decision-directed moments for the element pair
/// `(i, t)`, `i ≠ t`, with `δ = −(1/n) V a`, `V = Φ^H diag(ξ) Φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceTerms {
    /// `E[a_i δ_i^*]`.
    pub cross: f64,
    /// `E|a_i δ_i^*|²`.
    pub cross_abs2: f64,
    /// `E[(a_i δ_i^*)²]`.
    pub cross_sq: f64,
    /// `E|a_i δ_t|²`.
    pub mixed_abs2: f64,
    /// `E[a_i δ_i^* a_t δ_t^*]`.
    pub pair: f64,
    /// `E[a_i δ_i^* a_t^* δ_t]`.
    pub pair_conj: f64,
    /// `E[|a_i|² a_t δ_t^*]`.
    pub power_cross: f64,
}

impl TraceTerms {
    /// Evaluates every term from `Φ = V_n` and the slot moment matrices.
    pub fn numeric(n: usize, xi: &XiMoments, sigma_a2: f64, i: usize, t: usize) -> TraceTerms {
        let phi = dft_matrix(n);
        let sa4 = sigma_a2 * sigma_a2;
        let nf = n as f64;
        // E[ξ_s ξ_s'^*] and E[ξ_s ξ_s']
        let rh = SlotMoments {
            diag: xi.abs_second,
            off: xi.mean * xi.mean,
        }
        .matrix(n);
        let rt = SlotMoments {
            diag: xi.second,
            off: xi.mean * xi.mean,
        }
        .matrix(n);
        // v_{a,m} = Σ_s c^{a,m}_s ξ_s with c^{a,m}_s = conj(φ_{s,a}) φ_{s,m}
        let coeff = |a: usize, m: usize| -> alloc::vec::Vec<C64> {
            (0..n).map(|s| phi[(s, a)].conj() * phi[(s, m)]).collect()
        };
        let conj = |v: &[C64]| -> alloc::vec::Vec<C64> { v.iter().map(|z| z.conj()).collect() };
        // E|v_{a,m}|²
        let e_abs2 = |a: usize, m: usize| {
            let c = coeff(a, m);
            bilinear(&c, &rh, &conj(&c)).re
        };
        let c_ii = coeff(i, i);
        let c_tt = coeff(t, t);
        let c_it = coeff(i, t);
        let c_ti = coeff(t, i);
        let e_v_ii: C64 = c_ii.iter().skip(1).map(|c| c * xi.mean).sum();

        let cross = -sigma_a2 * e_v_ii.re / nf;
        let mut abs2_row_i = 0.0;
        let mut abs2_row_t = 0.0;
        for m in 0..n {
            let w = if m == i { 4.0 } else { 1.0 };
            abs2_row_i += w * e_abs2(i, m);
            let w = if m == i { 4.0 } else { 1.0 };
            abs2_row_t += w * e_abs2(t, m);
        }
        let cross_abs2 = sa4 * abs2_row_i / (nf * nf);
        let cross_sq = 4.0 * sa4 * bilinear(&c_ii, &rt, &c_ii).re / (nf * nf);
        let mixed_abs2 = sa4 * abs2_row_t / (nf * nf);
        let pair = sa4 * (bilinear(&c_ii, &rt, &c_tt) + bilinear(&c_it, &rt, &c_ti)).re / (nf * nf);
        let pair_conj = sa4 * bilinear(&conj(&c_ii), &rh, &c_tt).re / (nf * nf);
        let e_v_tt: C64 = c_tt.iter().skip(1).map(|c| c * xi.mean).sum();
        let power_cross = -sa4 * e_v_tt.re / nf;
        TraceTerms {
            cross,
            cross_abs2,
            cross_sq,
            mixed_abs2,
            pair,
            pair_conj,
            power_cross,
        }
    }
}

/// Mean and variances of `f = Σ z_i` over the `N−1` reflecting elements when
/// the RIS phases follow the decision-directed estimate.
pub fn dd2_moments(inp: &AnalysisInput, xi: &XiMoments) -> Result<EffectiveChannelMoments, AnalysisError> {
    inp.validate()?;
    let big_n = inp.elements;
    if big_n < 3 {
        return Err(AnalysisError::InvalidInput("decision-directed moments need N ≥ 3"));
    }
    let n = big_n - 1;
    let nf = n as f64;
    let sa2 = inp.sigma_a2();
    let sa4 = sa2 * sa2;
    let p = inp.power;
    let n0 = inp.noise_bs;
    let terms = TraceTerms::numeric(n, xi, sa2, 0, 1);

    let noise_var = n0 / (p * nf);
    // E|δ_i|² = σ_a² (N−2) μ_|ξ|² / (N−1)
    let sigma_e2 = (p * (big_n as f64 - 2.0) * sa2 * xi.abs_second + n0) / (p * nf);
    let den = sa2 + 2.0 * terms.cross + sigma_e2;
    if !(den > 0.0) {
        return Err(AnalysisError::ApproximationBreakdown {
            quantity: "E|a_hat|^2",
            value: den,
        });
    }
    let mu = (sa2 + terms.cross) / libm::sqrt(den);

    let abs_ae2 = terms.cross_abs2 + sa2 * noise_var;
    let re2 = 0.5 * (abs_ae2 + terms.cross_sq);
    let im2 = 0.5 * (abs_ae2 - terms.cross_sq);
    let ez2 = (4.0 * sa4 + 2.0 * 4.0 * sa4 * terms.cross / sa2 + re2) / den;
    let var_r = ez2 - mu * mu;
    let var_i = im2 / den;

    let mixed = terms.mixed_abs2 + sa2 * noise_var;
    let err_rr = 0.5 * (terms.pair + terms.pair_conj);
    let err_ii = 0.5 * (terms.pair_conj - terms.pair);
    let m2 = big_n as f64 - 2.0;
    let ae_noise = -m2 * n0 / (p * nf * nf) * sa2 * xi.mean;
    let ee_noise = 2.0 * m2 * n0 / (p * nf * nf) * sa2 * xi.abs_second + n0 * n0 / (p * p * nf * nf);
    let kappa = sa4
        + 4.0 * terms.power_cross
        + 2.0 * mixed
        + 4.0 * err_rr
        + 4.0 * ae_noise
        + ee_noise;
    if !(kappa > 0.0) {
        return Err(AnalysisError::ApproximationBreakdown {
            quantity: "kappa",
            value: kappa,
        });
    }
    let cov_r = (sa4 + 2.0 * terms.power_cross + err_rr) / libm::sqrt(kappa) - mu * mu;
    let cov_i = err_ii / libm::sqrt(kappa);

    let var_re = nf * var_r + nf * (nf - 1.0) * cov_r;
    let var_im = nf * var_i + nf * (nf - 1.0) * cov_i;
    for (quantity, value) in [("var f_Re", var_re), ("var f_Im", var_im), ("var z_Re", var_r)] {
        if !(value >= 0.0) {
            return Err(AnalysisError::ApproximationBreakdown { quantity, value });
        }
    }
    Ok(EffectiveChannelMoments {
        mean_re: nf * mu,
        mean_im: 0.0,
        var_re,
        var_im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{PskAlphabet, PskOrder};
    use crate::linalg::SeededStream;

    fn enumerate(p: &[f64]) -> (C64, C64, f64) {
        let a = PskAlphabet::new(PskOrder::new(p.len()).unwrap());
        let s0 = a.symbol(0);
        let mut m = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0);
        for (d, &pd) in p.iter().enumerate() {
            let xi = C64::new(1.0, 0.0) - s0 * a.symbol(d).conj();
            m.0 += xi * pd;
            m.1 += xi * xi * pd;
            m.2 += xi.norm_sqr() * pd;
        }
        m
    }

    fn symmetric(d: usize, s: &mut SeededStream) -> alloc::vec::Vec<f64> {
        let mut p = alloc::vec![0.0; d];
        for i in 0..=d / 2 {
            let v = s.uniform();
            p[i] = v;
            p[(d - i) % d] = v;
        }
        let sum: f64 = p.iter().sum();
        p.iter().map(|x| x / sum).collect()
    }

    #[test]
    fn lemma1_matches_enumeration() {
        let mut s = SeededStream::new(1, 0);
        for d in [2, 4, 8, 16, 32] {
            for _ in 0..100 {
                let p = symmetric(d, &mut s);
                let m = lemma1_moments(&p).unwrap();
                let (e1, e2, e3) = enumerate(&p);
                assert!((m.mean - e1.re).abs() < 1e-12 && e1.im.abs() < 1e-12);
                assert!((m.second - e2.re).abs() < 1e-12 && e2.im.abs() < 1e-12);
                assert!((m.abs_second - e3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lemma1_examples() {
        let mut p = alloc::vec![0.0; 8];
        p[0] = 1.0;
        assert_eq!(lemma1_moments(&p).unwrap(), XiMoments::default());
        let u = alloc::vec![1.0 / 16.0; 16];
        assert!((lemma1_moments(&u).unwrap().abs_second - 2.0).abs() < 1e-14);
        let mut a = alloc::vec![0.1; 4];
        a[1] = 0.5;
        a[3] = 0.3;
        a[0] = 0.1;
        assert!(matches!(lemma1_moments(&a), Err(AnalysisError::SymmetryViolation { .. })));
    }

    // Closed forms of each term for the DFT pattern.
    fn closed(n: usize, xi: &XiMoments, sa2: f64) -> TraceTerms {
        let nf = n as f64;
        let sa4 = sa2 * sa2;
        let (mx, mx2, ma) = (xi.mean, xi.second, xi.abs_second);
        let same = (nf - 1.0) * ma + (nf - 1.0) * (nf - 2.0) * mx * mx;
        let diff = (nf - 1.0) * ma - (nf - 2.0) * mx * mx;
        let t_same = (nf - 1.0) * mx2 + (nf - 1.0) * (nf - 2.0) * mx * mx;
        let t_cross = (nf - 1.0) * mx2 - (nf - 2.0) * mx * mx;
        TraceTerms {
            cross: -(nf - 1.0) / nf * sa2 * mx,
            cross_abs2: (nf - 1.0) / (nf * nf) * sa4 * ((nf + 3.0) * ma + 3.0 * (nf - 2.0) * mx * mx),
            cross_sq: 4.0 * sa4 * t_same / (nf * nf),
            mixed_abs2: sa4 * (4.0 * diff + same + (nf - 2.0) * diff) / (nf * nf),
            pair: sa4 * (t_same + t_cross) / (nf * nf),
            pair_conj: sa4 * same / (nf * nf),
            power_cross: -(nf - 1.0) / nf * sa4 * mx,
        }
    }

    fn close(a: &TraceTerms, b: &TraceTerms, tol: f64) -> bool {
        let pairs = [
            (a.cross, b.cross),
            (a.cross_abs2, b.cross_abs2),
            (a.cross_sq, b.cross_sq),
            (a.mixed_abs2, b.mixed_abs2),
            (a.pair, b.pair),
            (a.pair_conj, b.pair_conj),
            (a.power_cross, b.power_cross),
        ];
        pairs.iter().all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn numeric_traces_match_closed_forms_and_are_pair_independent() {
        let xi = XiMoments {
            mean: 0.21,
            second: 0.05,
            abs_second: 0.37,
        };
        for n in [4, 8, 19, 49] {
            let reference = TraceTerms::numeric(n, &xi, 1.7, 0, 1);
            assert!(close(&reference, &closed(n, &xi, 1.7), 1e-10));
            for (i, t) in [(2, 3), (n - 1, 0), (1, n - 2)] {
                if i != t {
                    assert!(close(&TraceTerms::numeric(n, &xi, 1.7, i, t), &reference, 1e-10));
                }
            }
        }
    }

    #[test]
    fn trace_terms_match_monte_carlo() {
        // random a_i = h_i g_i and i.i.d. detection errors drawn from p
        let n = 8;
        let p = [0.9, 0.03, 0.005, 0.0, 0.03, 0.0, 0.005, 0.03];
        let d = p.len();
        let alphabet = PskAlphabet::new(PskOrder::new(d).unwrap());
        let xi_m = lemma1_moments(&p).unwrap();
        let want = TraceTerms::numeric(n, &xi_m, 1.0, 0, 1);
        let phi = dft_matrix(n);
        let mut s = SeededStream::new(77, 0);
        let trials = 200_000;
        let (mut acc, mut acc_sq) = ([0.0f64; 3], [0.0f64; 3]);
        for _ in 0..trials {
            let a: alloc::vec::Vec<C64> =
                (0..n).map(|_| s.complex_normal(1.0) * s.complex_normal(1.0)).collect();
            let xi: alloc::vec::Vec<C64> = (0..n)
                .map(|t| {
                    if t == 0 {
                        return C64::new(0.0, 0.0);
                    }
                    let u = s.uniform();
                    let mut c = 0.0;
                    let mut k = 0;
                    while k + 1 < d && u > c + p[k] {
                        c += p[k];
                        k += 1;
                    }
                    C64::new(1.0, 0.0) - alphabet.symbol(0) * alphabet.symbol(k).conj()
                })
                .collect();
            // δ = −(1/n) Φ^H diag(ξ) Φ a
            let phia = phi.mul_vec(&a).unwrap();
            let w: alloc::vec::Vec<C64> = phia.iter().zip(&xi).map(|(x, y)| x * y).collect();
            let delta: alloc::vec::Vec<C64> = phi.adjoint().mul_vec(&w).unwrap().iter().map(|z| -z / n as f64).collect();
            let x = [
                (a[0] * delta[0].conj()).re,
                (a[0] * delta[0].conj()).norm_sqr(),
                (a[0] * delta[1]).norm_sqr(),
            ];
            for k in 0..3 {
                acc[k] += x[k];
                acc_sq[k] += x[k] * x[k];
            }
        }
        let tf = trials as f64;
        for (k, target) in [want.cross, want.cross_abs2, want.mixed_abs2].iter().enumerate() {
            let mean = acc[k] / tf;
            let se = libm::sqrt((acc_sq[k] / tf - mean * mean) / tf);
            assert!((mean - target).abs() < 4.0 * se, "term {k}: {mean} vs {target} (se {se})");
        }
    }
}
