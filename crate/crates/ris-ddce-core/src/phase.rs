//! RIS phase configuration for the data stage from estimated channels.
//!
//! Every search starts from the all-ones configuration or another fixed
//! start and only accepts moves that do not decrease its objective, so results
//! are deterministic and each search is monotone.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::linalg::{CMatrix, CVector, SeededStream, C64};

const SINGLE_USER_SWEEPS: usize = 200;
const MULTIUSER_SWEEPS: usize = 100;
const CANDIDATE_ANGLES: usize = 64;
const REL_TOL: f64 = 1e-8;
/// Soft-minimum sharpness schedule in 1/dB.
const ANNEALING: [f64; 5] = [0.1, 0.3, 1.0, 3.0, 10.0];
/// Random restarts, used only on small surfaces where the min-SINR landscape
/// has many local optima.
const RESTARTS: usize = 8;
const SMALL_SURFACE: usize = 16;
const RESTART_SEED: u64 = 0x9a5e_5eed;

fn unit_phase(z: C64) -> C64 {
    if z.re == 0.0 && z.im == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / z.norm()
    }
}

/// `φ_i = exp(j∠â_i)`, with angle 0 where `â_i = 0`.
pub fn single_user_siso(a_hat: &[C64]) -> CVector {
    a_hat.iter().map(|&a| unit_phase(a)).collect()
}

/// `‖h + A φ‖²`.
pub fn effective_gain(hd: &[C64], a: &CMatrix, phi: &[C64]) -> f64 {
    let mut sum = 0.0;
    for (r, &h) in hd.iter().enumerate() {
        let row = a.row(r);
        let v: C64 = h + row.iter().zip(phi).map(|(x, p)| x * p).sum::<C64>();
        sum += v.norm_sqr();
    }
    sum
}

/// Result of an iterative search.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub phi: CVector,
    pub objective: f64,
    /// Objective after each completed sweep, starting with the initial value.
    pub history: Vec<f64>,
}

/// Element-wise phase alignment maximizing `‖ĥ_d + Â φ‖²`.
pub fn single_user_mimo(hd_hat: &[C64], a_hat: &CMatrix) -> PhaseSolution {
    let (m, n) = a_hat.shape();
    let mut phi = CVector::ones(n);
    // s = h + A φ kept up to date
    let mut s: Vec<C64> = (0..m)
        .map(|r| hd_hat[r] + a_hat.row(r).iter().sum::<C64>())
        .collect();
    let norm = |s: &[C64]| s.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut objective = norm(&s);
    let mut history = vec![objective];
    if m == 1 {
        // closed form: rotate every term onto the direct path
        let base = unit_phase(hd_hat[0]);
        for (e, p) in phi.iter_mut().enumerate() {
            let ae = a_hat[(0, e)];
            if ae.re != 0.0 || ae.im != 0.0 {
                *p = base * unit_phase(ae.conj());
            }
        }
        let objective = effective_gain(hd_hat, a_hat, &phi);
        history.push(objective);
        return PhaseSolution {
            phi,
            objective,
            history,
        };
    }
    for _ in 0..SINGLE_USER_SWEEPS {
        for e in 0..n {
            // residual without element e, then align a_e with it
            let mut corr = C64::new(0.0, 0.0);
            for r in 0..m {
                let ae = a_hat[(r, e)];
                corr += ae.conj() * (s[r] - ae * phi[e]);
            }
            if corr.re == 0.0 && corr.im == 0.0 {
                continue;
            }
            let new = unit_phase(corr);
            let delta = new - phi[e];
            for (r, sr) in s.iter_mut().enumerate() {
                *sr += a_hat[(r, e)] * delta;
            }
            phi[e] = new;
        }
        let next = norm(&s);
        history.push(next);
        let done = next - objective <= REL_TOL * objective.abs().max(f64::MIN_POSITIVE);
        objective = next.max(objective);
        if done {
            break;
        }
    }
    let objective = effective_gain(hd_hat, a_hat, &phi);
    PhaseSolution {
        phi,
        objective,
        history,
    }
}

/// BS combiner assumed when scoring a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    ZeroForcing,
    Matched,
}

/// Per-user SINR for effective channels `f_k = Ĥ_c,k [1; φ]` (columns of `f`).
fn sinrs_of(f: &[Vec<C64>], power: f64, noise: f64, combiner: Combiner) -> Vec<f64> {
    let k = f.len();
    let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
    match combiner {
        Combiner::Matched => (0..k)
            .map(|u| {
                let g = dot(&f[u], &f[u]).re;
                let interference: f64 = (0..k)
                    .filter(|&j| j != u)
                    .map(|j| dot(&f[u], &f[j]).norm_sqr())
                    .sum();
                let den = power * interference + noise * g;
                if den > 0.0 {
                    power * g * g / den
                } else if g > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .collect(),
        Combiner::ZeroForcing => {
            let mut gram = vec![C64::new(0.0, 0.0); k * k];
            for i in 0..k {
                for j in i..k {
                    let v = dot(&f[i], &f[j]);
                    gram[i * k + j] = v;
                    gram[j * k + i] = v.conj();
                }
            }
            match inverse_diagonal(&mut gram, k) {
                Some(d) => d
                    .into_iter()
                    .map(|x| if noise > 0.0 { power / (noise * x) } else { f64::INFINITY })
                    .collect(),
                None => vec![0.0; k],
            }
        }
    }
}

/// Diagonal of the inverse of a Hermitian positive-definite `k x k` matrix
/// via Cholesky; `None` when it is numerically singular.
fn inverse_diagonal(a: &mut [C64], k: usize) -> Option<Vec<f64>> {
    let scale = (0..k).map(|i| a[i * k + i].re).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    for j in 0..k {
        let mut d = a[j * k + j].re;
        for p in 0..j {
            d -= a[j * k + p].norm_sqr();
        }
        if d <= 1e-12 * scale {
            return None;
        }
        let d = libm::sqrt(d);
        a[j * k + j] = C64::new(d, 0.0);
        for i in j + 1..k {
            let mut v = a[i * k + j];
            for p in 0..j {
                v -= a[i * k + p] * a[j * k + p].conj();
            }
            a[i * k + j] = v / d;
        }
    }
    // diag(A^{-1})_i = ‖L^{-1} e_i‖² summed over rows: solve L x = e_i
    let mut out = vec![0.0; k];
    let mut x = vec![C64::new(0.0, 0.0); k];
    for i in 0..k {
        for v in x.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        for r in i..k {
            let mut v = if r == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for p in i..r {
                v -= a[r * k + p] * x[p];
            }
            x[r] = v / a[r * k + r].re;
        }
        out[i] = x[i..].iter().map(|z| z.norm_sqr()).sum();
    }
    Some(out)
}

fn effective_channels(hc: &[CMatrix], phi: &[C64]) -> Vec<Vec<C64>> {
    hc.iter()
        .map(|h| {
            (0..h.rows())
                .map(|r| {
                    let row = h.row(r);
                    row[0] + row[1..].iter().zip(phi).map(|(x, p)| x * p).sum::<C64>()
                })
                .collect()
        })
        .collect()
}

/// Per-user SINR of configuration `phi` for cascaded channels `hc`.
pub fn user_sinrs(hc: &[CMatrix], phi: &[C64], power: f64, noise: f64, combiner: Combiner) -> Vec<f64> {
    sinrs_of(&effective_channels(hc, phi), power, noise, combiner)
}

pub fn min_sinr(hc: &[CMatrix], phi: &[C64], power: f64, noise: f64, combiner: Combiner) -> f64 {
    user_sinrs(hc, phi, power, noise, combiner)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Per-element line search over 64 phase levels maximizing `score` of the
/// effective channels, starting from `phi`.
fn coordinate_search(
    hc: &[CMatrix],
    mut phi: CVector,
    score: impl Fn(&[Vec<C64>]) -> f64,
) -> (CVector, Vec<f64>) {
    let candidates: Vec<C64> = (0..CANDIDATE_ANGLES)
        .map(|l| C64::from_polar(1.0, TAU * l as f64 / CANDIDATE_ANGLES as f64))
        .collect();
    let mut f = effective_channels(hc, &phi);
    let mut objective = score(&f);
    let mut history = vec![objective];
    let mut trial = f.clone();
    for _ in 0..MULTIUSER_SWEEPS {
        let start = objective;
        for e in 0..phi.len() {
            let mut best = (objective, phi[e]);
            for &c in &candidates {
                let delta = c - phi[e];
                for (u, h) in hc.iter().enumerate() {
                    for (r, v) in trial[u].iter_mut().enumerate() {
                        *v = f[u][r] + h[(r, e + 1)] * delta;
                    }
                }
                let s = score(&trial);
                if s > best.0 {
                    best = (s, c);
                }
            }
            if best.1 != phi[e] {
                let delta = best.1 - phi[e];
                for (u, h) in hc.iter().enumerate() {
                    for (r, v) in f[u].iter_mut().enumerate() {
                        *v += h[(r, e + 1)] * delta;
                    }
                }
                phi[e] = best.1;
                objective = best.0;
            }
        }
        history.push(objective);
        if !(objective - start > REL_TOL * start.abs().max(f64::MIN_POSITIVE)) {
            break;
        }
    }
    (phi, history)
}

/// Coordinate search over 64 phase levels per element maximizing the minimum
/// SINR. A single user is handed to [`single_user_mimo`].
///
/// The min-SINR objective has kinks where users tie, which stall single
/// coordinate moves. The search is therefore also started from the optima
/// of two smooth fairness surrogates (the sum of inverse SINRs and a soft
/// minimum in dB, annealed from flat to sharp) and, for small surfaces, from
/// fixed pseudo-random configurations. The best final configuration is kept.
pub fn multiuser_maxmin(
    hc_hats: &[CMatrix],
    power: f64,
    noise: f64,
    combiner: Combiner,
) -> PhaseSolution {
    if hc_hats.len() == 1 {
        let h = &hc_hats[0];
        let (m, cols) = h.shape();
        let hd: Vec<C64> = (0..m).map(|r| h[(r, 0)]).collect();
        let a = CMatrix::from_fn(m, cols - 1, |r, c| h[(r, c + 1)]);
        return single_user_mimo(&hd, &a);
    }
    let n = hc_hats.first().map_or(0, |h| h.cols() - 1);
    let sinrs = |f: &[Vec<C64>]| sinrs_of(f, power, noise, combiner);
    let min_score = |f: &[Vec<C64>]| sinrs(f).into_iter().fold(f64::INFINITY, f64::min);
    let inverse_sum = |f: &[Vec<C64>]| -sinrs(f).into_iter().map(|x| 1.0 / x).sum::<f64>();
    let soft_min_db = |f: &[Vec<C64>], sharpness: f64| {
        let db: Vec<f64> = sinrs(f).into_iter().map(|x| 10.0 * libm::log10(x)).collect();
        let lo = db.iter().copied().fold(f64::INFINITY, f64::min);
        if !lo.is_finite() {
            return lo;
        }
        lo - libm::log(db.iter().map(|d| libm::exp(-sharpness * (d - lo))).sum::<f64>()) / sharpness
    };

    let ones = CVector::ones(n);
    let mut annealed = ones.clone();
    for sharpness in ANNEALING {
        annealed = coordinate_search(hc_hats, annealed, |f: &[Vec<C64>]| soft_min_db(f, sharpness)).0;
    }
    let mut starts = vec![
        ones.clone(),
        coordinate_search(hc_hats, ones, inverse_sum).0,
        annealed,
    ];
    let mut rng = SeededStream::new(RESTART_SEED, n as u64);
    let restarts = if n <= SMALL_SURFACE { RESTARTS } else { 0 };
    for _ in 0..restarts {
        starts.push((0..n).map(|_| C64::from_polar(1.0, TAU * rng.uniform())).collect());
    }
    let mut best: Option<(CVector, Vec<f64>)> = None;
    for start in starts {
        let (phi, history) = coordinate_search(hc_hats, start, min_score);
        let last = *history.last().unwrap_or(&f64::NEG_INFINITY);
        let better = match &best {
            None => true,
            Some((_, h)) => last > *h.last().unwrap_or(&f64::NEG_INFINITY),
        };
        if better {
            best = Some((phi, history));
        }
    }
    let (phi, history) = best.unwrap_or_else(|| (CVector::ones(n), Vec::new()));
    let objective = min_sinr(hc_hats, &phi, power, noise, combiner);
    PhaseSolution {
        phi,
        objective,
        history,
    }
}
