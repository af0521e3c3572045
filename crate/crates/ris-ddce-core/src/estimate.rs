//! Types and least-squares steps shared by the pilot- and decision-directed
//! estimators.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::linalg::{dft_matrix, lstsq, CMatrix, CVector, LinalgError, SeededStream, C64};
use crate::model::{ChannelRealization, ModelError, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub enum EstimationError {
    /// A reflection amplitude of 0 (BS side) or 1 (RIS side) makes the
    /// corresponding diagonal scaling singular.
    SingularPowerSplit { element: usize, rho: f64 },
    RankDeficient { rank: usize, cols: usize },
    Plan(String),
    Model(ModelError),
}

impl fmt::Display for EstimationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimationError::SingularPowerSplit { element, rho } => {
                write!(f, "singular power split at element {element} (rho = {rho})")
            }
            EstimationError::RankDeficient { rank, cols } => {
                write!(f, "rank deficient system: rank {rank} of {cols}")
            }
            EstimationError::Plan(msg) => write!(f, "invalid plan: {msg}"),
            EstimationError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EstimationError {}

impl From<LinalgError> for EstimationError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::RankDeficient { rank, cols } => EstimationError::RankDeficient { rank, cols },
            other => EstimationError::Model(ModelError::Shape(other)),
        }
    }
}

impl From<ModelError> for EstimationError {
    fn from(e: ModelError) -> Self {
        EstimationError::Model(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotUsage {
    pub pilot: usize,
    pub data: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// Estimated cascaded channels `Ĥ_c,k`, each `M x (N+1)`.
    pub cascaded: Vec<CMatrix>,
    /// Estimated user-RIS channels at the sensing elements, `N_A x K`.
    pub sensing_channels: CMatrix,
    /// Estimated ratios `g_k,n / g_1,n` over all N elements.
    pub ratios: Vec<CVector>,
    /// Per-user `‖Ĥ_c,k − H_c,k‖²_F / ‖H_c,k‖²_F`.
    pub nmse: Vec<f64>,
    /// `Σ_k ‖Ĥ_c,k − H_c,k‖²_F / Σ_k ‖H_c,k‖²_F`.
    pub nmse_total: f64,
    pub slots: SlotUsage,
}

/// Seed of the fixed phase-2 RIS phase schedule.
const PHASE2_SCHEDULE_SEED: u64 = 0x5e_ed0f_d1ce;

/// Phase-1 RIS configurations: column `t` of the `(N+1)`-point DFT minus its
/// leading one.
pub fn phase1_schedule(n: usize) -> Vec<CVector> {
    let v = dft_matrix(n + 1);
    (0..=n)
        .map(|t| (1..=n).map(|r| v[(r, t)]).collect())
        .collect()
}

/// Phase-2 RIS configurations: fixed pseudo-random unit-modulus vectors, so no
/// element keeps a constant phase across the phase-2 slots.
pub fn phase2_schedule(n: usize, slots: usize) -> Vec<CVector> {
    let mut s = SeededStream::new(PHASE2_SCHEDULE_SEED, n as u64);
    (0..slots)
        .map(|_| (0..n).map(|_| C64::from_polar(1.0, 2.0 * PI * s.uniform())).collect())
        .collect()
}

/// Phase-2 length: `2(K−1)` when `M ≥ N−N_A`, else `K−1+⌈(K−1)(N−N_A)/M⌉`.
pub fn phase2_length(k: usize, m: usize, n: usize, na: usize) -> usize {
    let nb = n - na;
    if m >= nb {
        2 * (k - 1)
    } else {
        (k - 1) + ((k - 1) * nb).div_ceil(m)
    }
}

pub(crate) fn check_bs_split(rho: &[f64]) -> Result<(), EstimationError> {
    match rho.iter().position(|&r| r == 0.0) {
        Some(i) => Err(EstimationError::SingularPowerSplit { element: i, rho: 0.0 }),
        None => Ok(()),
    }
}

pub(crate) fn check_ris_split(sc: &Scenario) -> Result<(), EstimationError> {
    for (&el, &r) in sc.sensing.iter().zip(&sc.rho_sensing) {
        if r >= 1.0 {
            return Err(EstimationError::SingularPowerSplit { element: el, rho: r });
        }
    }
    Ok(())
}

/// Noise for one slot: `M` BS samples then `N_A` RIS samples.
pub(crate) fn slot_noise(sc: &Scenario, noise: &mut SeededStream) -> (Vec<C64>, Vec<C64>) {
    let bs = (0..sc.bs_antennas).map(|_| noise.complex_normal(sc.noise_bs)).collect();
    let ris = (0..sc.sensing.len()).map(|_| noise.complex_normal(sc.noise_ris)).collect();
    (bs, ris)
}

/// `(1/(√P τ)) Y diag(s)^{-1} V^H diag([1;ρ])^{-1}` with `V` the τ-point DFT.
pub(crate) fn phase1_ls(
    y_cols: &[CVector],
    symbols: &[C64],
    power: f64,
    rho: &[f64],
) -> Result<CMatrix, EstimationError> {
    let tau = y_cols.len();
    let m = y_cols.first().map_or(0, |c| c.len());
    let mut y = CMatrix::zeros(m, tau);
    for (t, col) in y_cols.iter().enumerate() {
        let inv = C64::new(1.0, 0.0) / symbols[t];
        let scaled: Vec<C64> = col.iter().map(|z| z * inv).collect();
        y.set_column(t, &scaled);
    }
    let v = dft_matrix(tau);
    let mut h = y.matmul(&v.adjoint())?;
    let amp = libm::sqrt(power) * tau as f64;
    for r in 0..m {
        for c in 0..tau {
            let d = if c == 0 { 1.0 } else { rho[c - 1] };
            h[(r, c)] /= amp * d;
        }
    }
    Ok(h)
}

/// Per-slot observations used by the BS-side phase-2 solve.
pub(crate) struct Phase2Slot<'a> {
    /// BS observation minus any already-known contribution.
    pub y: &'a [C64],
    pub phi: &'a [C64],
    /// Symbols of users 2..K in this slot.
    pub s: &'a [C64],
}

/// Solves the stacked Kronecker least squares for `υ = [h_d,k; λ_k^B]`, k ≥ 2.
///
/// Returns one `(M + N_B)` vector per user 2..K.
pub(crate) fn solve_upsilon(
    sc: &Scenario,
    hc1: &CMatrix,
    ratios_sensing: &[CVector],
    slots: &[Phase2Slot<'_>],
) -> Result<Vec<CVector>, EstimationError> {
    let m = sc.bs_antennas;
    let reflecting = sc.reflecting();
    let nb = reflecting.len();
    let others = ratios_sensing.len();
    let width = m + nb;
    let cols = others * width;
    let amp = libm::sqrt(sc.power);

    let mut q = CMatrix::zeros(m * slots.len(), cols);
    let mut rhs = Vec::with_capacity(m * slots.len());
    for (t, slot) in slots.iter().enumerate() {
        // B_t = [I_M, Â1^B diag(φ_t^B)]
        let mut b = CMatrix::zeros(m, width);
        for r in 0..m {
            b[(r, r)] = C64::new(1.0, 0.0);
            for (j, &el) in reflecting.iter().enumerate() {
                b[(r, m + j)] = hc1[(r, el + 1)] * slot.phi[el];
            }
        }
        // ỹ_t = Σ_k Â1^A diag(ρ^A) diag(φ_t^A) λ̂_k^A s_k,t
        let mut known = vec![C64::new(0.0, 0.0); m];
        for (k, lam) in ratios_sensing.iter().enumerate() {
            let sk = slot.s[k];
            if sk == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, &el) in sc.sensing.iter().enumerate() {
                let w = slot.phi[el] * lam[i] * sc.rho_sensing[i] * sk;
                for (r, kr) in known.iter_mut().enumerate() {
                    *kr += hc1[(r, el + 1)] * w;
                }
            }
        }
        for k in 0..others {
            let sk = slot.s[k];
            for r in 0..m {
                for c in 0..width {
                    q[(t * m + r, k * width + c)] = b[(r, c)] * sk;
                }
            }
        }
        for r in 0..m {
            rhs.push((slot.y[r] - known[r] * amp) / amp);
        }
    }
    let x = lstsq(&q, &rhs)?;
    Ok((0..others)
        .map(|k| x[k * width..(k + 1) * width].iter().copied().collect())
        .collect())
}

/// Rebuilds `[ĥ_d,k, Â1 diag(λ̂_k)]` for every user.
pub(crate) fn assemble(
    sc: &Scenario,
    hc1: &CMatrix,
    ratios_sensing: &[CVector],
    upsilon: &[CVector],
) -> (Vec<CMatrix>, Vec<CVector>) {
    let m = sc.bs_antennas;
    let n = sc.ris_elements;
    let reflecting = sc.reflecting();
    let mut cascaded = vec![hc1.clone()];
    let mut ratios = vec![CVector::ones(n)];
    for (lam_a, ups) in ratios_sensing.iter().zip(upsilon) {
        let mut lam = CVector::zeros(n);
        for (i, &el) in sc.sensing.iter().enumerate() {
            lam[el] = lam_a[i];
        }
        for (j, &el) in reflecting.iter().enumerate() {
            lam[el] = ups[m + j];
        }
        let h = CMatrix::from_fn(m, n + 1, |r, c| {
            if c == 0 {
                ups[r]
            } else {
                hc1[(r, c)] * lam[c - 1]
            }
        });
        cascaded.push(h);
        ratios.push(lam);
    }
    (cascaded, ratios)
}

/// `Ĝ^A_{:,2:K} = (1/√P) diag(η)^{-1} Ψ S^H (S S^H)^{-1}`; columns per user.
pub(crate) fn sensing_ls(
    psi: &[CVector],
    pilots: &CMatrix,
    eta: &[f64],
    power: f64,
) -> Result<Vec<CVector>, EstimationError> {
    let users = pilots.rows();
    let na = eta.len();
    let tau = psi.len();
    let mut psi_m = CMatrix::zeros(na, tau);
    for (t, p) in psi.iter().enumerate() {
        psi_m.set_column(t, p);
    }
    let sh = pilots.adjoint();
    let gram = pilots.matmul(&sh)?;
    let rhs = psi_m.matmul(&sh)?;
    // X gram = rhs  ⇔  gram^T X^T = rhs^T
    let gt = gram.transpose();
    let amp = libm::sqrt(power);
    let mut out = vec![CVector::zeros(na); users];
    for i in 0..na {
        let row: Vec<C64> = rhs.row(i).to_vec();
        let x = lstsq(&gt, &row)?;
        for k in 0..users {
            out[k][i] = x[k] / (amp * eta[i]);
        }
    }
    Ok(out)
}

pub(crate) fn nmse(ch: &ChannelRealization, cascaded: &[CMatrix]) -> (Vec<f64>, f64) {
    let mut per = Vec::with_capacity(cascaded.len());
    let (mut num, mut den) = (0.0, 0.0);
    for (k, est) in cascaded.iter().enumerate() {
        let truth = ch.cascaded(k);
        let e = est.sub(&truth).map(|d| d.frobenius_norm_sqr()).unwrap_or(f64::INFINITY);
        let t = truth.frobenius_norm_sqr();
        per.push(if t > 0.0 { e / t } else { e });
        num += e;
        den += t;
    }
    (per, if den > 0.0 { num / den } else { num })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_are_unit_modulus() {
        for phi in phase1_schedule(6).iter().chain(phase2_schedule(6, 5).iter()) {
            assert!(phi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
        // first phase-1 configuration is the all-ones column
        assert!(phase1_schedule(4)[0].iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn phase2_length_examples() {
        assert_eq!(phase2_length(1, 8, 50, 1), 0);
        assert_eq!(phase2_length(4, 8, 50, 4), 3 + 18);
        assert_eq!(phase2_length(2, 64, 50, 4), 2);
    }
}
