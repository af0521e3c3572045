//! Pilot-directed estimation.
//!
//! Phase 1: the typical user (index 0) sends `N+1` unit pilots while the RIS
//! steps through the columns of the `(N+1)`-point DFT. Phase 2: the other
//! users send pilots; the RIS estimates their sensed channels and the BS
//! solves for the direct channels and the reflecting-element ratios.

use core::f64::consts::PI;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::estimate::{
    assemble, check_bs_split, check_ris_split, nmse, phase1_ls, phase1_schedule, phase2_length,
    phase2_schedule, sensing_ls, slot_noise, solve_upsilon, EstimationError, EstimationResult,
    Phase2Slot, SlotUsage,
};
use crate::linalg::{CMatrix, CVector, SeededStream, C64};
use crate::model::{rx_bs, rx_ris, ChannelRealization, Scenario};

/// How phase-2 pilots are laid out in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase2Layout {
    /// `M ≥ N−N_A`: each user sends a unit pilot in two slots of its own and
    /// its unknowns are solved separately.
    PerUserPairs,
    /// `M < N−N_A`: all users send DFT-row pilot sequences over all phase-2
    /// slots and the unknowns are solved jointly.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdPlan {
    pub users: usize,
    pub tau1: usize,
    pub tau2: usize,
    /// RIS configuration of each phase-1 slot (length N each).
    pub phase1: Vec<CVector>,
    /// RIS configuration of each phase-2 slot.
    pub phase2: Vec<CVector>,
    /// Pilots of users 2..K over phase 2, `(K−1) x τ2`.
    pub pilots: CMatrix,
    pub layout: Phase2Layout,
}

impl PdPlan {
    pub fn new(sc: &Scenario) -> Result<Self, EstimationError> {
        sc.validate()?;
        let (k, m, n, na) = (sc.users, sc.bs_antennas, sc.ris_elements, sc.sensing_count());
        if k > 1 && na < k {
            return Err(EstimationError::Plan(format!(
                "{na} sensing elements cannot separate {k} users"
            )));
        }
        let nb = n - na;
        let tau1 = n + 1;
        let tau2 = phase2_length(k, m, n, na);
        let layout = if m >= nb {
            Phase2Layout::PerUserPairs
        } else {
            Phase2Layout::Joint
        };
        let pilots = match layout {
            Phase2Layout::PerUserPairs => CMatrix::from_fn(k - 1, tau2, |u, t| {
                if t / 2 == u {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            // first K−1 rows of the τ2-point DFT
            Phase2Layout::Joint => CMatrix::from_fn(k - 1, tau2, |u, t| {
                let e = (u * t) % tau2;
                C64::from_polar(1.0, -2.0 * PI * e as f64 / tau2 as f64)
            }),
        };
        if m * tau2 < (k - 1) * (m + nb) {
            return Err(EstimationError::Plan(format!(
                "{tau2} phase-2 slots give {} equations for {} unknowns",
                m * tau2,
                (k - 1) * (m + nb)
            )));
        }
        Ok(Self {
            users: k,
            tau1,
            tau2,
            phase1: phase1_schedule(n),
            phase2: phase2_schedule(n, tau2),
            pilots,
            layout,
        })
    }

    /// Slots in which at least one user transmits a pilot.
    pub fn pilot_slots(&self) -> usize {
        let phase2 = (0..self.tau2)
            .filter(|&t| (0..self.pilots.rows()).any(|u| self.pilots[(u, t)] != C64::new(0.0, 0.0)))
            .count();
        self.tau1 + phase2
    }
}

/// `τ_p = τ1 + τ2` of the pilot-directed protocol.
pub fn pd_overhead(k: usize, m: usize, n: usize, na: usize) -> usize {
    n + 1 + phase2_length(k, m, n, na)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Estimate {
    /// `Ĥ_c,1`, `M x (N+1)`.
    pub cascaded: CMatrix,
    /// `ĝ_1^A`.
    pub sensing: CVector,
}

fn sensing_phases(sc: &Scenario, phi: &[C64]) -> Vec<C64> {
    sc.sensing.iter().map(|&i| phi[i]).collect()
}

pub fn pd_phase1(
    ch: &ChannelRealization,
    sc: &Scenario,
    plan: &PdPlan,
    noise: &mut SeededStream,
) -> Result<Phase1Estimate, EstimationError> {
    let rho = sc.rho_full();
    check_bs_split(&rho)?;
    check_ris_split(sc)?;
    let k = sc.users;
    let mut s = vec![C64::new(0.0, 0.0); k];
    s[0] = C64::new(1.0, 0.0);
    let eta = sc.eta_sensing();
    let na = sc.sensing_count();
    let mut y_cols = Vec::with_capacity(plan.tau1);
    let mut psi_sum = vec![C64::new(0.0, 0.0); na];
    for phi in &plan.phase1 {
        let (nb, nr) = slot_noise(sc, noise);
        y_cols.push(rx_bs(ch, sc, phi, &s, Some(&nb))?);
        let phi_a = sensing_phases(sc, phi);
        let yr = rx_ris(ch, sc, &phi_a, &s, Some(&nr))?;
        for i in 0..na {
            psi_sum[i] += yr[i] / phi_a[i];
        }
    }
    let cascaded = phase1_ls(&y_cols, &vec![C64::new(1.0, 0.0); plan.tau1], sc.power, &rho)?;
    let scale = libm::sqrt(sc.power) * plan.tau1 as f64;
    let sensing = (0..na).map(|i| psi_sum[i] / (scale * eta[i])).collect();
    Ok(Phase1Estimate { cascaded, sensing })
}

pub fn pd_phase2(
    ch: &ChannelRealization,
    sc: &Scenario,
    plan: &PdPlan,
    phase1: &Phase1Estimate,
    noise: &mut SeededStream,
) -> Result<EstimationResult, EstimationError> {
    let k = sc.users;
    let na = sc.sensing_count();
    let eta = sc.eta_sensing();
    let mut y_bs = Vec::with_capacity(plan.tau2);
    let mut psi = Vec::with_capacity(plan.tau2);
    let mut symbols: Vec<Vec<C64>> = Vec::with_capacity(plan.tau2);
    for t in 0..plan.tau2 {
        let phi = &plan.phase2[t];
        let mut s = vec![C64::new(0.0, 0.0); k];
        for u in 1..k {
            s[u] = plan.pilots[(u - 1, t)];
        }
        let (nb, nr) = slot_noise(sc, noise);
        y_bs.push(rx_bs(ch, sc, phi, &s, Some(&nb))?);
        let phi_a = sensing_phases(sc, phi);
        let yr = rx_ris(ch, sc, &phi_a, &s, Some(&nr))?;
        psi.push((0..na).map(|i| yr[i] / phi_a[i]).collect::<CVector>());
        symbols.push(s[1..].to_vec());
    }

    let mut sensing_channels = CMatrix::zeros(na, k);
    sensing_channels.set_column(0, &phase1.sensing);
    let mut ratios_sensing = Vec::with_capacity(k.saturating_sub(1));
    if k > 1 {
        let g_others = sensing_ls(&psi, &plan.pilots, &eta, sc.power)?;
        for (u, g) in g_others.iter().enumerate() {
            sensing_channels.set_column(u + 1, g);
            ratios_sensing.push((0..na).map(|i| g[i] / phase1.sensing[i]).collect::<CVector>());
        }
    }

    let upsilon = match plan.layout {
        Phase2Layout::Joint => {
            let slots: Vec<Phase2Slot<'_>> = (0..plan.tau2)
                .map(|t| Phase2Slot {
                    y: &y_bs[t],
                    phi: &plan.phase2[t],
                    s: &symbols[t],
                })
                .collect();
            solve_upsilon(sc, &phase1.cascaded, &ratios_sensing, &slots)?
        }
        Phase2Layout::PerUserPairs => {
            let mut out = Vec::with_capacity(k.saturating_sub(1));
            for u in 0..k.saturating_sub(1) {
                let slots: Vec<Phase2Slot<'_>> = (2 * u..2 * u + 2)
                    .map(|t| Phase2Slot {
                        y: &y_bs[t],
                        phi: &plan.phase2[t],
                        s: core::slice::from_ref(&symbols[t][u]),
                    })
                    .collect();
                let one = [ratios_sensing[u].clone()];
                let mut sol = solve_upsilon(sc, &phase1.cascaded, &one, &slots)?;
                out.push(sol.remove(0));
            }
            out
        }
    };

    let (cascaded, ratios) = assemble(sc, &phase1.cascaded, &ratios_sensing, &upsilon);
    let (per, total) = nmse(ch, &cascaded);
    Ok(EstimationResult {
        cascaded,
        sensing_channels,
        ratios,
        nmse: per,
        nmse_total: total,
        slots: SlotUsage {
            pilot: plan.pilot_slots(),
            data: 0,
        },
    })
}

/// Runs both phases.
pub fn pd_estimate(
    ch: &ChannelRealization,
    sc: &Scenario,
    plan: &PdPlan,
    noise: &mut SeededStream,
) -> Result<EstimationResult, EstimationError> {
    let p1 = pd_phase1(ch, sc, plan, noise)?;
    pd_phase2(ch, sc, plan, &p1, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::draw_channels;
    use crate::model::tests::scenario;

    #[test]
    fn overhead_examples() {
        assert_eq!(pd_overhead(1, 8, 50, 1), 51);
        assert_eq!(pd_overhead(4, 8, 50, 4), 72);
        assert_eq!(pd_overhead(2, 64, 50, 4), 53);
    }

    #[test]
    fn noiseless_phase1_is_exact() {
        let sc = scenario(2, 3, 9, 2, 0.4);
        let ch = draw_channels(&sc, &mut SeededStream::new(1, 0)).unwrap();
        let plan = PdPlan::new(&sc).unwrap();
        let p1 = pd_phase1(&ch, &sc, &plan, &mut SeededStream::new(1, 1)).unwrap();
        let truth = ch.cascaded(0);
        let err = p1.cascaded.sub(&truth).unwrap().frobenius_norm() / truth.frobenius_norm();
        assert!(err < 1e-10, "{err}");
        for (i, &el) in sc.sensing.iter().enumerate() {
            let g = ch.user_ris[(el, 0)];
            assert!((p1.sensing[i] - g).norm() <= 1e-10 * g.norm());
        }
    }

    #[test]
    fn singular_splits_are_rejected() {
        let sc = scenario(1, 2, 5, 1, 0.0);
        let ch = draw_channels(&sc, &mut SeededStream::new(0, 0)).unwrap();
        let plan = PdPlan::new(&sc).unwrap();
        assert!(matches!(
            pd_phase1(&ch, &sc, &plan, &mut SeededStream::new(0, 1)),
            Err(EstimationError::SingularPowerSplit { element: 4, .. })
        ));
        let sc = scenario(1, 2, 5, 1, 1.0);
        assert!(matches!(
            pd_phase1(&ch, &sc, &plan, &mut SeededStream::new(0, 1)),
            Err(EstimationError::SingularPowerSplit { .. })
        ));
    }

    fn end_to_end(k: usize, m: usize, n: usize, na: usize, seed: u64) -> f64 {
        let sc = scenario(k, m, n, na, 0.5);
        let ch = draw_channels(&sc, &mut SeededStream::new(seed, 0)).unwrap();
        let plan = PdPlan::new(&sc).unwrap();
        let res = pd_estimate(&ch, &sc, &plan, &mut SeededStream::new(seed, 1)).unwrap();
        res.nmse_total.sqrt()
    }

    #[test]
    fn noiseless_end_to_end_both_layouts() {
        assert!(end_to_end(3, 8, 10, 3, 4) < 1e-9);
        assert!(end_to_end(4, 4, 30, 4, 5) < 1e-9);
        assert!(end_to_end(1, 2, 6, 1, 6) < 1e-9);
    }

    #[test]
    fn noiseless_ratios_reconstruct_user_channels() {
        let sc = scenario(3, 4, 12, 3, 0.5);
        let ch = draw_channels(&sc, &mut SeededStream::new(9, 0)).unwrap();
        let plan = PdPlan::new(&sc).unwrap();
        let res = pd_estimate(&ch, &sc, &plan, &mut SeededStream::new(9, 1)).unwrap();
        for k in 1..3 {
            for e in 0..12 {
                let rebuilt = res.ratios[k][e] * ch.user_ris[(e, 0)];
                assert!((rebuilt - ch.user_ris[(e, k)]).norm() < 1e-9 * ch.user_ris[(e, k)].norm().max(1.0));
            }
        }
    }

    #[test]
    fn plan_pilot_count_matches_overhead() {
        for (k, m, n, na) in [(1, 2, 5, 1), (3, 2, 20, 3), (4, 16, 12, 4), (2, 3, 9, 2)] {
            let sc = scenario(k, m, n, na, 0.5);
            let plan = PdPlan::new(&sc).unwrap();
            assert_eq!(plan.pilot_slots(), pd_overhead(k, m, n, na));
        }
    }
}
