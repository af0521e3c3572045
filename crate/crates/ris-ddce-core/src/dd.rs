//! Decision-directed estimation.
//!
//! Phase 1: user 1 sends one pilot and then `N` data symbols. The RIS
//! estimates `g_1^A` from the pilot, detects the data and forwards the hard
//! decisions, which the BS uses as virtual pilots. Phase 2a: users 2..K send
//! one pilot each. Phase 2b: everyone sends data; the RIS separates the
//! streams by zero forcing and the BS solves for the remaining unknowns.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::constellation::PskAlphabet;
use crate::estimate::{
    assemble, check_bs_split, check_ris_split, nmse, phase1_ls, phase1_schedule, phase2_length,
    phase2_schedule, sensing_ls, slot_noise, solve_upsilon, EstimationError, EstimationResult,
    Phase2Slot, SlotUsage,
};
use crate::linalg::{lstsq, numerical_rank, CMatrix, CVector, SeededStream, C64};
use crate::model::{rx_bs, rx_ris, ChannelRealization, Scenario};
use crate::pd::Phase1Estimate;

#[derive(Debug, Clone, PartialEq)]
pub struct DdPlan {
    pub users: usize,
    /// `N+1`: one pilot then `N` data slots.
    pub tau1: usize,
    /// `K−1` pilot slots of phase 2a.
    pub tau2a: usize,
    /// Data slots of phase 2b.
    pub tau2b: usize,
    pub phase1: Vec<CVector>,
    /// RIS configurations over phase 2a followed by 2b.
    pub phase2: Vec<CVector>,
}

impl DdPlan {
    /// Minimal plan: phase 2 as long as the pilot-directed one.
    pub fn new(sc: &Scenario) -> Result<Self, EstimationError> {
        Self::with_extra_data(sc, 0)
    }

    /// Plan whose phase 2b carries `extra` data slots beyond the minimum.
    pub fn with_extra_data(sc: &Scenario, extra: usize) -> Result<Self, EstimationError> {
        sc.validate()?;
        let (k, m, n, na) = (sc.users, sc.bs_antennas, sc.ris_elements, sc.sensing_count());
        if na < k {
            return Err(EstimationError::Plan(format!(
                "{na} sensing elements cannot detect {k} streams"
            )));
        }
        let tau2a = k - 1;
        let tau2b = phase2_length(k, m, n, na) - tau2a + extra;
        Ok(Self {
            users: k,
            tau1: n + 1,
            tau2a,
            tau2b,
            phase1: phase1_schedule(n),
            phase2: phase2_schedule(n, tau2a + tau2b),
        })
    }

    pub fn pilot_slots(&self) -> usize {
        1 + self.tau2a
    }

    /// Identity pilots of users 2..K over phase 2a.
    fn pilots_2a(&self) -> CMatrix {
        CMatrix::identity(self.tau2a)
    }
}

/// `τ_p = K`.
pub fn dd_overhead(k: usize) -> usize {
    k
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdPhase1 {
    pub estimate: Phase1Estimate,
    /// RIS decisions for the `N` data slots.
    pub detected: Vec<usize>,
    pub ris_symbol_errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdOutcome {
    pub result: EstimationResult,
    /// RIS decisions over phase 2b, one row per user.
    pub detected: Vec<Vec<usize>>,
    pub ris_symbol_errors: usize,
}

fn sensing_phases(sc: &Scenario, phi: &[C64]) -> Vec<C64> {
    sc.sensing.iter().map(|&i| phi[i]).collect()
}

fn user1_symbols(sc: &Scenario, s1: C64) -> Vec<C64> {
    let mut s = vec![C64::new(0.0, 0.0); sc.users];
    s[0] = s1;
    s
}

/// Single-stream ML detection at the RIS given `a = √P η ⊙ φ^A ⊙ ĝ_1^A`.
fn detect_single(alphabet: &PskAlphabet, a: &[C64], y: &[C64]) -> usize {
    let c: C64 = a.iter().zip(y).map(|(ai, yi)| ai.conj() * yi).sum();
    alphabet.detect(c)
}

pub fn dd_phase1(
    ch: &ChannelRealization,
    sc: &Scenario,
    plan: &DdPlan,
    data: &[usize],
    noise: &mut SeededStream,
) -> Result<DdPhase1, EstimationError> {
    let rho = sc.rho_full();
    check_bs_split(&rho)?;
    check_ris_split(sc)?;
    if data.len() + 1 != plan.tau1 {
        return Err(EstimationError::Plan(format!(
            "phase 1 needs {} data symbols, got {}",
            plan.tau1 - 1,
            data.len()
        )));
    }
    let alphabet = PskAlphabet::new(sc.order);
    let eta = sc.eta_sensing();
    let amp = libm::sqrt(sc.power);
    let na = sc.sensing_count();

    let mut y_cols = Vec::with_capacity(plan.tau1);
    let mut decided = Vec::with_capacity(plan.tau1);
    let mut sensing = CVector::zeros(na);
    let mut detected = Vec::with_capacity(data.len());
    let mut errors = 0;
    for (t, phi) in plan.phase1.iter().enumerate() {
        let s1 = if t == 0 {
            C64::new(1.0, 0.0)
        } else {
            alphabet.symbol(data[t - 1])
        };
        let s = user1_symbols(sc, s1);
        let (nb, nr) = slot_noise(sc, noise);
        y_cols.push(rx_bs(ch, sc, phi, &s, Some(&nb))?);
        let phi_a = sensing_phases(sc, phi);
        let yr = rx_ris(ch, sc, &phi_a, &s, Some(&nr))?;
        if t == 0 {
            for i in 0..na {
                sensing[i] = yr[i] / (amp * eta[i] * phi_a[i]);
            }
            decided.push(C64::new(1.0, 0.0));
        } else {
            let a: Vec<C64> = (0..na).map(|i| phi_a[i] * sensing[i] * eta[i] * amp).collect();
            let d = detect_single(&alphabet, &a, &yr);
            if d != data[t - 1] {
                errors += 1;
            }
            detected.push(d);
            decided.push(alphabet.symbol(d));
        }
    }
    let cascaded = phase1_ls(&y_cols, &decided, sc.power, &rho)?;
    Ok(DdPhase1 {
        estimate: Phase1Estimate { cascaded, sensing },
        detected,
        ris_symbol_errors: errors,
    })
}

pub fn dd_phase2(
    ch: &ChannelRealization,
    sc: &Scenario,
    plan: &DdPlan,
    phase1: &DdPhase1,
    data: &[Vec<usize>],
    noise: &mut SeededStream,
) -> Result<DdOutcome, EstimationError> {
    let k = sc.users;
    let na = sc.sensing_count();
    if data.len() != k || data.iter().any(|row| row.len() != plan.tau2b) {
        return Err(EstimationError::Plan(format!(
            "phase 2b needs {k} rows of {} data symbols",
            plan.tau2b
        )));
    }
    let alphabet = PskAlphabet::new(sc.order);
    let eta = sc.eta_sensing();
    let amp = libm::sqrt(sc.power);
    let rho = sc.rho_full();
    let hc1 = &phase1.estimate.cascaded;
    let g1 = &phase1.estimate.sensing;
    let slots = plan.tau2a + plan.tau2b;

    // Phase 2a: pilots of users 2..K.
    let pilots = plan.pilots_2a();
    let mut y_bs: Vec<CVector> = Vec::with_capacity(slots);
    let mut symbols: Vec<Vec<C64>> = Vec::with_capacity(slots);
    let mut psi = Vec::with_capacity(plan.tau2a);
    for t in 0..plan.tau2a {
        let phi = &plan.phase2[t];
        let mut s = vec![C64::new(0.0, 0.0); k];
        for u in 1..k {
            s[u] = pilots[(u - 1, t)];
        }
        let (nb, nr) = slot_noise(sc, noise);
        y_bs.push(rx_bs(ch, sc, phi, &s, Some(&nb))?);
        let phi_a = sensing_phases(sc, phi);
        let yr = rx_ris(ch, sc, &phi_a, &s, Some(&nr))?;
        psi.push((0..na).map(|i| yr[i] / phi_a[i]).collect::<CVector>());
        symbols.push(s[1..].to_vec());
    }
    let mut g_all = CMatrix::zeros(na, k);
    g_all.set_column(0, g1);
    let mut ratios_sensing = Vec::with_capacity(k - 1);
    if k > 1 {
        for (u, g) in sensing_ls(&psi, &pilots, &eta, sc.power)?.iter().enumerate() {
            g_all.set_column(u + 1, g);
            ratios_sensing.push((0..na).map(|i| g[i] / g1[i]).collect::<CVector>());
        }
    }

    // Phase 2b: all users send data, RIS detects by zero forcing.
    let mut detected = vec![Vec::with_capacity(plan.tau2b); k];
    let mut errors = 0;
    for t in 0..plan.tau2b {
        let phi = &plan.phase2[plan.tau2a + t];
        let s: Vec<C64> = (0..k).map(|u| alphabet.symbol(data[u][t])).collect();
        let (nb, nr) = slot_noise(sc, noise);
        let y = rx_bs(ch, sc, phi, &s, Some(&nb))?;
        let phi_a = sensing_phases(sc, phi);
        let yr = rx_ris(ch, sc, &phi_a, &s, Some(&nr))?;
        let w: Vec<C64> = (0..na).map(|i| phi_a[i] * eta[i] * amp).collect();
        let eff = g_all.scale_rows(&w);
        let x = lstsq(&eff, &yr)?;
        let mut s_hat = Vec::with_capacity(k);
        for u in 0..k {
            let d = alphabet.detect(x[u]);
            if d != data[u][t] {
                errors += 1;
            }
            detected[u].push(d);
            s_hat.push(alphabet.symbol(d));
        }
        // remove user 1 with its decision and the phase-1 estimate
        let mut a = vec![C64::new(0.0, 0.0); sc.ris_elements + 1];
        a[0] = s_hat[0];
        for e in 0..sc.ris_elements {
            a[e + 1] = phi[e] * rho[e] * s_hat[0];
        }
        let known = hc1.mul_vec(&a)?;
        y_bs.push(y.iter().zip(known.iter()).map(|(yi, ki)| yi - ki * amp).collect());
        symbols.push(s_hat[1..].to_vec());
    }

    let upsilon = if k > 1 {
        let obs: Vec<Phase2Slot<'_>> = (0..slots)
            .map(|t| Phase2Slot {
                y: &y_bs[t],
                phi: &plan.phase2[t],
                s: &symbols[t],
            })
            .collect();
        solve_upsilon(sc, hc1, &ratios_sensing, &obs)?
    } else {
        Vec::new()
    };
    let (cascaded, ratios) = assemble(sc, hc1, &ratios_sensing, &upsilon);
    let (per, total) = nmse(ch, &cascaded);
    Ok(DdOutcome {
        result: EstimationResult {
            cascaded,
            sensing_channels: g_all,
            ratios,
            nmse: per,
            nmse_total: total,
            slots: SlotUsage {
                pilot: plan.pilot_slots(),
                data: plan.tau1 - 1 + plan.tau2b,
            },
        },
        detected,
        ris_symbol_errors: errors,
    })
}

/// What a purely passive RIS can do with decision-directed estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveDdReport {
    pub trials: usize,
    /// BS-side symbol errors when the RIS phases change every slot and only
    /// the slot-1 effective channel is known.
    pub varying_symbol_errors: usize,
    pub varying_symbols: usize,
    /// Rank of `[1;φ]` stacked over phase 1 when φ is held constant.
    pub constant_phase_rank: usize,
    /// Outcome of recovering the cascaded channel with constant φ.
    pub constant_phase_recovery: Result<(), EstimationError>,
}

impl PassiveDdReport {
    pub fn varying_error_rate(&self) -> f64 {
        if self.varying_symbols == 0 {
            0.0
        } else {
            self.varying_symbol_errors as f64 / self.varying_symbols as f64
        }
    }
}

/// Demonstrates why sensing elements are needed: without them the BS either
/// faces a per-slot channel it does not know or a rank-one phase pattern.
pub fn passive_dd_demo(
    sc: &Scenario,
    trials: usize,
    stream: &mut SeededStream,
) -> Result<PassiveDdReport, EstimationError> {
    sc.validate()?;
    if sc.users != 1 || sc.sensing_count() != 0 {
        return Err(EstimationError::Plan(
            "the passive demonstration needs one user and no sensing elements".into(),
        ));
    }
    let n = sc.ris_elements;
    let m = sc.bs_antennas;
    let alphabet = PskAlphabet::new(sc.order);
    let amp = libm::sqrt(sc.power);
    let schedule = phase1_schedule(n);
    let one = C64::new(1.0, 0.0);

    let mut errors = 0;
    let mut total = 0;
    let mut recovery = Ok(());
    let mut rank = 0;
    for trial in 0..trials {
        let mut chan_stream = stream.fork(2 * trial as u64);
        let mut noise = stream.fork(2 * trial as u64 + 1);
        let ch = crate::model::draw_channels(sc, &mut chan_stream)?;
        let (nb, _) = slot_noise(sc, &mut noise);
        let f_hat: CVector = rx_bs(&ch, sc, &schedule[0], &[one], Some(&nb))?
            .iter()
            .map(|z| z / amp)
            .collect();
        for phi in &schedule[1..] {
            let d = chan_stream.index(alphabet.size());
            let (nb, _) = slot_noise(sc, &mut noise);
            let y = rx_bs(&ch, sc, phi, &[alphabet.symbol(d)], Some(&nb))?;
            if alphabet.detect(f_hat.dot_conj(&y)) != d {
                errors += 1;
            }
            total += 1;
        }

        if trial == 0 {
            // constant φ: every slot sees the same [1; φ]
            let phi = &schedule[1];
            let pattern = CMatrix::from_fn(n + 1, n + 1, |_, c| if c == 0 { one } else { phi[c - 1] });
            rank = numerical_rank(&pattern);
            let mut y_rows = vec![Vec::with_capacity(n + 1); m];
            for _ in 0..=n {
                let (nb, _) = slot_noise(sc, &mut noise);
                let y = rx_bs(&ch, sc, phi, &[one], Some(&nb))?;
                for (r, row) in y_rows.iter_mut().enumerate() {
                    row.push(y[r] / amp);
                }
            }
            recovery = y_rows
                .iter()
                .try_for_each(|row| lstsq(&pattern, row).map(|_| ()))
                .map_err(EstimationError::from);
        }
    }
    Ok(PassiveDdReport {
        trials,
        varying_symbol_errors: errors,
        varying_symbols: total,
        constant_phase_rank: rank,
        constant_phase_recovery: recovery,
    })
}
