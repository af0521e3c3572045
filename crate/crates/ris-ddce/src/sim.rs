//! Monte Carlo experiments.
//!
//! Every trial owns a [`SeededStream`] keyed by `(seed, trial)` and forks it
//! per purpose, so the same trial sees the same channels at every sweep
//! point and under every protocol (common random numbers). Trials run on
//! the current rayon pool and are reduced in trial order, which makes the
//! results independent of the worker count.

use std::time::Instant;

use rayon::prelude::*;
use ris_ddce_core::analysis::AnalysisInput;
use ris_ddce_core::constellation::{BitErrorCount, PskAlphabet};
use ris_ddce_core::dd::{dd_phase1, dd_phase2, DdPlan};
use ris_ddce_core::estimate::EstimationError;
use ris_ddce_core::linalg::{complex_gaussian, dft_matrix, lstsq};
use ris_ddce_core::model::{draw_channels, rx_bs_with_reflection, ChannelRealization, ModelError, Scenario};
use ris_ddce_core::pd::{pd_estimate, PdPlan};
use ris_ddce_core::phase::{multiuser_maxmin, Combiner};
use ris_ddce_core::{CMatrix, CVector, LinalgError, SeededStream, C64};
use thiserror::Error;

use crate::config::{ConfigError, Metric, ModelKind, Placement, Protocol, ScenarioConfig, SystemConfig};

const TAG_CHANNEL: u64 = 1;
const TAG_POSITIONS: u64 = 2;
const TAG_NOISE: u64 = 3;
const TAG_DATA: u64 = 4;

/// Largest tolerated fraction of failed trials at one point.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{failed} of {trials} trials failed at {protocol} {axis} = {value} (first error: {first})")]
    TooManyFailures {
        protocol: &'static str,
        axis: &'static str,
        value: f64,
        failed: usize,
        trials: usize,
        first: String,
    },
}

/// Per-trial value of every metric; `None` where a metric does not apply.
pub type Sample = [Option<f64>; Metric::ALL.len()];

fn empty_sample() -> Sample {
    [None; Metric::ALL.len()]
}

fn set(sample: &mut Sample, metric: Metric, value: f64) {
    sample[metric.index()] = Some(value);
}

/// Aggregated results at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub series: String,
    pub protocol: Protocol,
    pub value: f64,
    pub trials: usize,
    pub failed: usize,
    /// Mean of each metric over successful trials.
    pub mean: Sample,
    /// Standard error of each mean.
    pub stderr: Sample,
    pub wall_time_s: f64,
}

impl PointResult {
    pub fn mean_of(&self, metric: Metric) -> Option<f64> {
        self.mean[metric.index()]
    }

    pub fn stderr_of(&self, metric: Metric) -> Option<f64> {
        self.stderr[metric.index()]
    }
}

/// Mean and standard error per metric, reduced in slice order.
pub fn aggregate(samples: &[Sample]) -> (Sample, Sample) {
    let mut mean = empty_sample();
    let mut stderr = empty_sample();
    for m in 0..mean.len() {
        let values: Vec<f64> = samples.iter().filter_map(|s| s[m]).collect();
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean[m] = Some(mu);
        stderr[m] = Some((var / n).sqrt());
    }
    (mean, stderr)
}

/// Runs every series, protocol and sweep value of `cfg`, in that nesting.
pub fn run(cfg: &ScenarioConfig) -> Result<Vec<PointResult>, ExperimentError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for series in cfg.series() {
        for &protocol in &cfg.protocols {
            for &value in &cfg.sweep.values {
                let sys = cfg.point_system(&series.system, value);
                let mut row = run_point(cfg, &sys, protocol, value)?;
                row.series = series.label.clone();
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Runs `cfg.trials` trials of one protocol at one operating point.
pub fn run_point(
    cfg: &ScenarioConfig,
    sys: &SystemConfig,
    protocol: Protocol,
    value: f64,
) -> Result<PointResult, ExperimentError> {
    let start = Instant::now();
    let link = match cfg.model {
        ModelKind::AnalysisLink => Some(cfg.analysis_input(sys)?),
        ModelKind::EstimatorChain => None,
    };
    let outcomes: Vec<Result<Sample, TrialError>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let stream = SeededStream::new(cfg.seed, t as u64);
            match &link {
                Some(inp) => link_trial(inp, protocol, &stream),
                None => chain_trial(cfg, sys, protocol, &stream),
            }
        })
        .collect();
    let mut samples = Vec::with_capacity(outcomes.len());
    let mut failed = 0;
    let mut first = None;
    for o in outcomes {
        match o {
            Ok(s) => samples.push(s),
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed as f64 > MAX_FAILURE_FRACTION * cfg.trials as f64 {
        return Err(ExperimentError::TooManyFailures {
            protocol: protocol.label(),
            axis: cfg.sweep.axis.column(),
            value,
            failed,
            trials: cfg.trials,
            first: first.unwrap_or_default(),
        });
    }
    let (mean, stderr) = aggregate(&samples);
    Ok(PointResult {
        series: String::new(),
        protocol,
        value,
        trials: cfg.trials,
        failed,
        mean,
        stderr,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn bits_of(alphabet: &PskAlphabet) -> u64 {
    alphabet.order().bits_per_symbol() as u64
}

fn unit_conj(x: C64) -> C64 {
    let r = x.norm();
    if r > 0.0 {
        x.conj() / r
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Relative squared error of `est` against `truth`.
fn relative_error(est: &[C64], truth: &[C64]) -> f64 {
    let num: f64 = est.iter().zip(truth).map(|(e, t)| (e - t).norm_sqr()).sum();
    let den: f64 = truth.iter().map(|t| t.norm_sqr()).sum();
    num / den
}

/// `slots` data symbols over the scalar channel `h_eff`, detected directly.
fn siso_data_stage(
    h_eff: C64,
    inp: &AnalysisInput,
    slots: usize,
    alphabet: &PskAlphabet,
    data: &mut SeededStream,
    noise: &mut SeededStream,
) -> BitErrorCount {
    let amp = inp.power.sqrt();
    let mut errors = 0u64;
    for _ in 0..slots {
        let s = data.index(alphabet.size());
        let y = h_eff * alphabet.symbol(s) * amp + noise.complex_normal(inp.noise_bs);
        errors += alphabet.bit_diff(s, alphabet.detect(y)) as u64;
    }
    BitErrorCount {
        bit_errors: errors,
        bits: slots as u64 * bits_of(alphabet),
    }
}

/// Single-antenna link without direct path, matching the analytical model.
///
/// PD: `N` DFT pilot slots, per-element estimate, phase alignment, data over
/// `τ_c − N` slots. DD: element `N` senses with full absorption; slot 1 is a
/// pilot, slots `2..N−1` carry data that the sensing element detects and the
/// BS reuses as pilots over the `N−1` reflecting elements (DFT of size
/// `N−1`); data then follows over `τ_c − (N−1)` slots with the sensing
/// element switched off.
pub fn link_trial(inp: &AnalysisInput, protocol: Protocol, stream: &SeededStream) -> Result<Sample, TrialError> {
    let n = inp.elements;
    let tc = inp.coherence;
    let alphabet = PskAlphabet::new(inp.order);
    let bits = bits_of(&alphabet) as f64;
    let amp = inp.power.sqrt();
    let mut ch = stream.fork(TAG_CHANNEL);
    let mut noise = stream.fork(TAG_NOISE);
    let mut data = stream.fork(TAG_DATA);
    let g = complex_gaussian(&mut ch, n, inp.sigma_g2);
    let h = complex_gaussian(&mut ch, n, inp.sigma_h2);
    let a: Vec<C64> = g.iter().zip(h.iter()).map(|(g, h)| g * h).collect();
    let mut sample = empty_sample();
    match protocol {
        Protocol::Pd => {
            let v = dft_matrix(n);
            let y: Vec<C64> = (0..n)
                .map(|t| {
                    let rx: C64 = (0..n).map(|i| a[i] * v[(i, t)]).sum();
                    rx * amp + noise.complex_normal(inp.noise_bs)
                })
                .collect();
            let a_hat: Vec<C64> = (0..n)
                .map(|i| (0..n).map(|t| v[(i, t)].conj() * y[t]).sum::<C64>() / (n as f64 * amp))
                .collect();
            let h_eff: C64 = a.iter().zip(&a_hat).map(|(a, e)| a * unit_conj(*e)).sum();
            let slots = tc - n;
            let b = siso_data_stage(h_eff, inp, slots, &alphabet, &mut data, &mut noise);
            set(&mut sample, Metric::Nmse, relative_error(&a_hat, &a));
            set(&mut sample, Metric::BerStage2, b.rate());
            let se = (b.bits - b.bit_errors) as f64 / tc as f64;
            set(&mut sample, Metric::Se, se);
            set(&mut sample, Metric::SeTypical, se);
        }
        Protocol::Dd | Protocol::DdFair => {
            let nr = n - 1;
            let g_sense = g[n - 1];
            let v = dft_matrix(nr);
            let mut g_hat = C64::new(0.0, 0.0);
            let mut pilots = Vec::with_capacity(nr);
            let mut ris = BitErrorCount::default();
            let mut symbol_errors = 0usize;
            let mut y = Vec::with_capacity(nr);
            for t in 0..nr {
                let s = if t == 0 { 0 } else { data.index(alphabet.size()) };
                let x = if t == 0 { C64::new(1.0, 0.0) } else { alphabet.symbol(s) };
                let r = g_sense * x * amp + noise.complex_normal(inp.noise_ris);
                let decided = if t == 0 {
                    g_hat = r / amp;
                    C64::new(1.0, 0.0)
                } else {
                    let d = alphabet.detect(r * g_hat.conj());
                    ris.bit_errors += alphabet.bit_diff(s, d) as u64;
                    ris.bits += bits_of(&alphabet);
                    symbol_errors += usize::from(d != s);
                    alphabet.symbol(d)
                };
                pilots.push(decided);
                let rx: C64 = (0..nr).map(|i| a[i] * v[(i, t)]).sum();
                y.push(rx * x * amp + noise.complex_normal(inp.noise_bs));
            }
            let a_hat: Vec<C64> = (0..nr)
                .map(|i| {
                    (0..nr).map(|t| v[(i, t)].conj() * y[t] * pilots[t].conj()).sum::<C64>() / (nr as f64 * amp)
                })
                .collect();
            let h_eff: C64 = a[..nr].iter().zip(&a_hat).map(|(a, e)| a * unit_conj(*e)).sum();
            let slots = tc - nr;
            let b = siso_data_stage(h_eff, inp, slots, &alphabet, &mut data, &mut noise);
            let data1 = (nr - 1) as f64;
            set(&mut sample, Metric::Nmse, relative_error(&a_hat, &a[..nr]));
            set(&mut sample, Metric::BerStage1, ris.rate());
            set(&mut sample, Metric::SerRis, symbol_errors as f64 / data1);
            set(&mut sample, Metric::BerStage2, b.rate());
            let correct = (ris.bits - ris.bit_errors + b.bits - b.bit_errors) as f64;
            let se = correct / tc as f64;
            debug_assert!((se - (data1 * (1.0 - ris.rate()) + slots as f64 * (1.0 - b.rate())) * bits / tc as f64).abs() < 1e-9);
            set(&mut sample, Metric::Se, se);
            set(&mut sample, Metric::SeTypical, se);
        }
    }
    Ok(sample)
}

/// Data transmission after phase configuration: all elements reflect fully,
/// users send i.i.d. PSK symbols, and the BS detects with maximum-ratio
/// combining (one user) or zero forcing on the estimated effective channels.
fn chain_data_stage(
    ch: &ChannelRealization,
    sc: &Scenario,
    hats: &[CMatrix],
    slots: usize,
    data: &mut SeededStream,
    noise: &mut SeededStream,
) -> Result<Vec<BitErrorCount>, TrialError> {
    let (k, m, n) = (sc.users, sc.bs_antennas, sc.ris_elements);
    let alphabet = PskAlphabet::new(sc.order);
    let phi = multiuser_maxmin(hats, sc.power, sc.noise_bs, Combiner::ZeroForcing).phi;
    let mut ext = Vec::with_capacity(n + 1);
    ext.push(C64::new(1.0, 0.0));
    ext.extend(phi.iter().copied());
    let effective: Vec<CVector> = hats.iter().map(|h| h.mul_vec(&ext)).collect::<Result<_, _>>()?;
    let g = CMatrix::from_columns(m, &effective)?;
    // rows of the combiner: MRC for one user, the pseudo-inverse otherwise
    let combiner = if k == 1 {
        g.adjoint()
    } else {
        let mut cols = Vec::with_capacity(m);
        for r in 0..m {
            let mut e = vec![C64::new(0.0, 0.0); m];
            e[r] = C64::new(1.0, 0.0);
            cols.push(lstsq(&g, &e)?);
        }
        CMatrix::from_columns(k, &cols)?
    };
    let rho = vec![1.0; n];
    let bits = bits_of(&alphabet);
    let mut counts = vec![BitErrorCount::default(); k];
    for _ in 0..slots {
        let tx: Vec<usize> = (0..k).map(|_| data.index(alphabet.size())).collect();
        let s: Vec<C64> = tx.iter().map(|&i| alphabet.symbol(i)).collect();
        let w = complex_gaussian(noise, m, sc.noise_bs);
        let y = rx_bs_with_reflection(ch, sc.power, &rho, &phi, &s, Some(&w))?;
        let z = combiner.mul_vec(&y)?;
        for (u, c) in counts.iter_mut().enumerate() {
            c.bit_errors += alphabet.bit_diff(tx[u], alphabet.detect(z[u])) as u64;
            c.bits += bits;
        }
    }
    Ok(counts)
}

/// Per-block tallies of the estimator chain, indexed by user role
/// (role 0 is the typical user).
struct BlockTally {
    nmse: f64,
    stage1: Vec<BitErrorCount>,
    stage2: Vec<BitErrorCount>,
    ris_symbol_errors: usize,
    ris_symbols: usize,
}

fn user_positions(placement: &Placement, users: usize, stream: &SeededStream) -> Option<Vec<[f64; 2]>> {
    match placement {
        Placement::RandomSquare { center, side, .. } => {
            let mut s = stream.fork(TAG_POSITIONS);
            Some(
                (0..users)
                    .map(|_| {
                        let x = center[0] + (s.uniform() - 0.5) * side;
                        let y = center[1] + (s.uniform() - 0.5) * side;
                        [x, y]
                    })
                    .collect(),
            )
        }
        _ => None,
    }
}

/// Channels with user columns reordered so that `roles[j]` plays role `j`.
fn permute_users(ch: &ChannelRealization, roles: &[usize]) -> ChannelRealization {
    ChannelRealization {
        direct: ch.direct.select_columns(roles),
        ris_bs: ch.ris_bs.clone(),
        user_ris: ch.user_ris.select_columns(roles),
    }
}

fn chain_block(
    ch: &ChannelRealization,
    sc: &Scenario,
    protocol: Protocol,
    stream: &SeededStream,
) -> Result<BlockTally, TrialError> {
    let k = sc.users;
    let n = sc.ris_elements;
    let alphabet = PskAlphabet::new(sc.order);
    let mut noise = stream.fork(TAG_NOISE);
    let mut data = stream.fork(TAG_DATA);
    match protocol {
        Protocol::Pd => {
            let plan = PdPlan::new(sc)?;
            let est = pd_estimate(ch, sc, &plan, &mut noise)?;
            let slots = sc.coherence - (plan.tau1 + plan.tau2);
            let stage2 = chain_data_stage(ch, sc, &est.cascaded, slots, &mut data, &mut noise)?;
            Ok(BlockTally {
                nmse: est.nmse_total,
                stage1: vec![BitErrorCount::default(); k],
                stage2,
                ris_symbol_errors: 0,
                ris_symbols: 0,
            })
        }
        Protocol::Dd | Protocol::DdFair => {
            let plan = DdPlan::new(sc)?;
            let d = alphabet.size();
            let data1: Vec<usize> = (0..n).map(|_| data.index(d)).collect();
            let data2: Vec<Vec<usize>> = (0..k).map(|_| (0..plan.tau2b).map(|_| data.index(d)).collect()).collect();
            let p1 = dd_phase1(ch, sc, &plan, &data1, &mut noise)?;
            let out = dd_phase2(ch, sc, &plan, &p1, &data2, &mut noise)?;
            let mut stage1 = Vec::with_capacity(k);
            for u in 0..k {
                let mut c = alphabet
                    .ber_count(&data2[u], &out.detected[u])
                    .map_err(|e| EstimationError::Plan(e.to_string()))?;
                if u == 0 {
                    let first = alphabet
                        .ber_count(&data1, &p1.detected)
                        .map_err(|e| EstimationError::Plan(e.to_string()))?;
                    c = c.merge(first);
                }
                stage1.push(c);
            }
            let slots = sc.coherence - (plan.tau1 + plan.tau2a + plan.tau2b);
            let stage2 = chain_data_stage(ch, sc, &out.result.cascaded, slots, &mut data, &mut noise)?;
            Ok(BlockTally {
                nmse: out.result.nmse_total,
                stage1,
                stage2,
                ris_symbol_errors: p1.ris_symbol_errors + out.ris_symbol_errors,
                ris_symbols: n + k * plan.tau2b,
            })
        }
    }
}

/// One coherence block (or `K` rotated blocks for [`Protocol::DdFair`]) of
/// the full estimator chain.
pub fn chain_trial(
    cfg: &ScenarioConfig,
    sys: &SystemConfig,
    protocol: Protocol,
    stream: &SeededStream,
) -> Result<Sample, TrialError> {
    let placement = cfg.geometry.placement(sys.users)?;
    let sc = cfg.scenario(sys, user_positions(&placement, sys.users, stream))?;
    let k = sc.users;
    let blocks = if protocol == Protocol::DdFair { k } else { 1 };
    let tc = sc.coherence as f64;
    let mut tallies = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let block = stream.fork(0x100 * b as u64);
        let ch = draw_channels(&sc, &mut block.fork(TAG_CHANNEL))?;
        let ch = if b == 0 {
            ch
        } else {
            let roles: Vec<usize> = (0..k).map(|j| (j + b) % k).collect();
            permute_users(&ch, &roles)
        };
        tallies.push(chain_block(&ch, &sc, protocol, &block)?);
    }
    let nb = blocks as f64;
    let se_role = |role: usize| {
        tallies
            .iter()
            .map(|t| {
                let c = t.stage1[role].merge(t.stage2[role]);
                (c.bits - c.bit_errors) as f64 / tc
            })
            .sum::<f64>()
            / nb
    };
    let total = |pick: fn(&BlockTally) -> &Vec<BitErrorCount>| {
        tallies
            .iter()
            .flat_map(|t| pick(t).iter().copied())
            .fold(BitErrorCount::default(), BitErrorCount::merge)
    };
    let mut sample = empty_sample();
    set(&mut sample, Metric::Nmse, tallies.iter().map(|t| t.nmse).sum::<f64>() / nb);
    set(&mut sample, Metric::BerStage2, total(|t| &t.stage2).rate());
    let roles: Vec<f64> = (0..k).map(se_role).collect();
    set(&mut sample, Metric::Se, roles.iter().sum::<f64>() / k as f64);
    set(&mut sample, Metric::SeTypical, roles[0]);
    if k > 1 {
        set(&mut sample, Metric::SeOthers, roles[1..].iter().sum::<f64>() / (k - 1) as f64);
    }
    if protocol != Protocol::Pd {
        set(&mut sample, Metric::BerStage1, total(|t| &t.stage1).rate());
        let errs: usize = tallies.iter().map(|t| t.ris_symbol_errors).sum();
        let syms: usize = tallies.iter().map(|t| t.ris_symbols).sum();
        set(&mut sample, Metric::SerRis, errs as f64 / syms as f64);
    }
    Ok(sample)
}

/// First sign change of `gap` along `xs`, located by linear interpolation.
pub fn first_crossing(xs: &[f64], gap: &[f64]) -> Option<f64> {
    for i in 0..xs.len().min(gap.len()) {
        if gap[i] == 0.0 {
            return Some(xs[i]);
        }
        if i + 1 < xs.len().min(gap.len()) && gap[i] * gap[i + 1] < 0.0 {
            return Some(xs[i] + (xs[i + 1] - xs[i]) * gap[i] / (gap[i] - gap[i + 1]));
        }
    }
    None
}

/// Simulated SE crossover of DD over PD per series, from the rows of
/// [`run`].
pub fn simulated_crossovers(rows: &[PointResult]) -> Vec<(String, Option<f64>)> {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.series.as_str()) {
            labels.push(&r.series);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let curve = |p: Protocol| -> Vec<(f64, f64)> {
                rows.iter()
                    .filter(|r| r.series == label && r.protocol == p)
                    .filter_map(|r| r.mean_of(Metric::Se).map(|se| (r.value, se)))
                    .collect()
            };
            let pd = curve(Protocol::Pd);
            let dd = curve(Protocol::Dd);
            let xs: Vec<f64> = pd.iter().map(|p| p.0).collect();
            let aligned = pd.len() == dd.len() && pd.iter().zip(&dd).all(|(a, b)| a.0 == b.0);
            let crossing = if aligned {
                let gap: Vec<f64> = pd.iter().zip(&dd).map(|(a, b)| b.1 - a.1).collect();
                first_crossing(&xs, &gap)
            } else {
                None
            };
            (label.to_string(), crossing)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_handles_missing_metrics() {
        let mut a = empty_sample();
        let mut b = empty_sample();
        set(&mut a, Metric::Se, 1.0);
        set(&mut b, Metric::Se, 3.0);
        let (mean, se) = aggregate(&[a, b]);
        assert_eq!(mean[Metric::Se.index()], Some(2.0));
        assert_eq!(se[Metric::Se.index()], Some(1.0));
        assert_eq!(mean[Metric::Nmse.index()], None);
    }

    #[test]
    fn crossing_interpolates_first_sign_change() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(first_crossing(&xs, &[1.0, 0.5, -0.5, 1.0]), Some(1.5));
        assert_eq!(first_crossing(&xs, &[1.0, 1.0, 1.0, 1.0]), None);
        assert_eq!(first_crossing(&xs, &[1.0, 0.0, 1.0, 1.0]), Some(1.0));
    }

    #[test]
    fn noiseless_link_is_error_free() {
        let inp = AnalysisInput {
            elements: 20,
            power: 1.0,
            noise_bs: 1e-30,
            noise_ris: 1e-30,
            sigma_g2: 1.0,
            sigma_h2: 1.0,
            order: ris_ddce_core::constellation::PskOrder::new(16).unwrap(),
            coherence: 500,
        };
        let s = SeededStream::new(3, 0);
        let pd = link_trial(&inp, Protocol::Pd, &s).unwrap();
        assert!(pd[Metric::Nmse.index()].unwrap() < 1e-16);
        assert_eq!(pd[Metric::BerStage2.index()], Some(0.0));
        assert!((pd[Metric::Se.index()].unwrap() - 480.0 / 500.0 * 4.0).abs() < 1e-12);
        let dd = link_trial(&inp, Protocol::Dd, &s).unwrap();
        assert!(dd[Metric::Nmse.index()].unwrap() < 1e-16, "{dd:?}");
        assert_eq!(dd[Metric::BerStage1.index()], Some(0.0));
        assert!((dd[Metric::Se.index()].unwrap() - (18.0 + 481.0) / 500.0 * 4.0).abs() < 1e-12);
    }
}
