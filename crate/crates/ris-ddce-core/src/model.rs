//! Channel statistics and received-signal synthesis for the hybrid RIS uplink.
//!
//! Signals at the BS combine the direct path and the reflected path scaled by
//! the per-element reflection amplitude `ρ`; sensing elements additionally
//! deliver `η = √(1−ρ²)` of the impinging signal to their own receivers.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::constellation::PskOrder;
use crate::linalg::{CMatrix, CVector, LinalgError, SeededStream, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidScenario(String),
    /// A link has zero length, so the path-loss law is singular.
    Geometry(&'static str),
    Shape(LinalgError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidScenario(msg) => write!(f, "invalid scenario: {msg}"),
            ModelError::Geometry(link) => write!(f, "zero-length {link} link"),
            ModelError::Shape(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ModelError {}

impl From<LinalgError> for ModelError {
    fn from(e: LinalgError) -> Self {
        ModelError::Shape(e)
    }
}

fn invalid(msg: &str) -> ModelError {
    ModelError::InvalidScenario(String::from(msg))
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * libm::log10(w / 1e-3)
}

/// Noise power in watts for a density in dBm/Hz over `bandwidth_hz`.
pub fn noise_power(density_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(density_dbm_hz) * bandwidth_hz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    /// Linear gain at the reference distance.
    pub beta0: f64,
    pub d0: f64,
    pub alpha_ub: f64,
    pub alpha_ur: f64,
    pub alpha_rb: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            beta0: 1e-2,
            d0: 1.0,
            alpha_ub: 4.0,
            alpha_ur: 2.2,
            alpha_rb: 2.2,
        }
    }
}

impl PathLoss {
    /// `β₀ (d/d₀)^(−α)`.
    pub fn gain(&self, distance: f64, alpha: f64, link: &'static str) -> Result<f64, ModelError> {
        if !(distance > 0.0) || !distance.is_finite() {
            return Err(ModelError::Geometry(link));
        }
        Ok(self.beta0 * libm::pow(distance / self.d0, -alpha))
    }
}

/// How the large-scale gains of a scenario are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum LargeScale {
    Geometry {
        bs: [f64; 2],
        ris: [f64; 2],
        users: Vec<[f64; 2]>,
        pathloss: PathLoss,
        /// When false the user-BS link is blocked (zero gain).
        direct_link: bool,
    },
    Gains {
        user_bs: Vec<f64>,
        user_ris: Vec<f64>,
        ris_bs: f64,
    },
}

/// Resolved per-link gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    pub user_bs: Vec<f64>,
    pub user_ris: Vec<f64>,
    pub ris_bs: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

impl LargeScale {
    pub fn resolve(&self) -> Result<Gains, ModelError> {
        match self {
            LargeScale::Gains {
                user_bs,
                user_ris,
                ris_bs,
            } => Ok(Gains {
                user_bs: user_bs.clone(),
                user_ris: user_ris.clone(),
                ris_bs: *ris_bs,
            }),
            LargeScale::Geometry {
                bs,
                ris,
                users,
                pathloss,
                direct_link,
            } => {
                let mut user_bs = Vec::with_capacity(users.len());
                let mut user_ris = Vec::with_capacity(users.len());
                for u in users {
                    user_bs.push(if *direct_link {
                        pathloss.gain(dist(*u, *bs), pathloss.alpha_ub, "user-BS")?
                    } else {
                        0.0
                    });
                    user_ris.push(pathloss.gain(dist(*u, *ris), pathloss.alpha_ur, "user-RIS")?);
                }
                let ris_bs = pathloss.gain(dist(*ris, *bs), pathloss.alpha_rb, "RIS-BS")?;
                Ok(Gains {
                    user_bs,
                    user_ris,
                    ris_bs,
                })
            }
        }
    }
}

/// Exponential spatial correlation `r^|i−j|`; zero means uncorrelated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Correlation {
    pub bs: f64,
    pub ris: f64,
}

/// Lower Cholesky factor of the `n x n` exponential correlation matrix.
pub fn exponential_correlation_factor(n: usize, r: f64) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let target = libm::pow(r, (i - j) as f64);
            let mut s = target;
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = if i == j {
                libm::sqrt(s.max(0.0))
            } else {
                s / l[j * n + j]
            };
        }
    }
    l
}

fn correlate(x: &[C64], factor: &Option<Vec<f64>>) -> Vec<C64> {
    match factor {
        None => x.to_vec(),
        Some(l) => {
            let n = x.len();
            (0..n)
                .map(|i| (0..=i).map(|j| x[j] * l[i * n + j]).sum())
                .collect()
        }
    }
}

/// Physical and protocol parameters of one link-level experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: usize,
    pub bs_antennas: usize,
    pub ris_elements: usize,
    /// Zero-based, strictly increasing indices of the sensing elements.
    pub sensing: Vec<usize>,
    /// Reflection amplitude of each sensing element, in sensing order.
    pub rho_sensing: Vec<f64>,
    /// Transmit power in watts.
    pub power: f64,
    pub noise_bs: f64,
    pub noise_ris: f64,
    pub order: PskOrder,
    pub coherence: usize,
    pub large_scale: LargeScale,
    pub correlation: Correlation,
}

impl Scenario {
    /// Sensing set made of the last `count` elements.
    pub fn trailing_sensing(ris_elements: usize, count: usize) -> Vec<usize> {
        (ris_elements.saturating_sub(count)..ris_elements).collect()
    }

    pub fn sensing_count(&self) -> usize {
        self.sensing.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.users;
        let n = self.ris_elements;
        if k == 0 || self.bs_antennas == 0 || n == 0 {
            return Err(invalid("users, antennas and RIS elements must be positive"));
        }
        if self.sensing.len() > n {
            return Err(invalid("more sensing elements than RIS elements"));
        }
        if self.sensing.windows(2).any(|w| w[0] >= w[1]) || self.sensing.iter().any(|&i| i >= n) {
            return Err(invalid("sensing indices must be strictly increasing and below N"));
        }
        if self.rho_sensing.len() != self.sensing.len() {
            return Err(invalid("one reflection amplitude per sensing element is required"));
        }
        if self.rho_sensing.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(invalid("reflection amplitudes must lie in [0, 1]"));
        }
        if !(self.power >= 0.0) || !(self.noise_bs >= 0.0) || !(self.noise_ris >= 0.0) {
            return Err(invalid("powers must be non-negative"));
        }
        if let LargeScale::Geometry { users, .. } = &self.large_scale {
            if users.len() != k {
                return Err(invalid("one position per user is required"));
            }
        }
        if let LargeScale::Gains {
            user_bs, user_ris, ..
        } = &self.large_scale
        {
            if user_bs.len() != k || user_ris.len() != k {
                return Err(invalid("one gain per user is required"));
            }
        }
        Ok(())
    }

    /// Reflection amplitudes for all N elements (1 outside the sensing set).
    pub fn rho_full(&self) -> Vec<f64> {
        let mut rho = vec![1.0; self.ris_elements];
        for (&i, &r) in self.sensing.iter().zip(&self.rho_sensing) {
            rho[i] = r;
        }
        rho
    }

    /// Absorption amplitudes `√(1−ρ²)` of the sensing elements.
    pub fn eta_sensing(&self) -> Vec<f64> {
        self.rho_sensing
            .iter()
            .map(|r| libm::sqrt((1.0 - r * r).max(0.0)))
            .collect()
    }

    /// Indices of the purely reflecting elements.
    pub fn reflecting(&self) -> Vec<usize> {
        let mut is_sensing = vec![false; self.ris_elements];
        for &i in &self.sensing {
            is_sensing[i] = true;
        }
        (0..self.ris_elements).filter(|&i| !is_sensing[i]).collect()
    }
}

/// One draw of all small-scale channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Direct user-BS channels, `M x K`.
    pub direct: CMatrix,
    /// RIS-BS channel, `M x N`.
    pub ris_bs: CMatrix,
    /// User-RIS channels, `N x K`.
    pub user_ris: CMatrix,
}

impl ChannelRealization {
    /// `H diag(g_k)`, the reflected part of user `k`'s cascaded channel.
    pub fn reflected(&self, k: usize) -> CMatrix {
        let g = self.user_ris.column(k);
        self.ris_bs.scale_columns(&g)
    }

    /// `[h_d,k, H diag(g_k)]`, `M x (N+1)`.
    pub fn cascaded(&self, k: usize) -> CMatrix {
        let m = self.ris_bs.rows();
        let n = self.ris_bs.cols();
        CMatrix::from_fn(m, n + 1, |r, c| {
            if c == 0 {
                self.direct[(r, k)]
            } else {
                self.ris_bs[(r, c - 1)] * self.user_ris[(c - 1, k)]
            }
        })
    }

    /// User-RIS channels restricted to the sensing rows, `N_A x K`.
    pub fn user_ris_sensing(&self, sensing: &[usize]) -> CMatrix {
        CMatrix::from_fn(sensing.len(), self.user_ris.cols(), |r, c| {
            self.user_ris[(sensing[r], c)]
        })
    }
}

/// Draws `(H_d, H, G)` with the scenario's large-scale gains and correlation.
pub fn draw_channels(sc: &Scenario, stream: &mut SeededStream) -> Result<ChannelRealization, ModelError> {
    sc.validate()?;
    let gains = sc.large_scale.resolve()?;
    let (m, n, k) = (sc.bs_antennas, sc.ris_elements, sc.users);
    let factor = |dim: usize, r: f64| {
        if r == 0.0 {
            None
        } else {
            Some(exponential_correlation_factor(dim, r))
        }
    };
    let lb = factor(m, sc.correlation.bs);
    let lr = factor(n, sc.correlation.ris);

    let mut direct = CMatrix::zeros(m, k);
    for u in 0..k {
        let raw: Vec<C64> = (0..m).map(|_| stream.complex_normal(1.0)).collect();
        let s = libm::sqrt(gains.user_bs[u]);
        for (r, z) in correlate(&raw, &lb).into_iter().enumerate() {
            direct[(r, u)] = z * s;
        }
    }
    let mut user_ris = CMatrix::zeros(n, k);
    for u in 0..k {
        let raw: Vec<C64> = (0..n).map(|_| stream.complex_normal(1.0)).collect();
        let s = libm::sqrt(gains.user_ris[u]);
        for (r, z) in correlate(&raw, &lr).into_iter().enumerate() {
            user_ris[(r, u)] = z * s;
        }
    }
    let mut bar = CMatrix::zeros(m, n);
    for r in 0..m {
        for c in 0..n {
            bar[(r, c)] = stream.complex_normal(1.0);
        }
    }
    // H = Σ_B^{1/2} H̄ Σ_R^{1/2 T}: correlate columns, then rows
    if lb.is_some() {
        for c in 0..n {
            let col = correlate(&bar.column(c), &lb);
            bar.set_column(c, &col);
        }
    }
    if lr.is_some() {
        for r in 0..m {
            let row = correlate(bar.row(r), &lr);
            for (c, z) in row.into_iter().enumerate() {
                bar[(r, c)] = z;
            }
        }
    }
    let ris_bs = bar.scale(C64::new(libm::sqrt(gains.ris_bs), 0.0));
    Ok(ChannelRealization {
        direct,
        ris_bs,
        user_ris,
    })
}

fn shape_err(expected: usize, found: usize) -> ModelError {
    ModelError::Shape(LinalgError::Shape {
        expected: (expected, 1),
        found: (found, 1),
    })
}

/// BS observation for reflection amplitudes `rho` (length N).
pub fn rx_bs_with_reflection(
    ch: &ChannelRealization,
    power: f64,
    rho: &[f64],
    phi: &[C64],
    s: &[C64],
    noise: Option<&[C64]>,
) -> Result<CVector, ModelError> {
    let (m, n) = ch.ris_bs.shape();
    let k = ch.user_ris.cols();
    if phi.len() != n {
        return Err(shape_err(n, phi.len()));
    }
    if rho.len() != n {
        return Err(shape_err(n, rho.len()));
    }
    if s.len() != k {
        return Err(shape_err(k, s.len()));
    }
    let mut reflected = vec![C64::new(0.0, 0.0); n];
    for (i, w) in reflected.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (u, su) in s.iter().enumerate() {
            acc += ch.user_ris[(i, u)] * su;
        }
        *w = acc * phi[i] * rho[i];
    }
    let mut y = ch.ris_bs.mul_vec(&reflected)?;
    let direct = ch.direct.mul_vec(s)?;
    let amp = libm::sqrt(power);
    for (yi, di) in y.iter_mut().zip(direct.iter()) {
        *yi = (*yi + di) * amp;
    }
    if let Some(nz) = noise {
        if nz.len() != m {
            return Err(shape_err(m, nz.len()));
        }
        for (yi, ni) in y.iter_mut().zip(nz) {
            *yi += ni;
        }
    }
    Ok(y)
}

/// `√P Σ_k H_c,k diag([1;ρ]) [1;φ] s_k + n` with the scenario's reflection split.
pub fn rx_bs(
    ch: &ChannelRealization,
    sc: &Scenario,
    phi: &[C64],
    s: &[C64],
    noise: Option<&[C64]>,
) -> Result<CVector, ModelError> {
    rx_bs_with_reflection(ch, sc.power, &sc.rho_full(), phi, s, noise)
}

/// `√P diag(η) diag(φ_A) Σ_k g_k^A s_k + n` at the sensing elements.
pub fn rx_ris(
    ch: &ChannelRealization,
    sc: &Scenario,
    phi_sensing: &[C64],
    s: &[C64],
    noise: Option<&[C64]>,
) -> Result<CVector, ModelError> {
    let na = sc.sensing.len();
    let k = ch.user_ris.cols();
    if phi_sensing.len() != na {
        return Err(shape_err(na, phi_sensing.len()));
    }
    if s.len() != k {
        return Err(shape_err(k, s.len()));
    }
    let eta = sc.eta_sensing();
    let amp = libm::sqrt(sc.power);
    let mut y: CVector = sc
        .sensing
        .iter()
        .enumerate()
        .map(|(i, &el)| {
            let mut acc = C64::new(0.0, 0.0);
            for (u, su) in s.iter().enumerate() {
                acc += ch.user_ris[(el, u)] * su;
            }
            acc * phi_sensing[i] * eta[i] * amp
        })
        .collect();
    if let Some(nz) = noise {
        if nz.len() != na {
            return Err(shape_err(na, nz.len()));
        }
        for (yi, ni) in y.iter_mut().zip(nz) {
            *yi += ni;
        }
    }
    Ok(y)
}
