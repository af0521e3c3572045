//! Scenario files: a TOML tree describing one experiment.
//!
//! Unknown keys are rejected. Powers and noise densities are given in dBm
//! and dBm/Hz and converted to watts only when a core [`Scenario`] or
//! [`AnalysisInput`] is built.

use std::fs;
use std::path::{Path, PathBuf};

use ris_ddce_core::analysis::AnalysisInput;
use ris_ddce_core::constellation::PskOrder;
use ris_ddce_core::model::{dbm_to_watts, noise_power, Correlation, LargeScale, PathLoss, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot apply override `{0}`: expected key=value with a dotted key")]
    Override(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Which simulator a scenario drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Single-antenna link without direct path, simulated exactly as the
    /// analytical model describes it.
    AnalysisLink,
    /// Full estimator chain: PD/DD estimation, phase configuration and
    /// data detection at a multi-antenna BS.
    EstimatorChain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Pd,
    Dd,
    /// DD with the typical-user role rotated over consecutive blocks.
    DdFair,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Pd => "pd",
            Protocol::Dd => "dd",
            Protocol::DdFair => "dd-fair",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Nmse,
    BerStage1,
    BerStage2,
    Se,
    SeTypical,
    SeOthers,
    SerRis,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Nmse,
        Metric::BerStage1,
        Metric::BerStage2,
        Metric::Se,
        Metric::SeTypical,
        Metric::SeOthers,
        Metric::SerRis,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Nmse => "nmse",
            Metric::BerStage1 => "ber_stage1",
            Metric::BerStage2 => "ber_stage2",
            Metric::Se => "se",
            Metric::SeTypical => "se_typical",
            Metric::SeOthers => "se_others",
            Metric::SerRis => "ser_ris",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PowerDbm,
    RisElements,
    SensingElements,
    Rho,
    NoiseFigureDb,
    NoiseRisDbmHz,
}

impl SweepAxis {
    /// CSV column header of the swept quantity.
    pub fn column(self) -> &'static str {
        match self {
            SweepAxis::PowerDbm => "P_dBm",
            SweepAxis::RisElements => "N",
            SweepAxis::SensingElements => "N_A",
            SweepAxis::Rho => "rho",
            SweepAxis::NoiseFigureDb => "NF_dB",
            SweepAxis::NoiseRisDbmHz => "N0_RIS_dBm_Hz",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepAxis::RisElements | SweepAxis::SensingElements)
    }
}

fn default_users() -> usize {
    1
}
fn default_rho() -> f64 {
    0.5
}
fn default_coherence() -> usize {
    500
}
fn default_bandwidth() -> f64 {
    1e6
}
fn default_noise() -> f64 {
    -169.0
}
fn default_true() -> bool {
    true
}
fn default_seed() -> u64 {
    1
}
fn default_trials() -> usize {
    2000
}
fn default_protocols() -> Vec<Protocol> {
    vec![Protocol::Pd, Protocol::Dd]
}
fn default_metrics() -> Vec<Metric> {
    vec![Metric::BerStage1, Metric::BerStage2, Metric::Se]
}
fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_users")]
    pub users: usize,
    pub bs_antennas: usize,
    pub ris_elements: usize,
    /// Number of hybrid elements; defaults to the number of users.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensing_elements: Option<usize>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub power_dbm: f64,
    pub psk: usize,
    #[serde(default = "default_coherence")]
    pub coherence: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_noise")]
    pub noise_bs_dbm_hz: f64,
    #[serde(default = "default_noise")]
    pub noise_ris_dbm_hz: f64,
    /// Added to both noise densities.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub noise_figure_db: f64,
    #[serde(default = "default_true")]
    pub direct_link: bool,
}

impl SystemConfig {
    pub fn sensing_count(&self) -> usize {
        self.sensing_elements.unwrap_or(self.users)
    }

    pub fn power_w(&self) -> f64 {
        dbm_to_watts(self.power_dbm)
    }

    pub fn noise_bs_w(&self) -> f64 {
        noise_power(self.noise_bs_dbm_hz + self.noise_figure_db, self.bandwidth_hz)
    }

    pub fn noise_ris_w(&self) -> f64 {
        noise_power(self.noise_ris_dbm_hz + self.noise_figure_db, self.bandwidth_hz)
    }

    pub fn order(&self) -> Result<PskOrder, ConfigError> {
        PskOrder::new(self.psk).map_err(|e| invalid(format!("psk: {e}")))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.users == 0 || self.bs_antennas == 0 || self.ris_elements == 0 {
            return Err(invalid("users, bs_antennas and ris_elements must be positive"));
        }
        let na = self.sensing_count();
        if na > self.ris_elements {
            return Err(invalid("more sensing elements than RIS elements"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(invalid("rho must lie in [0, 1]"));
        }
        self.order()?;
        let finite = [
            self.power_dbm,
            self.bandwidth_hz,
            self.noise_bs_dbm_hz,
            self.noise_ris_dbm_hz,
            self.noise_figure_db,
        ];
        if finite.iter().any(|v| !v.is_finite()) || !(self.bandwidth_hz > 0.0) {
            return Err(invalid("powers, densities and bandwidth must be finite (bandwidth positive)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossConfig {
    pub beta0_db: f64,
    pub d0_m: f64,
    pub alpha_ub: f64,
    pub alpha_ur: f64,
    pub alpha_rb: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        let d = PathLoss::default();
        Self {
            beta0_db: 10.0 * d.beta0.log10(),
            d0_m: d.d0,
            alpha_ub: d.alpha_ub,
            alpha_ur: d.alpha_ur,
            alpha_rb: d.alpha_rb,
        }
    }
}

impl PathLossConfig {
    pub fn pathloss(&self) -> PathLoss {
        PathLoss {
            beta0: 10f64.powf(self.beta0_db / 10.0),
            d0: self.d0_m,
            alpha_ub: self.alpha_ub,
            alpha_ur: self.alpha_ur,
            alpha_rb: self.alpha_rb,
        }
    }
}

/// Either link distances or node positions (fixed users or users drawn
/// uniformly in a square per trial).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_ris_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris_bs_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_bs_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_square_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_center: Option<[f64; 2]>,
}

/// Resolved form of [`GeometryConfig`].
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Distances {
        user_ris: f64,
        ris_bs: f64,
        user_bs: Option<f64>,
    },
    Fixed {
        bs: [f64; 2],
        ris: [f64; 2],
        users: Vec<[f64; 2]>,
    },
    RandomSquare {
        bs: [f64; 2],
        ris: [f64; 2],
        center: [f64; 2],
        side: f64,
    },
}

impl GeometryConfig {
    pub fn placement(&self, users: usize) -> Result<Placement, ConfigError> {
        let g = self;
        let distances = g.user_ris_m.is_some() || g.ris_bs_m.is_some() || g.user_bs_m.is_some();
        let positions =
            g.bs.is_some() || g.ris.is_some() || g.users.is_some() || g.user_square_m.is_some() || g.user_center.is_some();
        match (distances, positions) {
            (true, true) => Err(invalid("geometry mixes link distances and node positions")),
            (false, false) => Err(invalid("geometry needs link distances or node positions")),
            (true, false) => {
                let (Some(user_ris), Some(ris_bs)) = (g.user_ris_m, g.ris_bs_m) else {
                    return Err(invalid("geometry needs both user_ris_m and ris_bs_m"));
                };
                let all = [Some(user_ris), Some(ris_bs), g.user_bs_m];
                if all.iter().flatten().any(|d| !(d.is_finite() && *d > 0.0)) {
                    return Err(invalid("link distances must be positive"));
                }
                Ok(Placement::Distances {
                    user_ris,
                    ris_bs,
                    user_bs: g.user_bs_m,
                })
            }
            (false, true) => {
                let (Some(bs), Some(ris)) = (g.bs, g.ris) else {
                    return Err(invalid("geometry needs bs and ris positions"));
                };
                match (&g.users, g.user_square_m) {
                    (Some(list), None) if g.user_center.is_none() => {
                        if list.len() != users {
                            return Err(invalid(format!(
                                "geometry lists {} user positions for {users} users",
                                list.len()
                            )));
                        }
                        Ok(Placement::Fixed {
                            bs,
                            ris,
                            users: list.clone(),
                        })
                    }
                    (None, Some(side)) if side.is_finite() && side >= 0.0 => Ok(Placement::RandomSquare {
                        bs,
                        ris,
                        center: g.user_center.unwrap_or([0.0, 0.0]),
                        side,
                    }),
                    _ => Err(invalid(
                        "geometry needs either a users list or user_square_m (with optional user_center)",
                    )),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    #[serde(default)]
    pub bs: f64,
    #[serde(default)]
    pub ris: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Overrides applied to [`SystemConfig`] for one curve of a figure.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_figure_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_ris_dbm_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psk: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensing_elements: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<Protocol>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    pub system: SystemConfig,
    #[serde(default)]
    pub pathloss: PathLossConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub correlation: CorrelationConfig,
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesConfig>,
}

/// One curve of a figure: a label and its system parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub system: SystemConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with(text, &[])
    }

    /// Parses `text` after applying `key=value` overrides with dotted keys,
    /// e.g. `system.power_dbm=10`.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: toml::Table = text.parse()?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ScenarioConfig = doc.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_with(&text, overrides)
    }

    /// TOML text that parses back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.protocols.is_empty() || self.metrics.is_empty() {
            return Err(invalid("at least one protocol and one metric are required"));
        }
        self.system.validate()?;
        self.geometry.placement(self.system.users)?;
        let v = &self.sweep.values;
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("sweep values must be finite and non-empty"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("sweep values must be strictly increasing"));
        }
        if self.sweep.axis.is_integer() && v.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
            return Err(invalid("element-count sweeps need non-negative integer values"));
        }
        if !(0.0..1.0).contains(&self.correlation.bs) || !(0.0..1.0).contains(&self.correlation.ris) {
            return Err(invalid("correlation coefficients must lie in [0, 1)"));
        }
        let mut labels: Vec<&str> = self.series.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("series labels must be unique"));
        }
        for s in self.series() {
            for &x in v {
                let sys = self.point_system(&s.system, x);
                sys.validate()?;
                self.check_model(&sys)?;
            }
        }
        Ok(())
    }

    fn check_model(&self, sys: &SystemConfig) -> Result<(), ConfigError> {
        match self.model {
            ModelKind::AnalysisLink => {
                if sys.users != 1 || sys.bs_antennas != 1 {
                    return Err(invalid("the analysis-link model needs one user and one BS antenna"));
                }
                if sys.ris_elements < 3 {
                    return Err(invalid("the analysis-link model needs at least three RIS elements"));
                }
                if !matches!(self.geometry.placement(1)?, Placement::Distances { user_bs: None, .. }) {
                    return Err(invalid(
                        "the analysis-link model needs user_ris_m and ris_bs_m and no direct link",
                    ));
                }
                if sys.coherence <= sys.ris_elements + 1 {
                    return Err(invalid("coherence must exceed the pilot overhead"));
                }
            }
            ModelKind::EstimatorChain => {
                if sys.users > 1 && sys.bs_antennas < sys.users {
                    return Err(invalid("zero-forcing detection needs at least as many antennas as users"));
                }
                let overhead = ris_ddce_core::pd::pd_overhead(
                    sys.users,
                    sys.bs_antennas,
                    sys.ris_elements,
                    sys.sensing_count(),
                );
                if sys.coherence <= overhead {
                    return Err(invalid(format!(
                        "coherence {} does not exceed the pilot overhead {overhead}",
                        sys.coherence
                    )));
                }
            }
        }
        Ok(())
    }

    /// Curves of the figure; a scenario without `[[series]]` has one
    /// unlabeled curve.
    pub fn series(&self) -> Vec<Series> {
        if self.series.is_empty() {
            return vec![Series {
                label: String::new(),
                system: self.system.clone(),
            }];
        }
        self.series
            .iter()
            .map(|s| {
                let mut sys = self.system.clone();
                if let Some(v) = s.power_dbm {
                    sys.power_dbm = v;
                }
                if let Some(v) = s.noise_figure_db {
                    sys.noise_figure_db = v;
                }
                if let Some(v) = s.noise_ris_dbm_hz {
                    sys.noise_ris_dbm_hz = v;
                }
                if let Some(v) = s.psk {
                    sys.psk = v;
                }
                if let Some(v) = s.rho {
                    sys.rho = v;
                }
                if let Some(v) = s.sensing_elements {
                    sys.sensing_elements = Some(v);
                }
                Series {
                    label: s.label.clone(),
                    system: sys,
                }
            })
            .collect()
    }

    /// System parameters with the swept quantity set to `value`.
    pub fn point_system(&self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut sys = base.clone();
        match self.sweep.axis {
            SweepAxis::PowerDbm => sys.power_dbm = value,
            SweepAxis::RisElements => sys.ris_elements = value as usize,
            SweepAxis::SensingElements => sys.sensing_elements = Some(value as usize),
            SweepAxis::Rho => sys.rho = value,
            SweepAxis::NoiseFigureDb => sys.noise_figure_db = value,
            SweepAxis::NoiseRisDbmHz => sys.noise_ris_dbm_hz = value,
        }
        sys
    }

    pub fn correlation(&self) -> Correlation {
        Correlation {
            bs: self.correlation.bs,
            ris: self.correlation.ris,
        }
    }

    /// Core scenario for `sys` with the given user positions (ignored for
    /// distance geometries).
    pub fn scenario(&self, sys: &SystemConfig, users: Option<Vec<[f64; 2]>>) -> Result<Scenario, ConfigError> {
        let pl = self.pathloss.pathloss();
        let large_scale = match self.geometry.placement(sys.users)? {
            Placement::Distances {
                user_ris,
                ris_bs,
                user_bs,
            } => {
                let gain = |d: f64, a: f64, link: &'static str| pl.gain(d, a, link).map_err(|e| invalid(e.to_string()));
                let ub = match user_bs {
                    Some(d) if sys.direct_link => gain(d, pl.alpha_ub, "user-BS")?,
                    _ => 0.0,
                };
                LargeScale::Gains {
                    user_bs: vec![ub; sys.users],
                    user_ris: vec![gain(user_ris, pl.alpha_ur, "user-RIS")?; sys.users],
                    ris_bs: gain(ris_bs, pl.alpha_rb, "RIS-BS")?,
                }
            }
            Placement::Fixed { bs, ris, users: fixed } => LargeScale::Geometry {
                bs,
                ris,
                users: users.unwrap_or(fixed),
                pathloss: pl,
                direct_link: sys.direct_link,
            },
            Placement::RandomSquare { bs, ris, center, .. } => LargeScale::Geometry {
                bs,
                ris,
                users: users.unwrap_or_else(|| vec![center; sys.users]),
                pathloss: pl,
                direct_link: sys.direct_link,
            },
        };
        let na = sys.sensing_count();
        let sc = Scenario {
            users: sys.users,
            bs_antennas: sys.bs_antennas,
            ris_elements: sys.ris_elements,
            sensing: Scenario::trailing_sensing(sys.ris_elements, na),
            rho_sensing: vec![sys.rho; na],
            power: sys.power_w(),
            noise_bs: sys.noise_bs_w(),
            noise_ris: sys.noise_ris_w(),
            order: sys.order()?,
            coherence: sys.coherence,
            large_scale,
            correlation: self.correlation(),
        };
        sc.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(sc)
    }

    /// Analytical-model input; only for the analysis-link model.
    pub fn analysis_input(&self, sys: &SystemConfig) -> Result<AnalysisInput, ConfigError> {
        let pl = self.pathloss.pathloss();
        let Placement::Distances { user_ris, ris_bs, .. } = self.geometry.placement(1)? else {
            return Err(invalid("analysis needs a distance geometry"));
        };
        let gain = |d: f64, a: f64, link: &'static str| pl.gain(d, a, link).map_err(|e| invalid(e.to_string()));
        Ok(AnalysisInput {
            elements: sys.ris_elements,
            power: sys.power_w(),
            noise_bs: sys.noise_bs_w(),
            noise_ris: sys.noise_ris_w(),
            sigma_g2: gain(user_ris, pl.alpha_ur, "user-RIS")?,
            sigma_h2: gain(ris_bs, pl.alpha_rb, "RIS-BS")?,
            order: sys.order()?,
            coherence: sys.coherence,
        })
    }
}

/// Sets `key` (dotted path) in `doc` to `value`, parsed as a TOML value
/// when possible and as a string otherwise.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let bad = || ConfigError::Override(assignment.to_string());
    let (key, raw) = assignment.split_once('=').ok_or_else(bad)?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(bad());
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().ok_or_else(bad)?;
    let mut table = doc;
    for p in parts {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(bad)?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINK: &str = r#"
name = "t"
model = "analysis-link"
[system]
bs_antennas = 1
ris_elements = 20
power_dbm = 5.0
psk = 8
noise_ris_dbm_hz = -125.0
[geometry]
user_ris_m = 100.0
ris_bs_m = 100.0
[sweep]
axis = "power_dbm"
values = [0.0, 5.0]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ScenarioConfig::from_toml(LINK).unwrap();
        assert_eq!(c.trials, 2000);
        assert_eq!(c.system.coherence, 500);
        assert_eq!(c.system.sensing_count(), 1);
        assert!((c.pathloss.pathloss().beta0 - 1e-2).abs() < 1e-15);
        let inp = c.analysis_input(&c.system).unwrap();
        assert!((inp.sigma_g2 - 1e-2 * 100f64.powf(-2.2)).abs() < 1e-20);
        assert!((inp.noise_bs - 10f64.powf(-16.9) * 1e-3 * 1e6).abs() < 1e-25);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = LINK.replace("psk = 8", "psk = 8\nbogus = 1");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = ScenarioConfig::from_toml_with(LINK, &["system.psk=16".into(), "seed = 9".into()]).unwrap();
        assert_eq!(c.system.psk, 16);
        assert_eq!(c.seed, 9);
        assert!(ScenarioConfig::from_toml_with(LINK, &["system.psk=5".into()]).is_err());
        assert!(matches!(
            ScenarioConfig::from_toml_with(LINK, &["novalue".into()]),
            Err(ConfigError::Override(_))
        ));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ScenarioConfig::from_toml(LINK).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn invalid_sweeps_and_models_are_rejected() {
        let unsorted = LINK.replace("values = [0.0, 5.0]", "values = [5.0, 0.0]");
        assert!(matches!(ScenarioConfig::from_toml(&unsorted), Err(ConfigError::Invalid(_))));
        let mimo = LINK.replace("bs_antennas = 1", "bs_antennas = 2");
        assert!(matches!(ScenarioConfig::from_toml(&mimo), Err(ConfigError::Invalid(_))));
        let mixed = LINK.replace("ris_bs_m = 100.0", "ris_bs_m = 100.0\nbs = [0.0, 0.0]");
        assert!(matches!(ScenarioConfig::from_toml(&mixed), Err(ConfigError::Invalid(_))));
    }
}
