//! Analytical sweeps and CSV output.
//!
//! Floats are written with 9 significant digits in the style of C's `%.9g`;
//! cells of metrics that do not apply are left empty.

use std::io::Write;

use ris_ddce_core::analysis::{
    ber_dd1, ber_dd2, ber_pd, lemma1_moments, se_dd_from_ber, se_pd_from_ber, AnalysisError, AnalysisInput,
};
use thiserror::Error;

use crate::config::{ConfigError, ModelKind, ScenarioConfig};
use crate::sim::PointResult;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("analysis failed at {axis} = {value}: {source}")]
    Analysis {
        axis: &'static str,
        value: f64,
        source: AnalysisError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `x` formatted like `printf("%.9g", x)`.
pub fn fmt_g9(x: f64) -> String {
    const PREC: i32 = 9;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_g9).unwrap_or_default()
}

/// Writes simulation rows in long format: `series, protocol, <axis>,
/// trials, failed`, then a mean and standard-error column per requested
/// metric, and `wall_time_s` when `timing` is set.
pub fn write_simulation_csv<W: Write>(
    out: W,
    cfg: &ScenarioConfig,
    rows: &[PointResult],
    timing: bool,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["series", "protocol", cfg.sweep.axis.column(), "trials", "failed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in &cfg.metrics {
        header.push(m.label().to_string());
        header.push(format!("{}_se", m.label()));
    }
    if timing {
        header.push("wall_time_s".into());
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.series.clone(),
            r.protocol.label().to_string(),
            fmt_g9(r.value),
            r.trials.to_string(),
            r.failed.to_string(),
        ];
        for &m in &cfg.metrics {
            rec.push(cell(r.mean_of(m)));
            rec.push(cell(r.stderr_of(m)));
        }
        if timing {
            rec.push(fmt_g9(r.wall_time_s));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Analytical quantities at one sweep point. DD entries are `None` where the
/// Gaussian approximation breaks down.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub series: String,
    pub value: f64,
    pub se_pd: f64,
    pub se_dd: Option<f64>,
    pub ber_pd: f64,
    pub ber_dd1: f64,
    pub ber_dd2: Option<f64>,
}

/// `(BER_PD, SE_PD, BER_DD1, Some((BER_DD2, SE_DD)))`; the DD pair is `None`
/// where the Gaussian approximation breaks down.
pub type LinkFigures = (f64, f64, f64, Option<(f64, f64)>);

/// PD and DD quantities at `inp`.
pub fn analysis_row(inp: &AnalysisInput) -> Result<LinkFigures, AnalysisError> {
    let (bpd, _) = ber_pd(inp)?;
    let (b1, p1) = ber_dd1(inp.power, inp.sigma_g2, inp.noise_ris, inp.order)?;
    let xi = lemma1_moments(&p1)?;
    let dd = match ber_dd2(inp, &xi) {
        Ok((b2, _)) => Some((b2, se_dd_from_ber(inp, b1, b2))),
        Err(AnalysisError::ApproximationBreakdown { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((bpd, se_pd_from_ber(inp, bpd), b1, dd))
}

/// Evaluates the analytical model over every series and sweep value.
pub fn analyze(cfg: &ScenarioConfig) -> Result<Vec<AnalysisRow>, ReportError> {
    cfg.validate()?;
    if cfg.model != ModelKind::AnalysisLink {
        return Err(ConfigError::Invalid("analysis needs an analysis-link scenario".into()).into());
    }
    let axis = cfg.sweep.axis.column();
    let mut rows = Vec::new();
    for series in cfg.series() {
        for &value in &cfg.sweep.values {
            let sys = cfg.point_system(&series.system, value);
            let inp = cfg.analysis_input(&sys)?;
            let (ber_pd, se_pd, ber_dd1, dd) =
                analysis_row(&inp).map_err(|source| ReportError::Analysis { axis, value, source })?;
            rows.push(AnalysisRow {
                series: series.label.clone(),
                value,
                se_pd,
                se_dd: dd.map(|d| d.1),
                ber_pd,
                ber_dd1,
                ber_dd2: dd.map(|d| d.0),
            });
        }
    }
    Ok(rows)
}

/// Columns `<axis>, SE_PD, SE_DD, BER_PD, BER_DD1, BER_DD2`, plus a trailing
/// `series` column when the scenario defines several curves.
pub fn write_analysis_csv<W: Write>(out: W, cfg: &ScenarioConfig, rows: &[AnalysisRow]) -> Result<(), ReportError> {
    let labelled = !cfg.series.is_empty();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![cfg.sweep.axis.column(), "SE_PD", "SE_DD", "BER_PD", "BER_DD1", "BER_DD2"];
    if labelled {
        header.push("series");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            fmt_g9(r.value),
            fmt_g9(r.se_pd),
            cell(r.se_dd),
            fmt_g9(r.ber_pd),
            fmt_g9(r.ber_dd1),
            cell(r.ber_dd2),
        ];
        if labelled {
            rec.push(r.series.clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (3.6, "3.6"),
            (-5.0, "-5"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0 * 1e-7, "6.66666667e-08"),
            (3.992, "3.992"),
            (99999999.95, "100000000"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g9(x), want, "{x}");
        }
    }
}
