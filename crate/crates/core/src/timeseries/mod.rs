//! Annual metric series and the econometrics run over them.

mod fdr;
mod forecast;
mod granger;
mod ols;
mod series;

pub use fdr::bh_fdr;
pub use forecast::{forecast, Forecast, ForecastStep, MAX_AR_ORDER, MIN_FORECAST_LENGTH};
pub use granger::{
    fit_restricted_unrestricted, granger_grid, granger_test, report_min_adjusted, GrangerCell,
    GrangerConfig, GrangerLagRow, GrangerResult, GrangerTest, LagFit, MinAdjusted,
    DEFAULT_MAX_LAG, SIGNIFICANCE,
};
pub use ols::{ols, OlsFit};
pub use series::{read_series_csv, write_series_csv, MetricSeries};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `x_t - x_{t-1}` between consecutive points. A difference touching a
/// missing value, or spanning a gap in the years, is missing.
pub fn first_difference(series: &MetricSeries) -> Result<MetricSeries> {
    if series.len() < 2 {
        return Err(Error::Invalid(format!(
            "series {} needs at least 2 points to difference",
            series.name
        )));
    }
    let mut out = MetricSeries::new(series.name.clone(), series.unit.clone());
    for w in series.points().windows(2) {
        let ((y0, v0), (y1, v1)) = (w[0], w[1]);
        let d = match (v0, v1) {
            (Some(a), Some(b)) if y1 == y0 + 1 => Some(b - a),
            _ => None,
        };
        out.try_push(y1, d)?;
    }
    Ok(out)
}

/// Running sum, treating missing values as breaks that reset nothing but
/// stay missing.
pub fn cumulative_sum(series: &MetricSeries, start: f64) -> MetricSeries {
    let mut out = MetricSeries::new(series.name.clone(), series.unit.clone());
    let mut acc = start;
    for &(y, v) in series.points() {
        out.push(
            y,
            v.map(|v| {
                acc += v;
                acc
            }),
        );
    }
    out
}

/// 5% critical value of the trend-included unit-root t statistic for samples
/// of roughly 25 observations.
pub const TREND_UNIT_ROOT_CRITICAL: f64 = -3.60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityDiagnostic {
    pub t_statistic: f64,
    pub critical: f64,
    /// The unit root could not be rejected.
    pub nonstationary: bool,
}

/// Augmented trend regression `dy_t = a + b t + rho y_{t-1} + d dy_{t-1}`;
/// reports the t statistic of `rho`. `None` when the series is too short or
/// the regression is degenerate.
pub fn stationarity_diagnostic(series: &MetricSeries) -> Option<StationarityDiagnostic> {
    let v = series.present_values();
    if v.len() < 8 {
        return None;
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for t in 2..v.len() {
        rows.push(vec![1.0, t as f64, v[t - 1], v[t - 1] - v[t - 2]]);
        y.push(v[t] - v[t - 1]);
    }
    let fit = ols(&rows, &y)?;
    let se = fit.std_error(2);
    if !(se > 0.0) {
        return None;
    }
    let t = fit.coefficients[2] / se;
    Some(StationarityDiagnostic {
        t_statistic: t,
        critical: TREND_UNIT_ROOT_CRITICAL,
        nonstationary: t > TREND_UNIT_ROOT_CRITICAL,
    })
}
