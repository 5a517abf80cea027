use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ols::ols;
use super::MetricSeries;
use crate::error::{Error, Result};

pub const MIN_FORECAST_LENGTH: usize = 10;
pub const MAX_AR_ORDER: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastStep {
    pub year: i32,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// e.g. `AR(2)+drift`.
    pub model: String,
    pub order: usize,
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub sigma2: f64,
    pub level: f64,
    pub steps: Vec<ForecastStep>,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

fn design(values: &[f64], order: usize, start: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows = (start..values.len())
        .map(|t| {
            std::iter::once(1.0)
                .chain((1..=order).map(|k| values[t - k]))
                .collect()
        })
        .collect();
    (rows, values[start..].to_vec())
}

/// The trailing run of consecutive years with present values.
fn trailing_run(series: &MetricSeries) -> (i32, Vec<f64>) {
    let mut out = Vec::new();
    let mut last_year = None;
    let mut next_year = None;
    for &(y, v) in series.points().iter().rev() {
        match (v, next_year) {
            (Some(v), None) => {
                last_year = Some(y);
                out.push(v);
            }
            (Some(v), Some(n)) if y == n - 1 => out.push(v),
            (None, None) => continue,
            _ => break,
        }
        next_year = Some(y);
    }
    out.reverse();
    (last_year.unwrap_or(0), out)
}

/// Autoregressive forecast with drift. The order (0 to 3) minimises AIC on a
/// common estimation sample; bands are Gaussian with variance propagated
/// through the AR recursion.
pub fn forecast(series: &MetricSeries, horizon: usize, level: f64) -> Result<Forecast> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Invalid(format!("confidence level {level} outside (0, 1)")));
    }
    let (last_year, values) = trailing_run(series);
    if values.len() < MIN_FORECAST_LENGTH {
        return Err(Error::Invalid(format!(
            "series {} has {} consecutive points, need {MIN_FORECAST_LENGTH}",
            series.name,
            values.len()
        )));
    }

    let mut best: Option<(usize, f64)> = None;
    for order in 0..=MAX_AR_ORDER {
        let (rows, y) = design(&values, order, MAX_AR_ORDER);
        let Some(fit) = ols(&rows, &y) else { continue };
        let n = y.len() as f64;
        let aic = n * (fit.rss / n).ln() + 2.0 * (order + 1) as f64;
        if best.is_none_or(|(_, b)| aic < b) {
            best = Some((order, aic));
        }
    }
    let (order, _) = best.ok_or(Error::RankDeficient { lag: 0 })?;
    let (rows, y) = design(&values, order, order);
    let fit = ols(&rows, &y).ok_or(Error::RankDeficient { lag: order })?;
    let intercept = fit.coefficients[0];
    let ar = fit.coefficients[1..].to_vec();
    let sigma2 = fit.sigma2();

    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0);
    let mut history = values.clone();
    let mut psi = vec![1.0];
    let mut var_sum = 0.0;
    let mut steps = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let t = history.len();
        let point = intercept
            + ar.iter()
                .enumerate()
                .map(|(i, phi)| phi * history[t - 1 - i])
                .sum::<f64>();
        history.push(point);
        var_sum += psi[h] * psi[h];
        let next_psi: f64 = (1..=ar.len().min(h + 1))
            .map(|i| ar[i - 1] * psi[h + 1 - i])
            .sum();
        psi.push(next_psi);
        let half = z * (sigma2 * var_sum).sqrt();
        steps.push(ForecastStep {
            year: last_year + 1 + h as i32,
            point,
            lower: point - half,
            upper: point + half,
        });
    }
    Ok(Forecast {
        model: format!("AR({order})+drift"),
        order,
        intercept,
        ar,
        sigma2,
        level,
        steps,
    })
}
