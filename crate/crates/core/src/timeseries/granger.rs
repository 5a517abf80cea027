//! Bivariate Granger tests.
//!
//! For each lag `p` two OLS models of `Y_t` are fitted on the same rows:
//! restricted (intercept and `p` own lags) and unrestricted (plus `p` lags of
//! `X`). The joint F statistic on the `X` lags gives the p-value; the
//! unrestricted AIC `T ln(RSS/T) + 2k` picks the preferred lag.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::fdr::bh_fdr;
use super::ols::ols;
use super::{first_difference, MetricSeries};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_LAG: usize = 6;
pub const SIGNIFICANCE: f64 = 0.05;

/// Relative spread below which a regressor block counts as constant.
const CONSTANT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagFit {
    pub lag: usize,
    pub observations: usize,
    pub rss_restricted: f64,
    pub rss_unrestricted: f64,
    pub aic_unrestricted: f64,
    /// F-test degrees of freedom `(p, T - 2p - 1)`.
    pub df: (usize, usize),
    pub f_statistic: f64,
    pub p_value: f64,
    /// The `X` lags were constant over the sample, so they cannot add
    /// explanatory power; the F statistic is 0 and the p-value 1.
    pub x_degenerate: bool,
    /// Two-sided t-test p-values of the individual `X` lag coefficients,
    /// reported alongside the joint F test.
    pub coefficient_p_values: Vec<f64>,
}

fn is_constant(values: &[f64]) -> bool {
    let Some(&first) = values.first() else {
        return true;
    };
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values
        .iter()
        .all(|v| (v - first).abs() <= CONSTANT_TOLERANCE * scale.max(f64::MIN_POSITIVE))
}

/// Fits the restricted and unrestricted regressions at one lag.
///
/// Rows are aligned by year, so gaps in either series simply drop the rows
/// that would need a missing value.
pub fn fit_restricted_unrestricted(y: &MetricSeries, x: &MetricSeries, lag: usize) -> Result<LagFit> {
    fit_on(y, x, lag, None)
}

/// Target years with every lag of both series present.
fn usable_years(y: &MetricSeries, x: &MetricSeries, lag: usize) -> BTreeSet<i32> {
    let ys = y.by_year();
    let xs = x.by_year();
    ys.keys()
        .copied()
        .filter(|&t| (1..=lag as i32).all(|k| ys.contains_key(&(t - k)) && xs.contains_key(&(t - k))))
        .collect()
}

fn fit_on(y: &MetricSeries, x: &MetricSeries, lag: usize, rows: Option<&BTreeSet<i32>>) -> Result<LagFit> {
    if lag == 0 {
        return Err(Error::Invalid("lag must be at least 1".into()));
    }
    let ys = y.by_year();
    let xs = x.by_year();
    let mut target = Vec::new();
    let mut own = Vec::new();
    let mut cross = Vec::new();
    for (&t, &yt) in &ys {
        if rows.is_some_and(|r| !r.contains(&t)) {
            continue;
        }
        let y_lags: Option<Vec<f64>> = (1..=lag).map(|k| ys.get(&(t - k as i32)).copied()).collect();
        let x_lags: Option<Vec<f64>> = (1..=lag).map(|k| xs.get(&(t - k as i32)).copied()).collect();
        if let (Some(yl), Some(xl)) = (y_lags, x_lags) {
            target.push(yt);
            own.push(yl);
            cross.push(xl);
        }
    }
    let n = target.len();
    let needed = 2 * lag + 2;
    if n < needed {
        return Err(Error::InsufficientSample {
            lag,
            usable: n,
            needed,
        });
    }
    let restricted_rows: Vec<Vec<f64>> = own
        .iter()
        .map(|yl| std::iter::once(1.0).chain(yl.iter().copied()).collect())
        .collect();
    let restricted = ols(&restricted_rows, &target).ok_or(Error::RankDeficient { lag })?;

    let x_flat: Vec<f64> = cross.iter().flatten().copied().collect();
    let x_degenerate = is_constant(&x_flat);
    let k = 2 * lag + 1;
    let df = (lag, n - k);
    let (rss_unrestricted, coefficient_p_values) = if x_degenerate {
        (restricted.rss, vec![1.0; lag])
    } else {
        let rows: Vec<Vec<f64>> = restricted_rows
            .iter()
            .zip(&cross)
            .map(|(r, xl)| r.iter().chain(xl.iter()).copied().collect())
            .collect();
        let fit = ols(&rows, &target).ok_or(Error::RankDeficient { lag })?;
        let t_dist = StudentsT::new(0.0, 1.0, df.1 as f64).expect("positive degrees of freedom");
        let coef_p = (lag + 1..k)
            .map(|j| {
                let se = fit.std_error(j);
                if se > 0.0 {
                    (2.0 * t_dist.sf((fit.coefficients[j] / se).abs())).clamp(0.0, 1.0)
                } else if fit.coefficients[j] == 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        (fit.rss.min(restricted.rss), coef_p)
    };

    let aic = n as f64 * (rss_unrestricted / n as f64).ln() + 2.0 * k as f64;
    let (f_statistic, p_value) = if x_degenerate {
        (0.0, 1.0)
    } else {
        f_test(restricted.rss, rss_unrestricted, df)
    };
    Ok(LagFit {
        lag,
        observations: n,
        rss_restricted: restricted.rss,
        rss_unrestricted,
        aic_unrestricted: aic,
        df,
        f_statistic,
        p_value,
        x_degenerate,
        coefficient_p_values,
    })
}

fn f_test(rss_r: f64, rss_u: f64, (d1, d2): (usize, usize)) -> (f64, f64) {
    let gain = (rss_r - rss_u).max(0.0);
    if gain == 0.0 {
        return (0.0, 1.0);
    }
    if rss_u <= 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let f = (gain / d1 as f64) / (rss_u / d2 as f64);
    let dist = FisherSnedecor::new(d1 as f64, d2 as f64).expect("positive degrees of freedom");
    (f, dist.sf(f).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrangerConfig {
    pub max_lag: usize,
    /// First-difference both series before testing.
    pub difference: bool,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        GrangerConfig {
            max_lag: DEFAULT_MAX_LAG,
            difference: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrangerTest {
    pub fits: Vec<LagFit>,
    /// Lag with the smallest unrestricted AIC on the common sample
    /// (smallest lag on ties).
    pub optimal_lag: usize,
    /// Unrestricted AIC of each fit refitted on the rows usable at the
    /// longest fitted lag, aligned with `fits`.
    pub selection_aic: Vec<f64>,
    /// Lags that could not be estimated, with the reason.
    pub skipped: Vec<(usize, String)>,
}

impl GrangerTest {
    pub fn fit(&self, lag: usize) -> Option<&LagFit> {
        self.fits.iter().find(|f| f.lag == lag)
    }

    pub fn optimal(&self) -> &LagFit {
        self.fit(self.optimal_lag).expect("optimal lag is fitted")
    }
}

/// Does `x` help predict `y`? Tests lags `1..=max_lag`.
pub fn granger_test(x: &MetricSeries, y: &MetricSeries, config: GrangerConfig) -> Result<GrangerTest> {
    let (x, y) = if config.difference {
        (first_difference(x)?, first_difference(y)?)
    } else {
        (x.clone(), y.clone())
    };
    if is_constant(&y.present_values()) {
        return Err(Error::DegenerateSeries(y.name.clone()));
    }
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for lag in 1..=config.max_lag {
        match fit_restricted_unrestricted(&y, &x, lag) {
            Ok(f) => fits.push(f),
            Err(e @ (Error::InsufficientSample { .. } | Error::RankDeficient { .. })) => {
                skipped.push((lag, e.to_string()))
            }
            Err(e) => return Err(e),
        }
    }
    let Some(longest) = fits.last().map(|f| f.lag) else {
        return Err(Error::InsufficientSample {
            lag: 1,
            usable: x.len().min(y.len()),
            needed: 4,
        });
    };
    // AIC values are only comparable on a shared sample: the rows the longest
    // fitted lag can use.
    let common = usable_years(&y, &x, longest);
    let mut selection_aic = Vec::with_capacity(fits.len());
    for f in &fits {
        let aic = fit_on(&y, &x, f.lag, Some(&common)).map_or(f64::INFINITY, |g| g.aic_unrestricted);
        selection_aic.push(aic);
    }
    let mut best = 0;
    for (i, &a) in selection_aic.iter().enumerate() {
        if a < selection_aic[best] {
            best = i;
        }
    }
    Ok(GrangerTest {
        optimal_lag: fits[best].lag,
        fits,
        selection_aic,
        skipped,
    })
}

/// One (field, metric) test to run against an explanatory series.
#[derive(Clone, Debug)]
pub struct GrangerCell {
    pub field: String,
    pub metric: String,
    pub x: MetricSeries,
    pub y: MetricSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrangerLagRow {
    pub lag: usize,
    pub p_raw: Option<f64>,
    pub aic: Option<f64>,
    pub p_adj: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub field: String,
    pub metric: String,
    pub lags: Vec<GrangerLagRow>,
    pub optimal_lag: Option<usize>,
    pub min_p_adj: Option<f64>,
    /// `min_p_adj <= 0.05`.
    pub flagged: bool,
    pub note: Option<String>,
}

/// Runs every cell, then applies Benjamini-Hochberg jointly across all
/// (field, metric, lag) p-values. Cells that cannot be tested stay in the
/// output with missing values and a note.
pub fn granger_grid(cells: &[GrangerCell], config: GrangerConfig) -> Result<Vec<GrangerResult>> {
    let mut results: Vec<GrangerResult> = cells
        .iter()
        .map(|cell| {
            let mut res = GrangerResult {
                field: cell.field.clone(),
                metric: cell.metric.clone(),
                lags: (1..=config.max_lag)
                    .map(|lag| GrangerLagRow {
                        lag,
                        p_raw: None,
                        aic: None,
                        p_adj: None,
                    })
                    .collect(),
                optimal_lag: None,
                min_p_adj: None,
                flagged: false,
                note: None,
            };
            match granger_test(&cell.x, &cell.y, config) {
                Ok(test) => {
                    for (f, &aic) in test.fits.iter().zip(&test.selection_aic) {
                        let row = &mut res.lags[f.lag - 1];
                        row.p_raw = Some(f.p_value);
                        row.aic = aic.is_finite().then_some(aic);
                    }
                    res.optimal_lag = Some(test.optimal_lag);
                    if !test.skipped.is_empty() {
                        let lags: Vec<String> = test.skipped.iter().map(|s| s.0.to_string()).collect();
                        res.note = Some(format!("skipped lags {}", lags.join(",")));
                    }
                }
                Err(e) => res.note = Some(e.to_string()),
            }
            res
        })
        .collect();

    let mut slots = Vec::new();
    let mut raw = Vec::new();
    for (ci, r) in results.iter().enumerate() {
        for (li, row) in r.lags.iter().enumerate() {
            if let Some(p) = row.p_raw {
                slots.push((ci, li));
                raw.push(p);
            }
        }
    }
    if !raw.is_empty() {
        let adjusted = bh_fdr(&raw)?;
        for ((ci, li), a) in slots.into_iter().zip(adjusted) {
            results[ci].lags[li].p_adj = Some(a);
        }
    }
    for r in &mut results {
        r.min_p_adj = r.lags.iter().filter_map(|l| l.p_adj).reduce(f64::min);
        r.flagged = r.min_p_adj.is_some_and(|p| p <= SIGNIFICANCE);
    }
    Ok(results)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinAdjusted {
    pub field: String,
    pub metric: String,
    pub min_p_adj: Option<f64>,
    pub flagged: bool,
}

/// Minimum adjusted p-value per (field, metric) cell.
pub fn report_min_adjusted(results: &[GrangerResult]) -> Result<Vec<MinAdjusted>> {
    if results.is_empty() {
        return Err(Error::Invalid("empty Granger grid".into()));
    }
    let mut table: BTreeMap<(String, String), MinAdjusted> = BTreeMap::new();
    for r in results {
        let min = r.lags.iter().filter_map(|l| l.p_adj).reduce(f64::min);
        table.insert(
            (r.field.clone(), r.metric.clone()),
            MinAdjusted {
                field: r.field.clone(),
                metric: r.metric.clone(),
                min_p_adj: min,
                flagged: min.is_some_and(|p| p <= SIGNIFICANCE),
            },
        );
    }
    Ok(table.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn series(name: &str, v: &[f64]) -> MetricSeries {
        MetricSeries::from_values(name, 2000, v)
    }

    fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn zero_x_gives_f_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = series("y", &noise(&mut rng, 30));
        let x = series("x", &[0.0; 30]);
        let f = fit_restricted_unrestricted(&y, &x, 2).unwrap();
        assert!(f.x_degenerate);
        assert_eq!(f.rss_restricted, f.rss_unrestricted);
        assert_eq!(f.f_statistic, 0.0);
        assert_eq!(f.p_value, 1.0);
        assert_eq!(f.df, (2, f.observations - 5));
    }

    #[test]
    fn perfect_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xv = noise(&mut rng, 40);
        let mut yv = vec![0.0];
        yv.extend_from_slice(&xv[..39]);
        let f = fit_restricted_unrestricted(&series("y", &yv), &series("x", &xv), 1).unwrap();
        assert!(f.rss_unrestricted < 1e-20);
        assert!(f.f_statistic > 1e10);
        assert!(f.p_value < 1e-12);
    }

    #[test]
    fn insufficient_sample() {
        let y = series("y", &[1.0, 2.0, 0.5, 3.0, 1.0]);
        let x = series("x", &[0.0, 1.0, 0.0, 1.0, 0.5]);
        assert!(matches!(
            fit_restricted_unrestricted(&y, &x, 2),
            Err(Error::InsufficientSample { lag: 2, .. })
        ));
    }

    #[test]
    fn shifted_copy_is_detected_after_differencing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xv: Vec<f64> = noise(&mut rng, 24).iter().scan(0.0, |s, e| { *s += e; Some(*s) }).collect();
        let mut yv = vec![0.0];
        yv.extend_from_slice(&xv[..23]);
        let t = granger_test(&series("x", &xv), &series("y", &yv), GrangerConfig::default()).unwrap();
        assert!(t.fit(1).unwrap().p_value < 1e-12);
    }

    #[test]
    fn constant_x_gives_p_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = series("y", &noise(&mut rng, 24));
        let x = series("x", &[3.5; 24]);
        let t = granger_test(&x, &y, GrangerConfig::default()).unwrap();
        assert_eq!(t.fits.len(), 6);
        assert!(t.fits.iter().all(|f| f.p_value == 1.0));
    }

    #[test]
    fn linear_x_is_constant_after_differencing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = series("y", &noise(&mut rng, 24));
        let xv: Vec<f64> = (0..24).map(|i| 0.5 + 0.25 * i as f64).collect();
        let t = granger_test(&series("x", &xv), &y, GrangerConfig::default()).unwrap();
        assert!(t.fits.iter().all(|f| f.p_value == 1.0));
    }

    #[test]
    fn constant_y_is_an_error() {
        let x = series("x", &(0..24).map(|i| (i * i) as f64).collect::<Vec<_>>());
        let y = series("y", &[1.0; 24]);
        assert!(matches!(granger_test(&x, &y, GrangerConfig::default()), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn short_series_skips_high_lags() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = series("x", &noise(&mut rng, 12));
        let y = series("y", &noise(&mut rng, 12));
        let t = granger_test(&x, &y, GrangerConfig::default()).unwrap();
        // 11 differences: lag p needs 11 - p >= 2p + 2, so p <= 3.
        assert_eq!(t.fits.iter().map(|f| f.lag).collect::<Vec<_>>(), [1, 2, 3]);
        assert_eq!(t.skipped.len(), 3);
        let tiny = series("x", &[1.0, 2.0, 4.0]);
        assert!(granger_test(&tiny, &series("y", &[1.0, 3.0, 2.0]), GrangerConfig::default()).is_err());
    }

    #[test]
    fn affine_rescaling_leaves_f_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let xv = noise(&mut rng, 30);
            let yv: Vec<f64> = noise(&mut rng, 30).iter().zip(&xv).map(|(e, x)| e + 0.3 * x).collect();
            let a: f64 = rng.gen_range(0.01..100.0);
            let b: f64 = rng.gen_range(-50.0..50.0);
            let base = granger_test(&series("x", &xv), &series("y", &yv), GrangerConfig::default()).unwrap();
            let xs: Vec<f64> = xv.iter().map(|v| a * v + b).collect();
            let ys: Vec<f64> = yv.iter().map(|v| v / a - b).collect();
            let scaled = granger_test(&series("x", &xs), &series("y", &ys), GrangerConfig::default()).unwrap();
            for (f, g) in base.fits.iter().zip(&scaled.fits) {
                assert!((f.f_statistic - g.f_statistic).abs() <= 1e-6 * f.f_statistic.max(1.0));
            }
            assert_eq!(base.optimal_lag, scaled.optimal_lag);
        }
    }

    fn cell(field: &str, metric: &str, x: &[f64], y: &[f64]) -> GrangerCell {
        GrangerCell { field: field.into(), metric: metric.into(), x: series("x", x), y: series(metric, y) }
    }

    #[test]
    fn grid_adjusts_jointly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = noise(&mut rng, 24);
        let mut driven = vec![0.0];
        driven.extend(x[..23].iter().zip(noise(&mut rng, 23)).map(|(a, e)| a + 0.05 * e));
        let cells = vec![
            cell("all", "driven", &x, &driven),
            cell("all", "noise", &x, &noise(&mut rng, 24)),
            cell("all", "flat", &x, &[2.0; 24]),
        ];
        let res = granger_grid(&cells, GrangerConfig::default()).unwrap();
        assert_eq!(res.len(), 3);
        assert!(res[0].flagged);
        assert!(res[2].min_p_adj.is_none() && res[2].note.is_some());
        for r in &res {
            for l in &r.lags {
                if let (Some(p), Some(a)) = (l.p_raw, l.p_adj) {
                    assert!(a >= p);
                    assert!(r.min_p_adj.unwrap() <= a);
                }
            }
        }
        let table = report_min_adjusted(&res).unwrap();
        assert_eq!(table.len(), 3);
        assert!(report_min_adjusted(&[]).is_err());
    }

    #[test]
    fn min_adjusted_rule() {
        let r = GrangerResult {
            field: "f".into(),
            metric: "m".into(),
            lags: [0.20, 0.04, 0.33]
                .iter()
                .enumerate()
                .map(|(i, &p)| GrangerLagRow { lag: i + 1, p_raw: Some(p), aic: None, p_adj: Some(p) })
                .collect(),
            optimal_lag: Some(1),
            min_p_adj: None,
            flagged: false,
            note: None,
        };
        let t = report_min_adjusted(&[r]).unwrap();
        assert_eq!(t[0].min_p_adj, Some(0.04));
        assert!(t[0].flagged);
    }

    #[test]
    fn single_cell_single_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = cell("f", "m", &noise(&mut rng, 24), &noise(&mut rng, 24));
        let res = granger_grid(&[c], GrangerConfig { max_lag: 1, difference: true }).unwrap();
        assert_eq!(res[0].min_p_adj, res[0].lags[0].p_raw);
    }
}
