use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named annual series with explicit missing markers.
///
/// Years are strictly increasing. A `None` value is a missing observation,
/// which is distinct from a recorded zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub name: String,
    pub unit: String,
    points: Vec<(i32, Option<f64>)>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        MetricSeries {
            name: name.into(),
            unit: unit.into(),
            points: Vec::new(),
        }
    }

    pub fn from_points(
        name: impl Into<String>,
        unit: impl Into<String>,
        points: impl IntoIterator<Item = (i32, Option<f64>)>,
    ) -> Result<Self> {
        let mut s = MetricSeries::new(name, unit);
        for (y, v) in points {
            s.try_push(y, v)?;
        }
        Ok(s)
    }

    /// Convenience for a gap-free series starting at `first_year`.
    pub fn from_values(name: impl Into<String>, first_year: i32, values: &[f64]) -> Self {
        let mut s = MetricSeries::new(name, "");
        for (i, &v) in values.iter().enumerate() {
            s.push(first_year + i as i32, Some(v));
        }
        s
    }

    pub fn try_push(&mut self, year: i32, value: Option<f64>) -> Result<()> {
        if let Some(&(last, _)) = self.points.last() {
            if year <= last {
                return Err(Error::Invalid(format!(
                    "series {}: year {year} does not follow {last}",
                    self.name
                )));
            }
        }
        if let Some(v) = value {
            if !v.is_finite() {
                return Err(Error::Invalid(format!(
                    "series {}: non-finite value at {year}",
                    self.name
                )));
            }
        }
        self.points.push((year, value));
        Ok(())
    }

    /// Panics if `year` does not follow the last year or the value is not finite.
    pub fn push(&mut self, year: i32, value: Option<f64>) {
        self.try_push(year, value).expect("series invariant")
    }

    pub fn points(&self) -> &[(i32, Option<f64>)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        self.points
            .binary_search_by_key(&year, |p| p.0)
            .ok()
            .and_then(|i| self.points[i].1)
    }

    pub fn by_year(&self) -> BTreeMap<i32, f64> {
        self.points
            .iter()
            .filter_map(|&(y, v)| v.map(|v| (y, v)))
            .collect()
    }

    /// Present values in year order, skipping missing points.
    pub fn present_values(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.1).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRow {
    series: String,
    unit: String,
    year: i32,
    value: Option<f64>,
}

/// Writes series in long format: `series,unit,year,value`, empty value for
/// missing. An optional comment line (`# ...`) precedes the header.
pub fn write_series_csv<W: Write>(
    mut out: W,
    series: &[MetricSeries],
    comment: Option<&str>,
) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}").map_err(|e| Error::io("<series csv>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    for s in series {
        for &(year, value) in &s.points {
            w.serialize(SeriesRow {
                series: s.name.clone(),
                unit: s.unit.clone(),
                year,
                value,
            })
            .map_err(|e| Error::csv("series csv", e))?;
        }
    }
    w.flush().map_err(|e| Error::io("<series csv>", e))?;
    Ok(())
}

/// Reads series written by [`write_series_csv`], preserving first-seen order.
pub fn read_series_csv<R: Read>(input: R) -> Result<Vec<MetricSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out: Vec<MetricSeries> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for row in rdr.deserialize::<SeriesRow>() {
        let row = row.map_err(|e| Error::csv("series csv", e))?;
        let i = *index.entry(row.series.clone()).or_insert_with(|| {
            out.push(MetricSeries::new(row.series.clone(), row.unit.clone()));
            out.len() - 1
        });
        out[i].try_push(row.year, row.value)?;
    }
    Ok(out)
}
