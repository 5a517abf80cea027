//! Deterministic SVG line charts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{Forecast, MetricSeries};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartLayout {
    pub width: u32,
    pub height: u32,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Default for ChartLayout {
    fn default() -> Self {
        ChartLayout {
            width: 800,
            height: 480,
            title: String::new(),
            x_label: "year".into(),
            y_label: "value".into(),
        }
    }
}

/// A forecast drawn as a shaded band with a dashed point line. `series` is
/// the index of the series it extends, which sets its colour.
#[derive(Clone, Debug)]
pub struct Band<'a> {
    pub series: usize,
    pub forecast: &'a Forecast,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, year: f64) -> f64 {
        self.left + (year - self.x0) / (self.x1 - self.x0) * (self.right - self.left)
    }

    fn y(&self, v: f64) -> f64 {
        self.bottom - (v - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)
    }
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Renders `series` as polylines with a legend; forecast bands are drawn
/// first so lines stay on top. Missing values break a line into segments.
pub fn emit_chart(series: &[MetricSeries], bands: &[Band<'_>], layout: &ChartLayout) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.present_values().is_empty()) {
        return Err(Error::Invalid("chart needs at least one non-empty series".into()));
    }
    if let Some(b) = bands.iter().find(|b| b.series >= series.len()) {
        return Err(Error::Invalid(format!("band refers to missing series {}", b.series)));
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(y, v) in s.points() {
            if let Some(v) = v {
                xs.push(y as f64);
                ys.push(v);
            }
        }
    }
    for b in bands {
        for st in &b.forecast.steps {
            xs.push(st.year as f64);
            ys.extend([st.lower, st.upper, st.point]);
        }
    }
    let fold = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (x0, x1) = fold(&xs);
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 1.0, x1 + 1.0) };
    let (y0, y1) = pad_range(fold(&ys).0, fold(&ys).1);
    let (w, h) = (layout.width as f64, layout.height as f64);
    let f = Frame {
        left: 70.0,
        right: w - 170.0,
        top: 40.0,
        bottom: h - 50.0,
        x0,
        x1,
        y0,
        y1,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        layout.width, layout.height, layout.width, layout.height
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    if !layout.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            w / 2.0,
            escape(&layout.title)
        );
    }
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        f.left, f.bottom, f.right, f.bottom
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        f.left, f.top, f.left, f.bottom
    );
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="ticks" font-size="11">"#);
    let span = (x1 - x0).max(1.0);
    let step = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0].into_iter().find(|s| span / s <= 12.0).unwrap_or(100.0);
    let mut year = (x0 / step).ceil() * step;
    while year <= x1 + 1e-9 {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.x(year),
            f.bottom + 16.0,
            year as i64
        );
        year += step;
    }
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            f.left - 6.0,
            f.y(v) + 4.0,
            fmt_num(v)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        (f.left + f.right) / 2.0,
        h - 14.0,
        escape(&layout.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="16" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (f.top + f.bottom) / 2.0,
        (f.top + f.bottom) / 2.0,
        escape(&layout.y_label)
    );

    for b in bands {
        let color = PALETTE[b.series % PALETTE.len()];
        let steps = &b.forecast.steps;
        let mut pts: Vec<String> = steps.iter().map(|s| format!("{:.2},{:.2}", f.x(s.year as f64), f.y(s.upper))).collect();
        pts.extend(steps.iter().rev().map(|s| format!("{:.2},{:.2}", f.x(s.year as f64), f.y(s.lower))));
        let _ = writeln!(
            svg,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            pts.join(" ")
        );
        let line: Vec<String> = steps.iter().map(|s| format!("{:.2},{:.2}", f.x(s.year as f64), f.y(s.point))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="forecast" points="{}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="5,3"/>"#,
            line.join(" ")
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let mut segments = Vec::new();
        for &(y, v) in s.points() {
            match v {
                Some(v) => segment.push(format!("{:.2},{:.2}", f.x(y as f64), f.y(v))),
                None if !segment.is_empty() => segments.push(std::mem::take(&mut segment)),
                None => {}
            }
        }
        if !segment.is_empty() {
            segments.push(segment);
        }
        for seg in segments {
            let _ = writeln!(
                svg,
                r#"<polyline class="series" data-series="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                escape(&s.name),
                seg.join(" ")
            );
        }
    }

    let _ = writeln!(svg, r#"<g class="legend" font-size="11">"#);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = f.top + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend-entry"><rect x="{:.2}" y="{:.2}" width="12" height="3" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            f.right + 12.0,
            y,
            f.right + 30.0,
            y + 5.0,
            escape(&s.name)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}
