//! End-to-end runs: corpus ingestion, windowed networks per (year, field),
//! the metric suite, series assembly, Granger panels and output files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::centrality::{
    average_betweenness, betweenness_centralization, degree_centrality, eigenvector_centrality,
    normalized_betweenness, EIGEN_MAX_ITERATIONS, EIGEN_TOLERANCE,
};
use crate::community::{communities, ego_modularity, MERGE_TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::graph::{normalize_weights, rolling_window, window_productivity, CollabNetwork, Normalization};
use crate::ingest::{
    add_to_slices, aggregates_from_edges, filter_countries, normalize_country, participation_from_counts,
    read_edge_csv, stream_publications, write_corpus, Corpus, Manifest, ParticipationBase, SliceAggregate,
    DEFAULT_THRESHOLD, FIELD_ALL,
};
use crate::paths::{bridging_fraction, BridgingMode, TIE_TOLERANCE};
use crate::structure::{clustering, global_efficiency, k_core, max_core_subgraph};
use crate::timeseries::{
    granger_grid, write_series_csv, GrangerCell, GrangerConfig, GrangerResult, MetricSeries, DEFAULT_MAX_LAG,
};

/// Global metrics, in output order.
pub const GLOBAL_METRICS: [&str; 11] = [
    "nodes",
    "edges",
    "clustering",
    "kcore_nodes",
    "kcore_ratio",
    "max_k",
    "n_communities",
    "modularity",
    "betw_centralization",
    "avg_bc",
    "efficiency",
];

/// Per-country metrics, in output order.
pub const COUNTRY_METRICS: [&str; 5] = ["bc_norm", "bcw_norm", "deg", "ev", "kcore_bc_norm"];

pub const DEFAULT_GRANGER_METRICS: [&str; 6] = [
    "clustering",
    "kcore_nodes",
    "modularity",
    "betw_centralization",
    "avg_bc",
    "efficiency",
];

pub const SUMMARY_FILE: &str = "summary.json";
pub const GLOBAL_SERIES_FILE: &str = "series_global.csv";
pub const COUNTRY_SERIES_FILE: &str = "series_country.csv";
pub const PARTICIPATION_FILE: &str = "participation.csv";
pub const BRIDGING_FILE: &str = "bridging.csv";
pub const GRANGER_FILE: &str = "granger.csv";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgePair {
    pub source: String,
    pub via: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub output: PathBuf,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
    pub fields: Vec<String>,
    pub window: usize,
    pub normalization: Normalization,
    pub threshold: u64,
    /// Countries to emit per-country series for; empty means all.
    pub countries: Vec<String>,
    pub bridges: Vec<BridgePair>,
    pub bridging_mode: BridgingMode,
    /// Countries whose ego-network modularity is tracked.
    pub ego: Vec<String>,
    pub weighted_communities: bool,
    pub participation_base: ParticipationBase,
    /// Country whose participation share drives the Granger panel.
    pub iv: Option<String>,
    pub granger_metrics: Vec<String>,
    pub max_lag: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: PathBuf::from("corpus"),
            output: PathBuf::from("out"),
            first_year: None,
            last_year: None,
            fields: vec![FIELD_ALL.to_string()],
            window: 3,
            normalization: Normalization::Raw,
            threshold: DEFAULT_THRESHOLD,
            countries: Vec::new(),
            bridges: Vec::new(),
            bridging_mode: BridgingMode::AnyPath,
            ego: Vec::new(),
            weighted_communities: true,
            participation_base: ParticipationBase::Total,
            iv: None,
            granger_metrics: DEFAULT_GRANGER_METRICS.iter().map(|s| s.to_string()).collect(),
            max_lag: DEFAULT_MAX_LAG,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Invalid("window must be at least 1 year".into()));
        }
        if let (Some(a), Some(b)) = (self.first_year, self.last_year) {
            if a > b {
                return Err(Error::Invalid(format!("empty year range {a}..{b}")));
            }
        }
        if self.fields.is_empty() {
            return Err(Error::Invalid("no fields selected".into()));
        }
        if self.max_lag == 0 {
            return Err(Error::Invalid("max lag must be at least 1".into()));
        }
        for b in &self.bridges {
            if b.source == b.via {
                return Err(Error::Invalid(format!("bridge source and via are both {}", b.source)));
            }
        }
        Ok(())
    }
}

/// SHA-256 of any serializable configuration, hex encoded.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// The comment line written at the top of every CSV output.
pub fn hash_comment(hash: &str) -> String {
    format!("config_hash={hash}")
}

pub(crate) fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Ingests a JSON-lines publication file into a corpus directory, streaming
/// records straight into the slice aggregates.
pub fn ingest_publications(input: &Path, out: &Path, threshold: Option<u64>) -> Result<Manifest> {
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    let mut slices: BTreeMap<(i32, String), SliceAggregate> = BTreeMap::new();
    let mut records = 0u64;
    let skipped = stream_publications(BufReader::new(file), |r| {
        records += 1;
        add_to_slices(&mut slices, &r);
    })?;
    write_corpus(out, &slices, threshold, "publications", records, skipped as u64)
}

/// Ingests a pre-aggregated edge CSV. Country counts are reconstructed from
/// incident weights.
pub fn ingest_edges(input: &Path, out: &Path, threshold: Option<u64>) -> Result<Manifest> {
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    let lists = read_edge_csv(BufReader::new(file))?;
    let rows: u64 = lists.iter().map(|l| l.edges.len() as u64).sum();
    write_corpus(out, &aggregates_from_edges(lists), threshold, "edges", rows, 0)
}

/// Network for the window ending at `year`: the trailing run of consecutive
/// years present in the corpus, at most `window` long, each thresholded
/// before summing. `None` when `year` itself is absent.
pub fn slice_network(
    corpus: &Corpus,
    year: i32,
    field: &str,
    window: usize,
    norm: Normalization,
    threshold: u64,
) -> Result<Option<CollabNetwork>> {
    if corpus.slice(year, field).is_none() {
        return Ok(None);
    }
    let mut lists = Vec::new();
    let mut stats = Vec::new();
    for k in 0..window {
        let y = year - k as i32;
        let Some(list) = corpus.edge_list(y, field)? else { break };
        let s = corpus.stats(y, field)?;
        lists.push(filter_countries(&list, &s, threshold)?);
        stats.push(s);
    }
    lists.reverse();
    let net = rolling_window(&lists)?;
    if norm == Normalization::Raw {
        return Ok(Some(net));
    }
    normalize_weights(&net, &window_productivity(&stats), norm).map(Some)
}

/// Every global metric of one network. Metrics the network is too small for
/// are `None`.
pub fn global_metrics(net: &CollabNetwork, weighted_communities: bool) -> Result<BTreeMap<String, Option<f64>>> {
    let n = net.node_count();
    let mut out: BTreeMap<String, Option<f64>> = GLOBAL_METRICS.iter().map(|m| (m.to_string(), None)).collect();
    let mut set = |k: &str, v: f64| {
        out.insert(k.to_string(), Some(v));
    };
    set("nodes", n as f64);
    set("edges", net.edge_count() as f64);
    if n == 0 {
        return Ok(out);
    }
    set("clustering", clustering(net).average);
    let cores = k_core(net);
    set("kcore_nodes", cores.kcore_nodes as f64);
    set("kcore_ratio", cores.kcore_ratio);
    set("max_k", cores.max_k as f64);
    if net.edge_count() > 0 {
        let part = communities(net, weighted_communities);
        set("n_communities", part.len() as f64);
        set("modularity", part.q);
    }
    if n >= 2 {
        set("efficiency", global_efficiency(net)?);
    }
    if n >= 3 {
        set("betw_centralization", betweenness_centralization(net)?);
        set("avg_bc", average_betweenness(net)?);
    }
    Ok(out)
}

/// Per-country metrics, `metric -> country -> value`.
pub fn country_metrics(net: &CollabNetwork) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let n = net.node_count();
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut put = |metric: &str, labels: &[String], scores: &[f64]| {
        out.insert(
            metric.to_string(),
            labels.iter().cloned().zip(scores.iter().copied()).collect(),
        );
    };
    if n >= 2 {
        let d = degree_centrality(net)?;
        put("deg", &d.labels, &d.scores);
    }
    if n >= 3 {
        let bc = normalized_betweenness(net, false)?;
        put("bc_norm", &bc.labels, &bc.scores);
        let bcw = normalized_betweenness(net, true)?;
        put("bcw_norm", &bcw.labels, &bcw.scores);
        let core = max_core_subgraph(net);
        if core.node_count() >= 3 {
            let kb = normalized_betweenness(&core, false)?;
            put("kcore_bc_norm", &kb.labels, &kb.scores);
        }
    }
    if net.edge_count() > 0 {
        match eigenvector_centrality(net, EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS) {
            Ok(ev) => put("ev", &ev.vector.labels, &ev.vector.scores),
            Err(e @ Error::NoConvergence { .. }) => {
                log::warn!("{} {}: eigenvector centrality skipped: {e}", net.slice().year, net.slice().field)
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Everything computed for one (year, field) window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub year: i32,
    pub field: String,
    pub window: u32,
    pub global: BTreeMap<String, Option<f64>>,
    /// Global metrics of the unsmoothed single-year network.
    pub raw_global: BTreeMap<String, Option<f64>>,
    pub country: BTreeMap<String, BTreeMap<String, f64>>,
    pub bridging: Vec<Option<f64>>,
    pub ego: BTreeMap<String, Option<f64>>,
}

fn slice_report(corpus: &Corpus, config: &PipelineConfig, year: i32, field: &str) -> Result<Option<SliceReport>> {
    let Some(net) = slice_network(corpus, year, field, config.window, config.normalization, config.threshold)? else {
        return Ok(None);
    };
    let global = global_metrics(&net, config.weighted_communities)?;
    let raw_global = if config.window == 1 {
        global.clone()
    } else {
        let raw = slice_network(corpus, year, field, 1, config.normalization, config.threshold)?
            .expect("slice exists");
        global_metrics(&raw, config.weighted_communities)?
    };
    let country = country_metrics(&net)?;
    let bridging = config
        .bridges
        .iter()
        .map(|b| {
            if net.index_of(&b.source).is_some() && net.index_of(&b.via).is_some() {
                bridging_fraction(&net, &b.source, &b.via, config.bridging_mode).map(|r| Some(r.fraction))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let ego = config
        .ego
        .iter()
        .map(|c| {
            let q = if net.index_of(c).is_some() {
                Some(ego_modularity(&net, c, true, config.weighted_communities)?)
            } else {
                None
            };
            Ok((c.clone(), q))
        })
        .collect::<Result<_>>()?;
    Ok(Some(SliceReport {
        year,
        field: field.to_string(),
        window: net.slice().window,
        global,
        raw_global,
        country,
        bridging,
        ego,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSummary {
    pub year: i32,
    pub field: String,
    pub window: u32,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingSlice {
    pub year: i32,
    pub field: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub path_tie_tolerance: f64,
    pub merge_tie_tolerance: f64,
    pub eigen_tolerance: f64,
    pub eigen_max_iterations: usize,
    pub normalization: Normalization,
    pub log_base: String,
    pub bridging_mode: BridgingMode,
    pub participation_base: ParticipationBase,
    pub communities_weighted: bool,
    pub granger_statistic: String,
    pub granger_differenced: bool,
    pub fdr: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub config_hash: String,
    pub config: PipelineConfig,
    pub years: Vec<i32>,
    pub fields: Vec<String>,
    pub slices: Vec<SliceSummary>,
    pub missing: Vec<MissingSlice>,
    pub metadata: Metadata,
    /// Series name to number of points, for every written series.
    pub series_lengths: BTreeMap<String, usize>,
    pub granger: String,
    pub files: Vec<String>,
}

fn smoothing_tag(window: usize) -> String {
    format!("w{window}")
}

/// Series name used in every pipeline CSV: `field/smoothing/metric[/key]`.
pub fn series_name(field: &str, smoothing: &str, metric: &str, key: Option<&str>) -> String {
    match key {
        Some(k) => format!("{field}/{smoothing}/{metric}/{k}"),
        None => format!("{field}/{smoothing}/{metric}"),
    }
}

fn metric_unit(metric: &str) -> &'static str {
    match metric {
        "nodes" | "edges" | "kcore_nodes" | "max_k" | "n_communities" => "count",
        "modularity" | "ego_modularity" => "Q",
        "bridging" => "fraction",
        "participation" => "share",
        _ => "score",
    }
}

fn build_series(
    name: String,
    metric: &str,
    years: &[i32],
    mut value: impl FnMut(i32) -> Option<f64>,
) -> Result<MetricSeries> {
    let mut s = MetricSeries::new(name, metric_unit(metric));
    for &y in years {
        s.try_push(y, value(y).filter(|v| v.is_finite()))?;
    }
    Ok(s)
}

/// Participation share series for every country present in `field`.
pub fn participation(
    corpus: &Corpus,
    field: &str,
    years: &[i32],
    base: ParticipationBase,
) -> Result<BTreeMap<String, MetricSeries>> {
    let mut per_country: BTreeMap<String, Vec<(i32, crate::ingest::SliceCounts, u64)>> = BTreeMap::new();
    let mut present = Vec::new();
    for &y in years {
        let Some(entry) = corpus.slice(y, field) else { continue };
        let stats = corpus.stats(y, field)?;
        present.push((y, entry.counts(), stats));
    }
    let countries: BTreeSet<String> = present.iter().flat_map(|(_, _, s)| s.keys().cloned()).collect();
    for c in &countries {
        let rows = present
            .iter()
            .map(|(y, counts, stats)| (*y, *counts, stats.get(c).map_or(0, |s| s.intl_pubs)))
            .collect();
        per_country.insert(c.clone(), rows);
    }
    Ok(per_country
        .into_iter()
        .map(|(c, rows)| {
            let s = participation_from_counts(&c, rows, base);
            (c, s)
        })
        .collect())
}

/// Writes the Granger table: one row per (field, metric, lag).
pub fn write_granger_csv<W: Write>(out: W, results: &[GrangerResult], hash: &str) -> Result<()> {
    let mut out = out;
    writeln!(out, "# {}", hash_comment(hash)).map_err(|e| Error::io("granger output", e))?;
    let mut w = csv::Writer::from_writer(out);
    let ctx = "granger output";
    w.write_record(["field", "metric", "lag", "p_raw", "aic", "p_adj", "min_p_adj", "flag"])
        .map_err(|e| Error::csv(ctx, e))?;
    let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in results {
        for row in &r.lags {
            w.write_record([
                r.field.clone(),
                r.metric.clone(),
                row.lag.to_string(),
                fmt(row.p_raw),
                fmt(row.aic),
                fmt(row.p_adj),
                fmt(r.min_p_adj),
                (r.flagged as u8).to_string(),
            ])
            .map_err(|e| Error::csv(ctx, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(ctx, e))
}

/// Builds the Granger grid for `iv` against raw global metric series.
pub fn granger_cells(
    raw_global: &BTreeMap<(String, String), MetricSeries>,
    participation: &BTreeMap<String, BTreeMap<String, MetricSeries>>,
    iv: &str,
    fields: &[String],
    metrics: &[String],
) -> Result<Vec<GrangerCell>> {
    let iv = normalize_country(iv).ok_or_else(|| Error::UnknownCountry(iv.to_string()))?;
    let mut cells = Vec::new();
    for field in fields {
        let x = participation
            .get(field)
            .and_then(|p| p.get(&iv))
            .cloned()
            .ok_or_else(|| Error::UnknownCountry(format!("{iv} in field {field}")))?;
        for metric in metrics {
            let y = raw_global
                .get(&(field.clone(), metric.clone()))
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("unknown metric {metric}")))?;
            cells.push(GrangerCell {
                field: field.clone(),
                metric: metric.clone(),
                x: x.clone(),
                y,
            });
        }
    }
    Ok(cells)
}

fn year_range(corpus: &Corpus, config: &PipelineConfig) -> Result<Vec<i32>> {
    let years = &corpus.manifest().years;
    let first = config.first_year.or(years.first().copied());
    let last = config.last_year.or(years.last().copied());
    match (first, last) {
        (Some(a), Some(b)) if a <= b => Ok((a..=b).collect()),
        _ => Err(Error::Invalid("corpus has no years in the requested range".into())),
    }
}

/// Everything `run_pipeline` computes, before anything is written.
pub struct PipelineOutput {
    pub summary: PipelineSummary,
    pub global: Vec<MetricSeries>,
    pub country: Vec<MetricSeries>,
    pub participation: Vec<MetricSeries>,
    pub bridging: Vec<MetricSeries>,
    pub granger: Option<Vec<GrangerResult>>,
}

/// Computes every slice and assembles the series without touching disk.
pub fn compute_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let corpus = Corpus::open(&config.corpus)?;
    let years = year_range(&corpus, config)?;
    let hash = config_hash(config);
    let tasks: Vec<(String, i32)> = config
        .fields
        .iter()
        .flat_map(|f| years.iter().map(move |&y| (f.clone(), y)))
        .collect();
    let reports: Vec<(String, i32, Option<SliceReport>)> = tasks
        .par_iter()
        .map(|(f, y)| slice_report(&corpus, config, *y, f).map(|r| (f.clone(), *y, r)))
        .collect::<Result<_>>()?;

    let mut by_key: BTreeMap<(String, i32), &SliceReport> = BTreeMap::new();
    let mut slices = Vec::new();
    let mut missing = Vec::new();
    for (f, y, r) in &reports {
        match r {
            Some(r) => {
                by_key.insert((f.clone(), *y), r);
                slices.push(SliceSummary {
                    year: *y,
                    field: f.clone(),
                    window: r.window,
                    nodes: r.global["nodes"].unwrap_or(0.0) as usize,
                    edges: r.global["edges"].unwrap_or(0.0) as usize,
                });
            }
            None => missing.push(MissingSlice {
                year: *y,
                field: f.clone(),
            }),
        }
    }
    let smooth = smoothing_tag(config.window);
    let raw_tag = smoothing_tag(1);

    let mut global = Vec::new();
    let mut raw_global: BTreeMap<(String, String), MetricSeries> = BTreeMap::new();
    let mut country = Vec::new();
    let mut bridging = Vec::new();
    let mut participation_all: BTreeMap<String, BTreeMap<String, MetricSeries>> = BTreeMap::new();
    let mut participation_out = Vec::new();
    let wanted: BTreeSet<String> = config.countries.iter().filter_map(|c| normalize_country(c)).collect();
    for field in &config.fields {
        let get = |y: i32| by_key.get(&(field.clone(), y)).copied();
        for metric in GLOBAL_METRICS {
            global.push(build_series(series_name(field, &smooth, metric, None), metric, &years, |y| {
                get(y).and_then(|r| r.global[metric])
            })?);
            if config.window != 1 {
                global.push(build_series(series_name(field, &raw_tag, metric, None), metric, &years, |y| {
                    get(y).and_then(|r| r.raw_global[metric])
                })?);
            }
            let raw = build_series(series_name(field, &raw_tag, metric, None), metric, &years, |y| {
                get(y).and_then(|r| r.raw_global[metric])
            })?;
            raw_global.insert((field.clone(), metric.to_string()), raw);
        }
        let countries: BTreeSet<String> = years
            .iter()
            .filter_map(|&y| get(y))
            .flat_map(|r| r.country.values().flat_map(|m| m.keys().cloned()))
            .filter(|c| wanted.is_empty() || wanted.contains(c))
            .collect();
        for metric in COUNTRY_METRICS {
            for c in &countries {
                country.push(build_series(series_name(field, &smooth, metric, Some(c)), metric, &years, |y| {
                    get(y).and_then(|r| r.country.get(metric)).and_then(|m| m.get(c).copied())
                })?);
            }
        }
        for c in &config.ego {
            country.push(build_series(
                series_name(field, &smooth, "ego_modularity", Some(c)),
                "ego_modularity",
                &years,
                |y| get(y).and_then(|r| r.ego.get(c).copied().flatten()),
            )?);
        }
        for (i, b) in config.bridges.iter().enumerate() {
            let key = format!("{}>{}", b.source, b.via);
            bridging.push(build_series(
                series_name(field, &smooth, "bridging", Some(&key)),
                "bridging",
                &years,
                |y| get(y).and_then(|r| r.bridging[i]),
            )?);
        }
        let part = participation(&corpus, field, &years, config.participation_base)?;
        for (c, s) in &part {
            if wanted.is_empty() || wanted.contains(c) || config.iv.as_deref() == Some(c.as_str()) {
                let mut named = MetricSeries::new(series_name(field, &raw_tag, "participation", Some(c)), "share");
                for &(y, v) in s.points() {
                    named.try_push(y, v)?;
                }
                participation_out.push(named);
            }
        }
        participation_all.insert(field.clone(), part);
    }

    let mut granger = None;
    let granger_note = match &config.iv {
        None => "not requested".to_string(),
        Some(iv) => {
            let cells = granger_cells(&raw_global, &participation_all, iv, &config.fields, &config.granger_metrics)?;
            let results = granger_grid(
                &cells,
                GrangerConfig {
                    max_lag: config.max_lag,
                    difference: true,
                },
            )?;
            let tested = results.iter().filter(|r| r.optimal_lag.is_some()).count();
            let note = if tested == 0 {
                let why = results.iter().find_map(|r| r.note.clone()).unwrap_or_default();
                format!("no Granger test possible: {why}")
            } else {
                format!("{tested} of {} cells tested", results.len())
            };
            granger = Some(results);
            note
        }
    };

    let mut series_lengths = BTreeMap::new();
    for s in global.iter().chain(&country).chain(&participation_out).chain(&bridging) {
        series_lengths.insert(s.name.clone(), s.present_values().len());
    }
    let mut files = vec![
        GLOBAL_SERIES_FILE.to_string(),
        COUNTRY_SERIES_FILE.to_string(),
        PARTICIPATION_FILE.to_string(),
    ];
    if !bridging.is_empty() {
        files.push(BRIDGING_FILE.to_string());
    }
    if granger.is_some() {
        files.push(GRANGER_FILE.to_string());
    }
    files.push(SUMMARY_FILE.to_string());
    let summary = PipelineSummary {
        config_hash: hash,
        config: config.clone(),
        years,
        fields: config.fields.clone(),
        slices,
        missing,
        metadata: Metadata {
            path_tie_tolerance: TIE_TOLERANCE,
            merge_tie_tolerance: MERGE_TIE_TOLERANCE,
            eigen_tolerance: EIGEN_TOLERANCE,
            eigen_max_iterations: EIGEN_MAX_ITERATIONS,
            normalization: config.normalization,
            log_base: "e".into(),
            bridging_mode: config.bridging_mode,
            participation_base: config.participation_base,
            communities_weighted: config.weighted_communities,
            granger_statistic: "F (restricted vs unrestricted OLS)".into(),
            granger_differenced: true,
            fdr: "Benjamini-Hochberg over the full field x metric x lag grid".into(),
        },
        series_lengths,
        granger: granger_note,
        files,
    };
    Ok(PipelineOutput {
        summary,
        global,
        country,
        participation: participation_out,
        bridging,
        granger,
    })
}

fn write_series_file(dir: &Path, name: &str, series: &[MetricSeries], hash: &str) -> Result<()> {
    let path = dir.join(name);
    let mut w = create_file(&path)?;
    write_series_csv(&mut w, series, Some(&hash_comment(hash)))?;
    finish(w, &path)
}

/// Runs the full pipeline and writes its files into `config.output`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary> {
    let out = compute_pipeline(config)?;
    let dir = &config.output;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let hash = &out.summary.config_hash;
    write_series_file(dir, GLOBAL_SERIES_FILE, &out.global, hash)?;
    write_series_file(dir, COUNTRY_SERIES_FILE, &out.country, hash)?;
    write_series_file(dir, PARTICIPATION_FILE, &out.participation, hash)?;
    if !out.bridging.is_empty() {
        write_series_file(dir, BRIDGING_FILE, &out.bridging, hash)?;
    }
    if let Some(results) = &out.granger {
        let path = dir.join(GRANGER_FILE);
        let mut w = create_file(&path)?;
        write_granger_csv(&mut w, results, hash)?;
        finish(w, &path)?;
    }
    let path = dir.join(SUMMARY_FILE);
    let mut w = create_file(&path)?;
    serde_json::to_writer_pretty(&mut w, &out.summary).map_err(|e| Error::json("summary", e))?;
    writeln!(w).map_err(|e| Error::io(&path, e))?;
    finish(w, &path)?;
    Ok(out.summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_toml() {
        let c = PipelineConfig::from_toml("corpus = \"c\"\nwindow = 1\n[[bridges]]\nsource = \"CN\"\nvia = \"US\"\n").unwrap();
        assert_eq!(c.window, 1);
        assert_eq!(c.threshold, 10);
        assert_eq!(c.fields, vec!["all"]);
        assert_eq!(c.bridges[0].via, "US");
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
        assert!(PipelineConfig { window: 0, ..PipelineConfig::default() }.validate().is_err());
        assert!(PipelineConfig { first_year: Some(2010), last_year: Some(2005), ..PipelineConfig::default() }
            .validate()
            .is_err());
    }

    #[test]
    fn hash_tracks_config() {
        let a = PipelineConfig::default();
        let b = PipelineConfig { window: 2, ..a.clone() };
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn small_network_metrics_are_partial() {
        let net = CollabNetwork::from_pairs(&[("A", "B", 1.0)]).unwrap();
        let g = global_metrics(&net, true).unwrap();
        assert_eq!(g["nodes"], Some(2.0));
        assert_eq!(g["efficiency"], Some(1.0));
        assert_eq!(g["avg_bc"], None);
        let c = country_metrics(&net).unwrap();
        assert!(c.contains_key("deg") && !c.contains_key("bc_norm"));
    }
}
