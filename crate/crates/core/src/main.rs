use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use collabnet::centrality::{
    average_betweenness, betweenness, betweenness_centralization, degree_centrality, eigenvector_centrality,
    normalized_betweenness, CentralityVector, EIGEN_MAX_ITERATIONS, EIGEN_TOLERANCE,
};
use collabnet::chart::{emit_chart, Band, ChartLayout};
use collabnet::community::{communities, ego_modularity};
use collabnet::error::{Error, Result};
use collabnet::graph::{CollabNetwork, Normalization};
use collabnet::ingest::{Corpus, DEFAULT_THRESHOLD, FIELD_ALL};
use collabnet::paths::{bridging_fraction, BridgingMode};
use collabnet::pipeline::{
    compute_pipeline, config_hash, hash_comment, ingest_edges, ingest_publications, run_pipeline, slice_network,
    write_granger_csv, BridgePair, PipelineConfig,
};
use collabnet::structure::{clustering, global_efficiency, k_core};
use collabnet::synth::{hole_closure_experiment, FitnessLaw, SynthConfig, DEFAULT_DENSIFY_RATE};
use collabnet::timeseries::{forecast, read_series_csv, Forecast};

#[derive(Parser, Debug)]
#[command(name = "collabnet", version, about = "Temporal country co-authorship network analytics")]
struct Cli {
    /// TOML pipeline configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the simulator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a corpus directory from publications or pre-aggregated edges.
    Ingest(IngestArgs),
    /// Write the network of one (year, field) window as JSON.
    Build(BuildArgs),
    /// Compute node and network metrics for a network file.
    Metrics(MetricsArgs),
    /// Run the full pipeline and write every metric series.
    Series(SeriesArgs),
    /// Bridging fraction of one intermediary over a year range.
    Bridge(BridgeArgs),
    /// Granger panel of a country's participation against global metrics.
    Granger(GrangerArgs),
    /// AR forecasts with confidence bands for series in a CSV file.
    Forecast(ForecastArgs),
    /// Run the seeded growth and hole-closure simulation.
    Synth(SynthArgs),
    /// Render series as an SVG line chart.
    Chart(ChartArgs),
}

#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false, id = "input")]
struct IngestInput {
    /// JSON-lines publication file.
    #[arg(long, group = "input")]
    pubs: Option<PathBuf>,
    /// CSV with header year,field,country_a,country_b,weight.
    #[arg(long, group = "input")]
    edges: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct IngestArgs {
    #[command(flatten)]
    input: IngestInput,
    #[arg(long)]
    out: PathBuf,
    /// Minimum international publications per country-year. Defaults to 10
    /// for publications; edge files are kept as given unless set.
    #[arg(long)]
    threshold: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct CorpusArg {
    #[arg(long, env = "COLLABNET_CORPUS")]
    corpus: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long)]
    year: i32,
    #[arg(long, default_value = FIELD_ALL)]
    field: String,
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value = "raw")]
    normalize: Normalization,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct MetricsArgs {
    #[arg(long)]
    net: PathBuf,
    /// Comma-separated: bc,bcw,bc_norm,bcw_norm,ev,deg,centralization,avg_bc,
    /// kcore,clustering,efficiency,communities,ego:CC
    #[arg(long, value_delimiter = ',', default_value = "bc,bcw,ev,deg,centralization")]
    metric: Vec<String>,
    /// Use weights in community detection.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    weighted_communities: bool,
    #[arg(long)]
    out: PathBuf,
    /// Where the communities JSON goes; defaults next to `--out`.
    #[arg(long)]
    communities_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SeriesArgs {
    #[arg(long, env = "COLLABNET_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Year range as FIRST:LAST.
    #[arg(long)]
    years: Option<String>,
    #[arg(long, value_delimiter = ',')]
    fields: Option<Vec<String>>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    normalize: Option<Normalization>,
    #[arg(long)]
    threshold: Option<u64>,
    /// SOURCE>VIA pairs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    bridges: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    ego: Option<Vec<String>>,
    /// Country whose participation drives a Granger panel.
    #[arg(long)]
    iv: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum ModeArg {
    Any,
    Sigma,
}

#[derive(Args, Debug, Serialize)]
struct BridgeArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long)]
    source: String,
    #[arg(long)]
    via: String,
    #[arg(long)]
    years: Option<String>,
    #[arg(long, default_value = FIELD_ALL)]
    field: String,
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value = "raw")]
    normalize: Normalization,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: u64,
    #[arg(long, value_enum, default_value = "any")]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct GrangerArgs {
    #[arg(long, env = "COLLABNET_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    iv: Option<String>,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// `all` or a comma-separated field list.
    #[arg(long, value_delimiter = ',')]
    fields: Option<Vec<String>>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    years: Option<String>,
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ForecastArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long, default_value_t = 6)]
    horizon: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Only forecast these series names.
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum ModelArg {
    Pa,
    Fitness,
    Uniform,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "fitness")]
    model: ModelArg,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 5.0)]
    eta: f64,
    #[arg(long, default_value_t = 200)]
    arrival: usize,
    /// Nodes between metric checkpoints.
    #[arg(long, default_value_t = 50)]
    checkpoints: usize,
    /// Densification edges per arrival as a fraction of the node count.
    /// Defaults to the standard rate for `fitness` and 0 otherwise.
    #[arg(long)]
    densify: Option<f64>,
    #[arg(long, default_value_t = 0)]
    settle_rounds: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also export the growing graph as a JSON-lines publication file.
    #[arg(long)]
    export_pubs: Option<PathBuf>,
    #[arg(long, default_value_t = 24)]
    export_years: usize,
    #[arg(long, default_value_t = 2001)]
    export_first_year: i32,
    #[arg(long, default_value_t = 10)]
    export_per_edge: usize,
}

#[derive(Args, Debug, Serialize)]
struct ChartArgs {
    #[arg(long)]
    series: PathBuf,
    /// Series to draw; default is every series in the file.
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    /// Forecast each drawn series this many years ahead, with bands.
    #[arg(long, default_value_t = 0)]
    forecast: usize,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long, default_value = "value")]
    y_label: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Hashed<'a, T: Serialize> {
    command: &'a str,
    args: &'a T,
}

fn hash_of<T: Serialize>(command: &str, args: &T) -> String {
    config_hash(&Hashed { command, args })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
    }
    fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn csv_bytes(hash: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# {}", hash_comment(hash)).expect("in-memory write");
    let mut w = csv::Writer::from_writer(&mut buf);
    let wrap = |e| Error::Csv { context: "output".into(), source: e };
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Io { path: "output".into(), source: e })?;
    drop(w);
    Ok(buf)
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| Error::Json { context: "output".into(), source: e })?;
    buf.push(b'\n');
    Ok(buf)
}

fn parse_years(spec: &str) -> Result<(i32, i32)> {
    let bad = || Error::Invalid(format!("year range {spec:?} is not FIRST:LAST"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
            PipelineConfig::from_toml(&text)
        }
        None => Ok(PipelineConfig::default()),
    }
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let manifest = match (&a.input.pubs, &a.input.edges) {
        (Some(p), _) => ingest_publications(p, &a.out, Some(a.threshold.unwrap_or(DEFAULT_THRESHOLD)))?,
        (_, Some(e)) => ingest_edges(e, &a.out, a.threshold)?,
        _ => unreachable!("clap requires one input"),
    };
    log::info!(
        "ingested {} records ({} skipped) into {} slices",
        manifest.records,
        manifest.skipped_lines,
        manifest.slices.len()
    );
    Ok(())
}

fn cmd_build(a: &BuildArgs) -> Result<()> {
    let corpus = Corpus::open(&a.corpus.corpus)?;
    let net = slice_network(&corpus, a.year, &a.field, a.window, a.normalize, a.threshold)?
        .ok_or_else(|| Error::Invalid(format!("corpus has no slice for {} {}", a.year, a.field)))?;
    let mut buf = Vec::new();
    net.to_json(&mut buf)?;
    let mut value: serde_json::Value =
        serde_json::from_slice(&buf).map_err(|e| Error::Json { context: "network".into(), source: e })?;
    value["config_hash"] = hash_of("build", a).into();
    write_file(&a.out, &json_bytes(&value)?)
}

fn vector_rows(metric: &str, v: &CentralityVector, rows: &mut Vec<Vec<String>>) {
    for (label, score) in v.labels.iter().zip(&v.scores) {
        rows.push(vec![metric.to_string(), label.clone(), score.to_string()]);
    }
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let file = fs::File::open(&a.net).map_err(|e| Error::Io { path: a.net.clone(), source: e })?;
    let net = CollabNetwork::from_json(std::io::BufReader::new(file))?;
    let hash = hash_of("metrics", a);
    let mut rows = Vec::new();
    let global = |rows: &mut Vec<Vec<String>>, m: &str, v: f64| rows.push(vec![m.to_string(), String::new(), v.to_string()]);
    for m in &a.metric {
        match m.as_str() {
            "bc" => vector_rows(m, &betweenness(&net, false)?, &mut rows),
            "bcw" => vector_rows(m, &betweenness(&net, true)?, &mut rows),
            "bc_norm" => vector_rows(m, &normalized_betweenness(&net, false)?, &mut rows),
            "bcw_norm" => vector_rows(m, &normalized_betweenness(&net, true)?, &mut rows),
            "deg" => vector_rows(m, &degree_centrality(&net)?, &mut rows),
            "ev" => {
                let ev = eigenvector_centrality(&net, EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS)?;
                vector_rows(m, &ev.vector, &mut rows);
                global(&mut rows, "ev_eigenvalue", ev.eigenvalue);
                global(&mut rows, "ev_residual", ev.residual);
            }
            "centralization" => global(&mut rows, m, betweenness_centralization(&net)?),
            "avg_bc" => global(&mut rows, m, average_betweenness(&net)?),
            "kcore" => {
                let k = k_core(&net);
                for (label, c) in k.labels.iter().zip(&k.core_number) {
                    rows.push(vec!["core_number".into(), label.clone(), c.to_string()]);
                }
                global(&mut rows, "max_k", k.max_k as f64);
                global(&mut rows, "kcore_nodes", k.kcore_nodes as f64);
                global(&mut rows, "kcore_ratio", k.kcore_ratio);
            }
            "clustering" => {
                let c = clustering(&net);
                for (label, v) in c.labels.iter().zip(&c.local) {
                    rows.push(vec!["clustering".into(), label.clone(), v.to_string()]);
                }
                global(&mut rows, "avg_clustering", c.average);
            }
            "efficiency" => global(&mut rows, m, global_efficiency(&net)?),
            "communities" => {
                let part = communities(&net, a.weighted_communities);
                global(&mut rows, "n_communities", part.len() as f64);
                global(&mut rows, "modularity", part.q);
                let path = a.communities_out.clone().unwrap_or_else(|| a.out.with_extension("communities.json"));
                let mut value = serde_json::to_value(&part).map_err(|e| Error::Json { context: "communities".into(), source: e })?;
                value["config_hash"] = hash.clone().into();
                write_file(&path, &json_bytes(&value)?)?;
            }
            other => match other.strip_prefix("ego:") {
                Some(c) => {
                    let code = c.to_ascii_uppercase();
                    let q = ego_modularity(&net, &code, true, a.weighted_communities)?;
                    rows.push(vec!["ego_modularity".into(), code, q.to_string()]);
                }
                None => return Err(Error::Invalid(format!("unknown metric {other:?}"))),
            },
        }
    }
    write_file(&a.out, &csv_bytes(&hash, &["metric", "node", "value"], &rows)?)
}

fn pipeline_from_args(global: &Cli, a: &SeriesArgs) -> Result<PipelineConfig> {
    let mut c = load_config(&global.config)?;
    if let Some(v) = &a.corpus {
        c.corpus = v.clone();
    }
    if let Some(v) = &a.out {
        c.output = v.clone();
    }
    if let Some(y) = &a.years {
        let (f, l) = parse_years(y)?;
        c.first_year = Some(f);
        c.last_year = Some(l);
    }
    if let Some(v) = &a.fields {
        c.fields = v.clone();
    }
    if let Some(v) = a.window {
        c.window = v;
    }
    if let Some(v) = a.normalize {
        c.normalization = v;
    }
    if let Some(v) = a.threshold {
        c.threshold = v;
    }
    if let Some(bs) = &a.bridges {
        c.bridges = bs
            .iter()
            .map(|b| {
                let (s, v) = b
                    .split_once('>')
                    .ok_or_else(|| Error::Invalid(format!("bridge {b:?} is not SOURCE>VIA")))?;
                Ok(BridgePair { source: s.trim().to_ascii_uppercase(), via: v.trim().to_ascii_uppercase() })
            })
            .collect::<Result<_>>()?;
    }
    if let Some(v) = &a.ego {
        c.ego = v.iter().map(|s| s.to_ascii_uppercase()).collect();
    }
    if let Some(v) = &a.iv {
        c.iv = Some(v.to_ascii_uppercase());
    }
    if let Some(s) = global.seed {
        c.seed = s;
    }
    Ok(c)
}

fn cmd_series(global: &Cli, a: &SeriesArgs) -> Result<()> {
    let config = pipeline_from_args(global, a)?;
    let summary = run_pipeline(&config)?;
    log::info!(
        "{} slices computed, {} missing; granger: {}",
        summary.slices.len(),
        summary.missing.len(),
        summary.granger
    );
    Ok(())
}

fn cmd_bridge(a: &BridgeArgs) -> Result<()> {
    let corpus = Corpus::open(&a.corpus.corpus)?;
    let years = &corpus.manifest().years;
    let (first, last) = match &a.years {
        Some(y) => parse_years(y)?,
        None => (
            *years.first().ok_or_else(|| Error::Invalid("empty corpus".into()))?,
            *years.last().unwrap(),
        ),
    };
    let mode = match a.mode {
        ModeArg::Any => BridgingMode::AnyPath,
        ModeArg::Sigma => BridgingMode::SigmaWeighted,
    };
    let (source, via) = (a.source.to_ascii_uppercase(), a.via.to_ascii_uppercase());
    let mut rows = Vec::new();
    for year in first..=last {
        let net = slice_network(&corpus, year, &a.field, a.window, a.normalize, a.threshold)?;
        let (fraction, targets) = match net {
            Some(n) if n.index_of(&source).is_some() && n.index_of(&via).is_some() => {
                let r = bridging_fraction(&n, &source, &via, mode)?;
                (r.fraction.to_string(), r.target_count.to_string())
            }
            _ => (String::new(), String::new()),
        };
        rows.push(vec![year.to_string(), source.clone(), via.clone(), fraction, targets]);
    }
    let hash = hash_of("bridge", a);
    write_file(&a.out, &csv_bytes(&hash, &["year", "source", "via", "fraction", "targets"], &rows)?)
}

fn cmd_granger(global: &Cli, a: &GrangerArgs) -> Result<()> {
    let mut c = load_config(&global.config)?;
    if let Some(v) = &a.corpus {
        c.corpus = v.clone();
    }
    if let Some(v) = &a.iv {
        c.iv = Some(v.to_ascii_uppercase());
    }
    if c.iv.is_none() {
        return Err(Error::Invalid("granger needs --iv".into()));
    }
    if let Some(v) = &a.metrics {
        c.granger_metrics = v.clone();
    }
    if let Some(v) = &a.fields {
        c.fields = v.clone();
    }
    if let Some(v) = a.max_lag {
        c.max_lag = v;
    }
    if let Some(y) = &a.years {
        let (f, l) = parse_years(y)?;
        c.first_year = Some(f);
        c.last_year = Some(l);
    }
    if let Some(v) = a.threshold {
        c.threshold = v;
    }
    // Granger runs on unsmoothed annual series; skip the per-country work.
    c.window = 1;
    c.countries = vec![c.iv.clone().unwrap_or_default()];
    c.bridges.clear();
    c.ego.clear();
    let out = compute_pipeline(&c)?;
    let results = out.granger.expect("iv is set");
    let mut buf = Vec::new();
    write_granger_csv(&mut buf, &results, &hash_of("granger", &(a, &c)))?;
    for r in &results {
        if let Some(note) = &r.note {
            log::warn!("{} {}: {note}", r.field, r.metric);
        }
    }
    write_file(&a.out, &buf)
}

fn cmd_forecast(a: &ForecastArgs) -> Result<()> {
    let file = fs::File::open(&a.series).map_err(|e| Error::Io { path: a.series.clone(), source: e })?;
    let series = read_series_csv(std::io::BufReader::new(file))?;
    let mut rows = Vec::new();
    let mut done = 0;
    for s in &series {
        if a.names.as_ref().is_some_and(|n| !n.contains(&s.name)) {
            continue;
        }
        match forecast(s, a.horizon, a.level) {
            Ok(f) => {
                done += 1;
                for (i, st) in f.steps.iter().enumerate() {
                    rows.push(vec![
                        s.name.clone(),
                        (i + 1).to_string(),
                        st.year.to_string(),
                        st.point.to_string(),
                        st.lower.to_string(),
                        st.upper.to_string(),
                        f.model.clone(),
                    ]);
                }
            }
            Err(e) => log::warn!("{}: not forecast: {e}", s.name),
        }
    }
    if done == 0 {
        return Err(Error::Invalid("no series could be forecast".into()));
    }
    let hash = hash_of("forecast", a);
    write_file(
        &a.out,
        &csv_bytes(&hash, &["series", "step", "year", "point", "lower", "upper", "model"], &rows)?,
    )
}

fn cmd_synth(global: &Cli, a: &SynthArgs) -> Result<()> {
    let (fitness, default_rate) = match a.model {
        ModelArg::Pa => (FitnessLaw::Constant, 0.0),
        ModelArg::Uniform => (FitnessLaw::Uniform, 0.0),
        ModelArg::Fitness => (FitnessLaw::Entrant { eta: a.eta }, DEFAULT_DENSIFY_RATE),
    };
    let config = SynthConfig {
        seed: global.seed.unwrap_or(0),
        n_final: a.n,
        m: a.m,
        fitness,
        entrant_arrival: a.arrival,
        checkpoint_stride: a.checkpoints,
        densify_rate: a.densify.unwrap_or(default_rate),
        settle_rounds: a.settle_rounds,
    };
    let run = hole_closure_experiment(&config)?;
    let hash = hash_of("synth", &config);
    let mut value = serde_json::to_value(&run).map_err(|e| Error::Json { context: "synth run".into(), source: e })?;
    value["config_hash"] = hash.into();
    write_file(&a.out, &json_bytes(&value)?)?;
    if let Some(path) = &a.export_pubs {
        let traj = collabnet::synth::generate_fitness(&config)?;
        let mut buf = Vec::new();
        traj.export_publications(&mut buf, a.export_first_year, a.export_years, a.export_per_edge, "synthetic")?;
        write_file(path, &buf)?;
    }
    Ok(())
}

fn cmd_chart(a: &ChartArgs) -> Result<()> {
    let file = fs::File::open(&a.series).map_err(|e| Error::Io { path: a.series.clone(), source: e })?;
    let all = read_series_csv(std::io::BufReader::new(file))?;
    let chosen: Vec<_> = match &a.names {
        Some(names) => {
            let by_name: BTreeMap<&str, _> = all.iter().map(|s| (s.name.as_str(), s)).collect();
            names
                .iter()
                .map(|n| {
                    by_name
                        .get(n.as_str())
                        .map(|s| (*s).clone())
                        .ok_or_else(|| Error::Invalid(format!("no series named {n:?}")))
                })
                .collect::<Result<_>>()?
        }
        None => all,
    };
    let forecasts: Vec<(usize, Forecast)> = if a.forecast > 0 {
        chosen
            .iter()
            .enumerate()
            .filter_map(|(i, s)| forecast(s, a.forecast, 0.95).ok().map(|f| (i, f)))
            .collect()
    } else {
        Vec::new()
    };
    let bands: Vec<Band> = forecasts.iter().map(|(i, f)| Band { series: *i, forecast: f }).collect();
    let layout = ChartLayout {
        title: a.title.clone(),
        y_label: a.y_label.clone(),
        ..ChartLayout::default()
    };
    let mut svg = emit_chart(&chosen, &bands, &layout)?;
    let hash = hash_of("chart", a);
    svg = svg.replacen('\n', &format!("\n<!-- {} -->\n", hash_comment(&hash)), 1);
    write_file(&a.out, svg.as_bytes())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Build(a) => cmd_build(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Series(a) => cmd_series(cli, a),
        Command::Bridge(a) => cmd_bridge(a),
        Command::Granger(a) => cmd_granger(cli, a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Synth(a) => cmd_synth(cli, a),
        Command::Chart(a) => cmd_chart(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
