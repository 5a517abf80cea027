//! On-disk corpus: one edge CSV and one country-stats CSV per (year, field)
//! slice, plus `manifest.json` describing every slice.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    filter_countries, normalize_country, CountryYearStats, EdgeList, SliceAggregate, SliceCounts,
};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceEntry {
    pub year: i32,
    pub field: String,
    pub edges_file: String,
    pub stats_file: String,
    pub publications: u64,
    pub international: u64,
    pub edges: usize,
    pub countries: usize,
    /// Countries whose edges were dropped by the threshold.
    pub removed_countries: Vec<String>,
}

impl SliceEntry {
    pub fn counts(&self) -> SliceCounts {
        SliceCounts {
            publications: self.publications,
            international: self.international,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    /// Source kind: `publications` or `edges`.
    pub source: String,
    /// `None` when no threshold was applied.
    pub threshold: Option<u64>,
    pub records: u64,
    pub skipped_lines: u64,
    pub years: Vec<i32>,
    pub fields: Vec<String>,
    pub slices: Vec<SliceEntry>,
}

fn field_slug(field: &str) -> String {
    field
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    country_a: String,
    country_b: String,
    weight: u64,
}

#[derive(Serialize, Deserialize)]
struct StatsRow {
    country: String,
    intl_pubs: u64,
    total_pubs: u64,
}

#[derive(Deserialize)]
struct AggregatedEdgeRow {
    year: i32,
    field: String,
    country_a: String,
    country_b: String,
    weight: u64,
}

/// Reads a pre-aggregated edge file with header
/// `year,field,country_a,country_b,weight`. Rows for the same pair add up.
pub fn read_edge_csv<R: Read>(input: R) -> Result<Vec<EdgeList>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut lists: BTreeMap<(i32, String), EdgeList> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<AggregatedEdgeRow>().enumerate() {
        let row = row.map_err(|e| Error::csv(format!("edge file row {}", i + 2), e))?;
        let a = normalize_country(&row.country_a)
            .ok_or_else(|| Error::Invalid(format!("bad country code {:?}", row.country_a)))?;
        let b = normalize_country(&row.country_b)
            .ok_or_else(|| Error::Invalid(format!("bad country code {:?}", row.country_b)))?;
        if a == b {
            return Err(Error::Invalid(format!("self-pair {a} in edge file")));
        }
        lists
            .entry((row.year, row.field.clone()))
            .or_insert_with(|| EdgeList::new(row.year, row.field.clone()))
            .add(&a, &b, row.weight);
    }
    Ok(lists.into_values().collect())
}

/// Per-country counts for pre-aggregated edges, where only pair weights are
/// known: each country's count is the sum of its incident weights, which is
/// exact when every publication is bilateral.
pub fn stats_from_edges(list: &EdgeList) -> (BTreeMap<String, CountryYearStats>, SliceCounts) {
    let mut stats: BTreeMap<String, CountryYearStats> = BTreeMap::new();
    for ((a, b), &w) in &list.edges {
        for c in [a, b] {
            let s = stats.entry(c.clone()).or_insert_with(|| CountryYearStats {
                country: c.clone(),
                year: list.year,
                field: list.field.clone(),
                intl_pubs: 0,
                total_pubs: 0,
            });
            s.intl_pubs += w;
            s.total_pubs += w;
        }
    }
    let total = list.total_weight();
    (
        stats,
        SliceCounts {
            publications: total,
            international: total,
        },
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_slice(
    dir: &Path,
    agg: &SliceAggregate,
    threshold: Option<u64>,
) -> Result<SliceEntry> {
    let year = agg.edges.year;
    let field = &agg.edges.field;
    let slug = field_slug(field);
    let edges_file = format!("edges_{year}_{slug}.csv");
    let stats_file = format!("stats_{year}_{slug}.csv");

    let kept = match threshold {
        Some(t) => filter_countries(&agg.edges, &agg.stats, t)?,
        None => agg.edges.clone(),
    };
    let before: BTreeSet<&str> = agg.edges.countries();
    let after: BTreeSet<&str> = kept.countries();
    let removed: Vec<String> = before.difference(&after).map(|s| s.to_string()).collect();

    let path = dir.join(&edges_file);
    let mut w = csv::Writer::from_writer(create(&path)?);
    for ((a, b), &weight) in &kept.edges {
        w.serialize(EdgeRow {
            country_a: a.clone(),
            country_b: b.clone(),
            weight,
        })
        .map_err(|e| Error::csv(edges_file.clone(), e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(&stats_file);
    let mut w = csv::Writer::from_writer(create(&path)?);
    for s in agg.stats.values() {
        w.serialize(StatsRow {
            country: s.country.clone(),
            intl_pubs: s.intl_pubs,
            total_pubs: s.total_pubs,
        })
        .map_err(|e| Error::csv(stats_file.clone(), e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    Ok(SliceEntry {
        year,
        field: field.clone(),
        edges_file,
        stats_file,
        publications: agg.counts.publications,
        international: agg.counts.international,
        edges: kept.len(),
        countries: after.len(),
        removed_countries: removed,
    })
}

/// Writes a corpus directory from per-slice aggregates. Each slice is written
/// by exactly one writer; the manifest is written last.
pub fn write_corpus(
    dir: &Path,
    slices: &BTreeMap<(i32, String), SliceAggregate>,
    threshold: Option<u64>,
    source: &str,
    records: u64,
    skipped_lines: u64,
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut slugs: BTreeMap<String, &str> = BTreeMap::new();
    for (_, field) in slices.keys() {
        let slug = field_slug(field);
        if let Some(prev) = slugs.insert(slug.clone(), field) {
            if prev != field {
                return Err(Error::Invalid(format!(
                    "fields {prev:?} and {field:?} map to the same file name"
                )));
            }
        }
    }
    let entries = slices
        .values()
        .map(|agg| write_slice(dir, agg, threshold))
        .collect::<Result<Vec<_>>>()?;
    let years: BTreeSet<i32> = entries.iter().map(|e| e.year).collect();
    let fields: BTreeSet<String> = entries.iter().map(|e| e.field.clone()).collect();
    let manifest = Manifest {
        format: FORMAT_VERSION,
        source: source.to_string(),
        threshold,
        records,
        skipped_lines,
        years: years.into_iter().collect(),
        fields: fields.into_iter().collect(),
        slices: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::json("manifest", e))?;
    writeln!(w).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Builds slice aggregates for pre-aggregated edge lists.
pub fn aggregates_from_edges(lists: Vec<EdgeList>) -> BTreeMap<(i32, String), SliceAggregate> {
    lists
        .into_iter()
        .map(|edges| {
            let (stats, counts) = stats_from_edges(&edges);
            (
                (edges.year, edges.field.clone()),
                SliceAggregate {
                    edges,
                    stats,
                    counts,
                },
            )
        })
        .collect()
}

/// Read-only handle on a corpus directory. Safe to share across threads.
#[derive(Clone, Debug)]
pub struct Corpus {
    dir: PathBuf,
    manifest: Manifest,
    index: BTreeMap<(i32, String), usize>,
}

impl Corpus {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(MANIFEST_FILE);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        if manifest.format != FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported corpus format {}",
                manifest.format
            )));
        }
        let index = manifest
            .slices
            .iter()
            .enumerate()
            .map(|(i, s)| ((s.year, s.field.clone()), i))
            .collect();
        Ok(Corpus {
            dir,
            manifest,
            index,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn slice(&self, year: i32, field: &str) -> Option<&SliceEntry> {
        self.index
            .get(&(year, field.to_string()))
            .map(|&i| &self.manifest.slices[i])
    }

    /// The thresholded edge list for a slice, or `None` if the slice is absent.
    pub fn edge_list(&self, year: i32, field: &str) -> Result<Option<EdgeList>> {
        let Some(entry) = self.slice(year, field) else {
            return Ok(None);
        };
        let path = self.dir.join(&entry.edges_file);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut rdr = csv::Reader::from_reader(BufReader::new(file));
        let mut list = EdgeList::new(year, field);
        for row in rdr.deserialize::<EdgeRow>() {
            let row = row.map_err(|e| Error::csv(entry.edges_file.clone(), e))?;
            list.add(&row.country_a, &row.country_b, row.weight);
        }
        Ok(Some(list))
    }

    pub fn stats(&self, year: i32, field: &str) -> Result<BTreeMap<String, CountryYearStats>> {
        let Some(entry) = self.slice(year, field) else {
            return Ok(BTreeMap::new());
        };
        let path = self.dir.join(&entry.stats_file);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut rdr = csv::Reader::from_reader(BufReader::new(file));
        let mut out = BTreeMap::new();
        for row in rdr.deserialize::<StatsRow>() {
            let row = row.map_err(|e| Error::csv(entry.stats_file.clone(), e))?;
            out.insert(
                row.country.clone(),
                CountryYearStats {
                    country: row.country,
                    year,
                    field: field.to_string(),
                    intl_pubs: row.intl_pubs,
                    total_pubs: row.total_pubs,
                },
            );
        }
        Ok(out)
    }
}
