//! Publication records, full-counting edge aggregation and country thresholds.
//!
//! A publication contributes exactly one unit to every unordered pair of
//! distinct countries on it, however many authors each country has. Country
//! sets are deduplicated on parse, so repeated affiliations collapse.

mod store;

pub use store::{
    aggregates_from_edges, read_edge_csv, stats_from_edges, write_corpus, Corpus, Manifest,
    SliceEntry, MANIFEST_FILE,
};

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::MetricSeries;

/// Field label that selects every record regardless of its own field.
pub const FIELD_ALL: &str = "all";

/// Default minimum number of international publications per country-year.
pub const DEFAULT_THRESHOLD: u64 = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub year: i32,
    pub field: String,
    pub countries: BTreeSet<String>,
}

impl PublicationRecord {
    pub fn is_international(&self) -> bool {
        self.countries.len() >= 2
    }

    /// Whether this record belongs to the `field` slice.
    pub fn in_field(&self, field: &str) -> bool {
        field == FIELD_ALL || self.field == field
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Deserialize)]
struct RawRecord {
    id: RawId,
    year: i32,
    field: String,
    countries: Vec<String>,
}

/// Upper-cases and validates a country code. Codes are short alphanumeric
/// tokens (ISO-3166 alpha-2 for real data).
pub fn normalize_country(code: &str) -> Option<String> {
    let code = code.trim();
    if code.is_empty() || code.len() > 16 || !code.bytes().all(|b| b.is_ascii_alphanumeric()) {
        return None;
    }
    Some(code.to_ascii_uppercase())
}

/// Why a single input line was not turned into a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineRejection {
    Malformed(String),
    NoCountries,
}

/// Parses one JSON-lines record. Blank lines yield `Ok(None)`.
pub fn parse_line(line: &str) -> std::result::Result<Option<PublicationRecord>, LineRejection> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| LineRejection::Malformed(e.to_string()))?;
    let mut countries = BTreeSet::new();
    for c in &raw.countries {
        match normalize_country(c) {
            Some(code) => {
                countries.insert(code);
            }
            None => return Err(LineRejection::Malformed(format!("bad country code {c:?}"))),
        }
    }
    if countries.is_empty() {
        return Err(LineRejection::NoCountries);
    }
    let field = raw.field.trim();
    if field.is_empty() {
        return Err(LineRejection::Malformed("empty field label".into()));
    }
    let id = match raw.id {
        RawId::Text(s) => s,
        RawId::Number(n) => n.to_string(),
    };
    Ok(Some(PublicationRecord {
        id,
        year: raw.year,
        field: field.to_string(),
        countries,
    }))
}

#[derive(Debug, Default, Clone)]
pub struct ParseOutcome {
    pub records: Vec<PublicationRecord>,
    pub skipped: usize,
}

/// Streams records out of a JSON-lines source, calling `sink` for each one.
///
/// Malformed lines and records without countries are logged and counted;
/// only a failure to read the source is fatal. Returns the skip count.
pub fn stream_publications<R: BufRead>(
    reader: R,
    mut sink: impl FnMut(PublicationRecord),
) -> Result<usize> {
    let mut skipped = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<publication stream>", e))?;
        match parse_line(&line) {
            Ok(Some(rec)) => sink(rec),
            Ok(None) => {}
            Err(LineRejection::Malformed(why)) => {
                log::warn!("line {}: skipped malformed record: {why}", lineno + 1);
                skipped += 1;
            }
            Err(LineRejection::NoCountries) => {
                log::warn!("line {}: skipped record without countries", lineno + 1);
                skipped += 1;
            }
        }
    }
    Ok(skipped)
}

pub fn parse_publications<R: BufRead>(reader: R) -> Result<ParseOutcome> {
    let mut records = Vec::new();
    let skipped = stream_publications(reader, |r| records.push(r))?;
    Ok(ParseOutcome { records, skipped })
}

/// Country-pair co-authorship counts for one (year, field) slice.
///
/// Keys are stored with the lexicographically smaller code first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub year: i32,
    pub field: String,
    pub edges: BTreeMap<(String, String), u64>,
}

fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl EdgeList {
    pub fn new(year: i32, field: impl Into<String>) -> Self {
        EdgeList {
            year,
            field: field.into(),
            edges: BTreeMap::new(),
        }
    }

    /// Adds `weight` to the pair; self-pairs and zero weights are ignored.
    pub fn add(&mut self, a: &str, b: &str, weight: u64) {
        if a == b || weight == 0 {
            return;
        }
        *self.edges.entry(ordered_pair(a, b)).or_insert(0) += weight;
    }

    pub fn add_record(&mut self, record: &PublicationRecord) {
        let cs: Vec<&String> = record.countries.iter().collect();
        for i in 0..cs.len() {
            for j in i + 1..cs.len() {
                *self.edges.entry((cs[i].clone(), cs[j].clone())).or_insert(0) += 1;
            }
        }
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u64> {
        self.edges.get(&ordered_pair(a, b)).copied()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn countries(&self) -> BTreeSet<&str> {
        self.edges
            .keys()
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
            .collect()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Full-counting aggregation of records already restricted to one slice.
pub fn build_annual_edges<'a>(
    records: impl IntoIterator<Item = &'a PublicationRecord>,
    year: i32,
    field: &str,
) -> EdgeList {
    let mut list = EdgeList::new(year, field);
    for r in records {
        list.add_record(r);
    }
    list
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryYearStats {
    pub country: String,
    pub year: i32,
    pub field: String,
    pub intl_pubs: u64,
    pub total_pubs: u64,
}

/// Global publication counts for one slice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCounts {
    pub publications: u64,
    pub international: u64,
}

/// Accumulates everything persisted for one (year, field) slice.
#[derive(Clone, Debug)]
pub struct SliceAggregate {
    pub edges: EdgeList,
    pub stats: BTreeMap<String, CountryYearStats>,
    pub counts: SliceCounts,
}

impl SliceAggregate {
    pub fn new(year: i32, field: &str) -> Self {
        SliceAggregate {
            edges: EdgeList::new(year, field),
            stats: BTreeMap::new(),
            counts: SliceCounts::default(),
        }
    }

    pub fn add(&mut self, record: &PublicationRecord) {
        let intl = record.is_international();
        self.counts.publications += 1;
        if intl {
            self.counts.international += 1;
        }
        for c in &record.countries {
            let s = self
                .stats
                .entry(c.clone())
                .or_insert_with(|| CountryYearStats {
                    country: c.clone(),
                    year: self.edges.year,
                    field: self.edges.field.clone(),
                    intl_pubs: 0,
                    total_pubs: 0,
                });
            s.total_pubs += 1;
            if intl {
                s.intl_pubs += 1;
            }
        }
        self.edges.add_record(record);
    }
}

/// Aggregates a record collection into every (year, field) slice, including
/// the combined `all` field.
pub fn aggregate_slices<'a>(
    records: impl IntoIterator<Item = &'a PublicationRecord>,
) -> BTreeMap<(i32, String), SliceAggregate> {
    let mut slices: BTreeMap<(i32, String), SliceAggregate> = BTreeMap::new();
    for r in records {
        add_to_slices(&mut slices, r);
    }
    slices
}

pub(crate) fn add_to_slices(
    slices: &mut BTreeMap<(i32, String), SliceAggregate>,
    r: &PublicationRecord,
) {
    let mut fields = vec![FIELD_ALL];
    if r.field != FIELD_ALL {
        fields.push(r.field.as_str());
    }
    for f in fields {
        slices
            .entry((r.year, f.to_string()))
            .or_insert_with(|| SliceAggregate::new(r.year, f))
            .add(r);
    }
}

pub fn country_stats<'a>(
    records: impl IntoIterator<Item = &'a PublicationRecord>,
    year: i32,
    field: &str,
) -> BTreeMap<String, CountryYearStats> {
    let mut agg = SliceAggregate::new(year, field);
    for r in records {
        if r.year == year && r.in_field(field) {
            agg.add(r);
        }
    }
    agg.stats
}

/// Drops every edge touching a country with fewer than `threshold`
/// international publications.
pub fn filter_countries(
    edges: &EdgeList,
    stats: &BTreeMap<String, CountryYearStats>,
    threshold: u64,
) -> Result<EdgeList> {
    let mut qualifies: BTreeMap<&str, bool> = BTreeMap::new();
    for c in edges.countries() {
        let s = stats
            .get(c)
            .ok_or_else(|| Error::MissingStats(c.to_string()))?;
        qualifies.insert(c, s.intl_pubs >= threshold);
    }
    let mut out = EdgeList::new(edges.year, edges.field.clone());
    for ((a, b), &w) in &edges.edges {
        if qualifies[a.as_str()] && qualifies[b.as_str()] {
            out.edges.insert((a.clone(), b.clone()), w);
        }
    }
    Ok(out)
}

/// Denominator used for a country's participation share.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipationBase {
    /// All publications in the year, domestic and international.
    #[default]
    Total,
    /// Only internationally co-authored publications.
    International,
}

impl ParticipationBase {
    pub fn denominator(self, counts: &SliceCounts) -> u64 {
        match self {
            ParticipationBase::Total => counts.publications,
            ParticipationBase::International => counts.international,
        }
    }
}

/// Share of global output made up of `country`'s international publications,
/// one point per year. Years with a zero denominator are omitted.
pub fn participation_series(
    records: &[PublicationRecord],
    country: &str,
    field: &str,
    base: ParticipationBase,
) -> MetricSeries {
    let code = normalize_country(country).unwrap_or_else(|| country.to_string());
    let mut per_year: BTreeMap<i32, (SliceCounts, u64)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.in_field(field)) {
        let entry = per_year.entry(r.year).or_default();
        entry.0.publications += 1;
        if r.is_international() {
            entry.0.international += 1;
            if r.countries.contains(&code) {
                entry.1 += 1;
            }
        }
    }
    participation_from_counts(
        &code,
        per_year.into_iter().map(|(y, (c, n))| (y, c, n)),
        base,
    )
}

/// Builds a participation series from per-year (global counts, country
/// international publications) triples.
pub fn participation_from_counts(
    country: &str,
    per_year: impl IntoIterator<Item = (i32, SliceCounts, u64)>,
    base: ParticipationBase,
) -> MetricSeries {
    let mut series = MetricSeries::new(format!("participation:{country}"), "share");
    for (year, counts, intl) in per_year {
        let denom = base.denominator(&counts);
        if denom == 0 {
            continue;
        }
        series.push(year, Some(intl as f64 / denom as f64));
    }
    series
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, year: i32, countries: &[&str]) -> PublicationRecord {
        PublicationRecord {
            id: id.into(),
            year,
            field: "Medicine".into(),
            countries: countries.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn parse_dedups_and_uppercases() {
        let r = parse_line(r#"{"id":"w1","year":2010,"field":"Physics","countries":["us","US","cn"]}"#)
            .unwrap()
            .unwrap();
        assert_eq!(r.year, 2010);
        assert_eq!(
            r.countries.iter().map(String::as_str).collect::<Vec<_>>(),
            ["CN", "US"]
        );
    }

    #[test]
    fn empty_country_list_is_skipped() {
        let src = r#"{"id":"w1","year":2010,"field":"Physics","countries":[]}"#;
        let out = parse_publications(src.as_bytes()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.skipped, 1);
    }

    #[test]
    fn three_valid_one_malformed() {
        let src = concat!(
            r#"{"id":"a","year":2001,"field":"Physics","countries":["US","GB"]}"#, "\n",
            r#"{"id":"b","year":2001,"field":"Physics","countries":["DE"]}"#, "\n",
            "{not json\n",
            r#"{"id":3,"year":2002,"field":"Medicine","countries":["fr","it","es"]}"#, "\n",
        );
        let out = parse_publications(src.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.skipped, 1);
        assert_eq!(out.records[2].id, "3");
    }

    #[test]
    fn bad_code_rejects_line() {
        assert!(matches!(
            parse_line(r#"{"id":"a","year":2001,"field":"F","countries":["U S"]}"#),
            Err(LineRejection::Malformed(_))
        ));
    }

    #[test]
    fn single_pair_counts_once() {
        let r = rec("a", 2010, &["US", "CN"]);
        let e = build_annual_edges([&r], 2010, "Medicine");
        assert_eq!(e.weight("CN", "US"), Some(1));
        assert_eq!(e.edges.keys().next().unwrap(), &("CN".to_string(), "US".to_string()));
    }

    #[test]
    fn domestic_record_adds_nothing() {
        let r = rec("a", 2010, &["US"]);
        assert!(build_annual_edges([&r], 2010, "Medicine").is_empty());
    }

    #[test]
    fn triple_and_pair() {
        let recs = [rec("a", 2010, &["A", "B", "C"]), rec("b", 2010, &["A", "B"])];
        let e = build_annual_edges(&recs, 2010, "Medicine");
        assert_eq!(e.weight("A", "B"), Some(2));
        assert_eq!(e.weight("A", "C"), Some(1));
        assert_eq!(e.weight("B", "C"), Some(1));
        assert_eq!(e.len(), 3);
    }

    fn stats(entries: &[(&str, u64)]) -> BTreeMap<String, CountryYearStats> {
        entries
            .iter()
            .map(|&(c, n)| {
                (
                    c.to_string(),
                    CountryYearStats {
                        country: c.into(),
                        year: 2010,
                        field: "all".into(),
                        intl_pubs: n,
                        total_pubs: n + 5,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn filter_removes_under_threshold() {
        let mut e = EdgeList::new(2010, "all");
        e.add("X", "A", 4);
        e.add("A", "B", 20);
        let s = stats(&[("X", 9), ("A", 30), ("B", 25)]);
        let out = filter_countries(&e, &s, 10).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.weight("A", "B"), Some(20));
    }

    #[test]
    fn filter_threshold_zero_is_identity() {
        let mut e = EdgeList::new(2010, "all");
        e.add("A", "B", 1);
        e.add("B", "C", 2);
        let s = stats(&[("A", 0), ("B", 0), ("C", 0)]);
        assert_eq!(filter_countries(&e, &s, 0).unwrap(), e);
    }

    #[test]
    fn filter_keeps_qualifying_pair() {
        let mut e = EdgeList::new(2010, "all");
        e.add("A", "B", 12);
        e.add("B", "C", 3);
        let s = stats(&[("A", 12), ("B", 15), ("C", 3)]);
        let out = filter_countries(&e, &s, 10).unwrap();
        assert_eq!(out.edges.len(), 1);
        assert!(out.weight("A", "B").is_some());
    }

    #[test]
    fn filter_missing_stats_names_country() {
        let mut e = EdgeList::new(2010, "all");
        e.add("A", "ZZ", 1);
        let s = stats(&[("A", 12)]);
        match filter_countries(&e, &s, 10) {
            Err(Error::MissingStats(c)) => assert_eq!(c, "ZZ"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn participation_absent_country_is_zero() {
        let recs = [rec("a", 2001, &["US", "GB"]), rec("b", 2002, &["US"])];
        let s = participation_series(&recs, "CN", FIELD_ALL, ParticipationBase::Total);
        assert_eq!(s.len(), 2);
        assert!(s.values().all(|v| v == Some(0.0)));
    }

    #[test]
    fn participation_ten_record_fixture() {
        let mut recs = vec![
            rec("1", 2005, &["CN", "US"]),
            rec("2", 2005, &["CN", "JP"]),
            rec("3", 2005, &["CN", "DE", "FR"]),
            rec("4", 2005, &["US", "GB"]),
        ];
        for i in 0..6 {
            recs.push(rec(&format!("d{i}"), 2005, &["CN"]));
        }
        let s = participation_series(&recs, "cn", FIELD_ALL, ParticipationBase::Total);
        assert_eq!(s.get(2005), Some(0.3));
        let s = participation_series(&recs, "CN", FIELD_ALL, ParticipationBase::International);
        assert_eq!(s.get(2005), Some(0.75));
    }

    #[test]
    fn participation_saturates_at_one() {
        let recs = [rec("1", 2001, &["CN", "US"]), rec("2", 2001, &["CN", "KR"])];
        let s = participation_series(&recs, "CN", FIELD_ALL, ParticipationBase::Total);
        assert_eq!(s.get(2001), Some(1.0));
    }

    #[test]
    fn international_base_omits_domestic_only_year() {
        let recs = [rec("1", 2001, &["CN"]), rec("2", 2002, &["CN", "US"])];
        let s = participation_series(&recs, "CN", FIELD_ALL, ParticipationBase::International);
        assert_eq!(s.years().collect::<Vec<_>>(), [2002]);
    }
}
