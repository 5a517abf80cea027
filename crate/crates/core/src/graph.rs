//! Weighted undirected country networks.
//!
//! A [`CollabNetwork`] is immutable once built. Node labels are kept sorted so
//! node indices, and everything derived from them, are deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CountryYearStats, EdgeList};

/// Edge-weight normalization scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Raw,
    /// `ln(w + 1)`, natural logarithm.
    Log,
    /// `w / sqrt(p_i * p_j)`.
    Salton,
    /// `w / (p_i + p_j - w)`.
    Jaccard,
}

impl Normalization {
    pub const ALL: [Normalization; 4] = [
        Normalization::Raw,
        Normalization::Log,
        Normalization::Salton,
        Normalization::Jaccard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::Log => "log",
            Normalization::Salton => "salton",
            Normalization::Jaccard => "jaccard",
        }
    }

    fn needs_productivity(self) -> bool {
        matches!(self, Normalization::Salton | Normalization::Jaccard)
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Normalization::Raw),
            "log" => Ok(Normalization::Log),
            "salton" => Ok(Normalization::Salton),
            "jaccard" => Ok(Normalization::Jaccard),
            other => Err(Error::Invalid(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Which data a network was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    /// Last year of the window.
    pub year: i32,
    pub field: String,
    pub norm: Normalization,
    /// Number of years actually summed (shorter than requested at series start).
    #[serde(default = "one")]
    pub window: u32,
}

fn one() -> u32 {
    1
}

impl Default for Slice {
    fn default() -> Self {
        Slice {
            year: 0,
            field: crate::ingest::FIELD_ALL.to_string(),
            norm: Normalization::Raw,
            window: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollabNetwork {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
    slice: Slice,
}

impl CollabNetwork {
    /// Builds a network from labelled edges plus any extra (possibly isolated)
    /// nodes. Rejects self-loops, duplicate pairs and non-positive weights.
    pub fn new<N, E, S>(extra_nodes: N, edges: E, slice: Slice) -> Result<Self>
    where
        N: IntoIterator<Item = S>,
        E: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        let edges: Vec<(String, String, f64)> = edges
            .into_iter()
            .map(|(a, b, w)| (a.into(), b.into(), w))
            .collect();
        let mut labels: BTreeSet<String> = extra_nodes.into_iter().map(Into::into).collect();
        for (a, b, _) in &edges {
            labels.insert(a.clone());
            labels.insert(b.clone());
        }
        let nodes: Vec<String> = labels.into_iter().collect();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();

        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::Invalid(format!("self-loop on {a}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight { a, b, weight: w });
            }
            let (i, j) = (index[&a], index[&b]);
            let key = (i.min(j), i.max(j));
            if pairs.insert(key, w).is_some() {
                return Err(Error::Invalid(format!("duplicate edge {a}-{b}")));
            }
        }
        Ok(Self::from_indexed(nodes, index, pairs, slice))
    }

    fn from_indexed(
        nodes: Vec<String>,
        index: HashMap<String, usize>,
        pairs: BTreeMap<(usize, usize), f64>,
        slice: Slice,
    ) -> Self {
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut edges = Vec::with_capacity(pairs.len());
        for ((i, j), w) in pairs {
            adj[i].push((j, w));
            adj[j].push((i, w));
            edges.push((i, j, w));
        }
        for a in &mut adj {
            a.sort_by_key(|&(j, _)| j);
        }
        CollabNetwork {
            nodes,
            index,
            adj,
            edges,
            slice,
        }
    }

    /// Shorthand for tests and fixtures: edges only, default slice.
    pub fn from_pairs(edges: &[(&str, &str, f64)]) -> Result<Self> {
        Self::new(
            std::iter::empty::<&str>(),
            edges.iter().copied(),
            Slice::default(),
        )
    }

    pub fn from_edge_list(list: &EdgeList) -> Result<Self> {
        Self::new(
            std::iter::empty::<String>(),
            list.edges
                .iter()
                .map(|((a, b), &w)| (a.clone(), b.clone(), w as f64)),
            Slice {
                year: list.year,
                field: list.field.clone(),
                norm: Normalization::Raw,
                window: 1,
            },
        )
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn label(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownCountry(label.to_string()))
    }

    /// Neighbours of `i` with edge weights, sorted by neighbour index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adj[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .ok()
            .map(|p| self.adj[i][p].1)
    }

    /// Edges as `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn slice(&self) -> &Slice {
        &self.slice
    }

    pub fn with_slice(mut self, slice: Slice) -> Self {
        self.slice = slice;
        self
    }

    /// Same topology with every weight replaced by `f(i, j, w)`.
    pub fn map_weights(&self, mut f: impl FnMut(usize, usize, f64) -> Result<f64>) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for &(i, j, w) in &self.edges {
            let nw = f(i, j, w)?;
            if !(nw > 0.0) || !nw.is_finite() {
                return Err(Error::NonPositiveWeight {
                    a: self.nodes[i].clone(),
                    b: self.nodes[j].clone(),
                    weight: nw,
                });
            }
            pairs.insert((i, j), nw);
        }
        Ok(Self::from_indexed(
            self.nodes.clone(),
            self.index.clone(),
            pairs,
            self.slice.clone(),
        ))
    }

    /// Subgraph induced by `keep` (node indices), relabelled in sorted order.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Self {
        let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
        let nodes: Vec<String> = keep_set.iter().map(|&i| self.nodes[i].clone()).collect();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut pairs = BTreeMap::new();
        for &(i, j, w) in &self.edges {
            if keep_set.contains(&i) && keep_set.contains(&j) {
                let (a, b) = (index[&self.nodes[i]], index[&self.nodes[j]]);
                pairs.insert((a.min(b), a.max(b)), w);
            }
        }
        Self::from_indexed(nodes, index, pairs, self.slice.clone())
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.components().len() == 1
    }

    pub fn to_json<W: Write>(&self, out: W) -> Result<()> {
        let file = NetworkFile {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(i, j, w)| (self.nodes[i].clone(), self.nodes[j].clone(), w))
                .collect(),
            slice: self.slice.clone(),
        };
        serde_json::to_writer_pretty(out, &file).map_err(|e| Error::json("network file", e))
    }

    pub fn from_json<R: Read>(input: R) -> Result<Self> {
        let file: NetworkFile =
            serde_json::from_reader(input).map_err(|e| Error::json("network file", e))?;
        Self::new(file.nodes, file.edges, file.slice)
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<String>,
    edges: Vec<(String, String, f64)>,
    slice: Slice,
}

/// Sums consecutive yearly edge lists into one network ending at the last year.
pub fn rolling_window(lists: &[EdgeList]) -> Result<CollabNetwork> {
    let Some(first) = lists.first() else {
        return Err(Error::Invalid("rolling window needs at least one year".into()));
    };
    let mut years: Vec<i32> = lists.iter().map(|l| l.year).collect();
    years.sort_unstable();
    if years.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::NonConsecutiveYears(years));
    }
    if let Some(l) = lists.iter().find(|l| l.field != first.field) {
        return Err(Error::Invalid(format!(
            "window mixes fields {:?} and {:?}",
            first.field, l.field
        )));
    }
    let mut sum: BTreeMap<(String, String), u64> = BTreeMap::new();
    for l in lists {
        for (pair, &w) in &l.edges {
            *sum.entry(pair.clone()).or_insert(0) += w;
        }
    }
    CollabNetwork::new(
        std::iter::empty::<String>(),
        sum.into_iter().map(|((a, b), w)| (a, b, w as f64)),
        Slice {
            year: *years.last().unwrap(),
            field: first.field.clone(),
            norm: Normalization::Raw,
            window: lists.len() as u32,
        },
    )
}

/// Total publications per country summed over the same years as a window.
pub fn window_productivity<'a>(
    stats: impl IntoIterator<Item = &'a BTreeMap<String, CountryYearStats>>,
) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for year in stats {
        for s in year.values() {
            *out.entry(s.country.clone()).or_insert(0.0) += s.total_pubs as f64;
        }
    }
    out
}

/// Rescales edge weights. `productivity` is only consulted for Salton and
/// Jaccard, and must cover every node then.
pub fn normalize_weights(
    net: &CollabNetwork,
    productivity: &BTreeMap<String, f64>,
    scheme: Normalization,
) -> Result<CollabNetwork> {
    if net.slice.norm != Normalization::Raw && scheme != Normalization::Raw {
        return Err(Error::Invalid(format!(
            "network is already {}-normalized",
            net.slice.norm
        )));
    }
    let p: Vec<f64> = if scheme.needs_productivity() {
        net.nodes
            .iter()
            .map(|c| {
                productivity
                    .get(c)
                    .copied()
                    .ok_or_else(|| Error::MissingStats(c.clone()))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let zero = |i: usize, j: usize| Error::ZeroDenominator {
        a: net.nodes[i].clone(),
        b: net.nodes[j].clone(),
    };
    let out = net.map_weights(|i, j, w| match scheme {
        Normalization::Raw => Ok(w),
        Normalization::Log => Ok(w.ln_1p()),
        Normalization::Salton => {
            let d = (p[i] * p[j]).sqrt();
            if d > 0.0 {
                Ok(w / d)
            } else {
                Err(zero(i, j))
            }
        }
        Normalization::Jaccard => {
            let d = p[i] + p[j] - w;
            if d > 0.0 {
                Ok(w / d)
            } else {
                Err(zero(i, j))
            }
        }
    })?;
    let mut slice = net.slice.clone();
    if scheme != Normalization::Raw {
        slice.norm = scheme;
    }
    Ok(out.with_slice(slice))
}

/// Edge lengths `1 / w`, the metric all weighted shortest paths use.
#[derive(Clone, Debug)]
pub struct DistanceGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl DistanceGraph {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        self.adj[i].iter().find(|e| e.0 == j).map(|e| e.1)
    }

    /// Every edge at unit length, for hop-count shortest paths.
    pub fn hops(net: &CollabNetwork) -> Self {
        DistanceGraph {
            adj: net
                .adj
                .iter()
                .map(|a| a.iter().map(|&(j, _)| (j, 1.0)).collect())
                .collect(),
        }
    }
}

pub fn to_distance(net: &CollabNetwork) -> Result<DistanceGraph> {
    let mut adj = Vec::with_capacity(net.node_count());
    for (i, nbrs) in net.adj.iter().enumerate() {
        let mut row = Vec::with_capacity(nbrs.len());
        for &(j, w) in nbrs {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight {
                    a: net.nodes[i].clone(),
                    b: net.nodes[j].clone(),
                    weight: w,
                });
            }
            row.push((j, 1.0 / w));
        }
        adj.push(row);
    }
    Ok(DistanceGraph { adj })
}
