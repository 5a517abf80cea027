//! Single-source shortest-path DAGs and intermediary bridging analysis.
//!
//! Weighted paths minimise the sum of inverse edge weights. Two path lengths
//! within [`TIE_TOLERANCE`] (relative) of each other count as co-minimal.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{to_distance, CollabNetwork, DistanceGraph};
use crate::timeseries::MetricSeries;

/// Relative tolerance under which two path lengths are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Shortest-path DAG rooted at one source.
#[derive(Clone, Debug)]
pub struct ShortestPathDag {
    pub source: usize,
    /// `f64::INFINITY` for unreachable nodes.
    pub dist: Vec<f64>,
    /// Number of distinct shortest paths from the source.
    pub sigma: Vec<f64>,
    pub preds: Vec<Vec<usize>>,
    /// Reachable nodes in non-decreasing distance order, source first.
    pub order: Vec<usize>,
}

impl ShortestPathDag {
    fn empty(n: usize, source: usize) -> Self {
        let mut dag = ShortestPathDag {
            source,
            dist: vec![f64::INFINITY; n],
            sigma: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
        };
        dag.dist[source] = 0.0;
        dag.sigma[source] = 1.0;
        dag
    }

    pub fn reachable(&self, t: usize) -> bool {
        self.dist[t].is_finite()
    }

    /// Every shortest path from the source to `target`, as node sequences.
    pub fn paths_to(&self, target: usize) -> Vec<Vec<usize>> {
        if !self.reachable(target) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut stack = vec![(target, vec![target])];
        while let Some((v, suffix)) = stack.pop() {
            if v == self.source {
                let mut p = suffix;
                p.reverse();
                out.push(p);
                continue;
            }
            for &p in self.preds[v].iter().rev() {
                let mut s = suffix.clone();
                s.push(p);
                stack.push((p, s));
            }
        }
        out.sort();
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra with shortest-path counting over positive edge lengths.
pub fn dijkstra_dag(graph: &DistanceGraph, source: usize) -> ShortestPathDag {
    let n = graph.node_count();
    let mut dag = ShortestPathDag::empty(n, source);
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist, node: v }) = heap.pop() {
        if settled[v] || dist != dag.dist[v] {
            continue;
        }
        settled[v] = true;
        dag.order.push(v);
        for &(u, len) in graph.neighbors(v) {
            if settled[u] {
                continue;
            }
            let alt = dist + len;
            let cur = dag.dist[u];
            if cur.is_finite() && same_length(alt, cur) {
                dag.sigma[u] += dag.sigma[v];
                dag.preds[u].push(v);
            } else if alt < cur {
                dag.dist[u] = alt;
                dag.sigma[u] = dag.sigma[v];
                dag.preds[u].clear();
                dag.preds[u].push(v);
                heap.push(HeapEntry { dist: alt, node: u });
            }
        }
    }
    dag
}

/// Breadth-first shortest-path DAG on hop counts.
pub fn bfs_dag(net: &CollabNetwork, source: usize) -> ShortestPathDag {
    let n = net.node_count();
    let mut dag = ShortestPathDag::empty(n, source);
    let mut queue = VecDeque::new();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        dag.order.push(v);
        let next = dag.dist[v] + 1.0;
        for &(u, _) in net.neighbors(v) {
            if dag.dist[u].is_infinite() {
                dag.dist[u] = next;
                queue.push_back(u);
            }
            if dag.dist[u] == next {
                dag.sigma[u] += dag.sigma[v];
                dag.preds[u].push(v);
            }
        }
    }
    dag
}

/// Hop distances from `source` into `dist`, `usize::MAX` when unreachable.
/// `queue` is scratch space; both buffers are reused across calls.
pub fn hop_distances(net: &CollabNetwork, source: usize, dist: &mut Vec<usize>, queue: &mut Vec<usize>) {
    dist.clear();
    dist.resize(net.node_count(), usize::MAX);
    queue.clear();
    dist[source] = 0;
    queue.push(source);
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        let next = dist[v] + 1;
        for &(u, _) in net.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = next;
                queue.push(u);
            }
        }
    }
}

/// How a target counts as bridged when several shortest paths tie.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgingMode {
    /// The intermediary is interior to at least one shortest path.
    #[default]
    AnyPath,
    /// Each target contributes the share of its shortest paths through the
    /// intermediary.
    SigmaWeighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgingReport {
    pub source: String,
    pub intermediary: String,
    pub year: i32,
    pub fraction: f64,
    /// Denominator: every node except the source and the intermediary.
    pub target_count: usize,
    /// Targets reachable from the source.
    pub reachable: usize,
}

/// Fraction of the source's weighted shortest paths that pass through
/// `intermediary`. Unreachable targets count as not bridged.
pub fn bridging_fraction(
    net: &CollabNetwork,
    source: &str,
    intermediary: &str,
    mode: BridgingMode,
) -> Result<BridgingReport> {
    if source == intermediary {
        return Err(Error::Invalid(format!(
            "source and intermediary are both {source}"
        )));
    }
    let s = net.require(source)?;
    let via = net.require(intermediary)?;
    let dag = dijkstra_dag(&to_distance(net)?, s);
    let n = net.node_count();

    // Paths through `via` counted along the DAG in settle order.
    let mut through = vec![0.0f64; n];
    for &v in &dag.order {
        if v == s {
            continue;
        }
        through[v] = match mode {
            BridgingMode::AnyPath => {
                let hit = dag.preds[v].iter().any(|&p| p == via || through[p] > 0.0);
                if hit {
                    1.0
                } else {
                    0.0
                }
            }
            BridgingMode::SigmaWeighted => dag.preds[v]
                .iter()
                .map(|&p| if p == via { dag.sigma[via] } else { through[p] })
                .sum(),
        };
    }
    let mut total = 0.0;
    let mut reachable = 0;
    for t in 0..n {
        if t == s || t == via || !dag.reachable(t) {
            continue;
        }
        reachable += 1;
        total += match mode {
            BridgingMode::AnyPath => through[t],
            BridgingMode::SigmaWeighted => through[t] / dag.sigma[t],
        };
    }
    let target_count = n - 2;
    let fraction = if target_count == 0 {
        0.0
    } else {
        total / target_count as f64
    };
    Ok(BridgingReport {
        source: source.to_string(),
        intermediary: intermediary.to_string(),
        year: net.slice().year,
        fraction,
        target_count,
        reachable,
    })
}

/// Bridging fraction per year. Years where the network, the source or the
/// intermediary is absent are recorded as missing.
pub fn bridging_series<'a>(
    networks: impl IntoIterator<Item = (i32, Option<&'a CollabNetwork>)>,
    source: &str,
    intermediary: &str,
    mode: BridgingMode,
) -> Result<MetricSeries> {
    if source == intermediary {
        return Err(Error::Invalid(format!(
            "source and intermediary are both {source}"
        )));
    }
    let mut series = MetricSeries::new(format!("bridge:{source}:{intermediary}"), "fraction");
    for (year, net) in networks {
        let value = match net {
            Some(net) if net.index_of(source).is_some() && net.index_of(intermediary).is_some() => {
                Some(bridging_fraction(net, source, intermediary, mode)?.fraction)
            }
            _ => None,
        };
        series.try_push(year, value)?;
    }
    Ok(series)
}
