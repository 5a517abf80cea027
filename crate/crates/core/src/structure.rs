//! Cohesion metrics on network topology: k-cores, clustering, efficiency.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{to_distance, CollabNetwork};
use crate::paths::{dijkstra_dag, hop_distances};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorePartition {
    pub labels: Vec<String>,
    pub core_number: Vec<usize>,
    pub max_k: usize,
    /// Nodes in the maximum k-core.
    pub kcore_nodes: usize,
    pub kcore_ratio: f64,
}

impl CorePartition {
    /// Node indices whose core number is at least `k`.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.core_number.len())
            .filter(|&i| self.core_number[i] >= k)
            .collect()
    }
}

/// Core numbers by repeatedly peeling a minimum-degree vertex. Weights are
/// ignored.
pub fn k_core(net: &CollabNetwork) -> CorePartition {
    let n = net.node_count();
    let mut deg: Vec<usize> = (0..n).map(|i| net.degree(i)).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (deg[i], i)).collect();
    let mut removed = vec![false; n];
    let mut core = vec![0; n];
    let mut k = 0;
    while let Some((d, v)) = queue.pop_first() {
        k = k.max(d);
        core[v] = k;
        removed[v] = true;
        for &(u, _) in net.neighbors(v) {
            if !removed[u] && deg[u] > d {
                queue.remove(&(deg[u], u));
                deg[u] -= 1;
                queue.insert((deg[u], u));
            }
        }
    }
    let max_k = core.iter().copied().max().unwrap_or(0);
    let kcore_nodes = core.iter().filter(|&&c| c == max_k).count();
    CorePartition {
        labels: net.nodes().to_vec(),
        core_number: core,
        max_k,
        kcore_nodes,
        kcore_ratio: if n == 0 { 0.0 } else { kcore_nodes as f64 / n as f64 },
    }
}

/// Subgraph induced by the maximum k-core, weights preserved.
pub fn max_core_subgraph(net: &CollabNetwork) -> CollabNetwork {
    let cores = k_core(net);
    net.induced_subgraph(&cores.members(cores.max_k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<String>,
    pub local: Vec<f64>,
    pub average: f64,
}

/// Local clustering `2T / (d (d - 1))`; nodes of degree < 2 score 0.
pub fn clustering(net: &CollabNetwork) -> Clustering {
    let n = net.node_count();
    let mut mark = vec![false; n];
    let mut local = vec![0.0; n];
    for i in 0..n {
        let d = net.degree(i);
        if d < 2 {
            continue;
        }
        for &(j, _) in net.neighbors(i) {
            mark[j] = true;
        }
        let mut links = 0usize;
        for &(j, _) in net.neighbors(i) {
            links += net
                .neighbors(j)
                .iter()
                .filter(|&&(k, _)| k > j && mark[k])
                .count();
        }
        for &(j, _) in net.neighbors(i) {
            mark[j] = false;
        }
        local[i] = 2.0 * links as f64 / (d * (d - 1)) as f64;
    }
    let average = if n == 0 {
        0.0
    } else {
        local.iter().sum::<f64>() / n as f64
    };
    Clustering {
        labels: net.nodes().to_vec(),
        local,
        average,
    }
}

/// Mean of `1 / hops` over unordered pairs; unreachable pairs add 0.
pub fn global_efficiency(net: &CollabNetwork) -> Result<f64> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::TooSmall {
            needed: 2,
            actual: n,
        });
    }
    let mut sum = 0.0;
    let (mut dist, mut queue) = (Vec::new(), Vec::new());
    for s in 0..n {
        hop_distances(net, s, &mut dist, &mut queue);
        sum += queue[1..].iter().map(|&t| 1.0 / dist[t] as f64).sum::<f64>();
    }
    Ok(sum / (n * (n - 1)) as f64)
}

/// Efficiency over inverse-weight distances. Unbounded above when weights
/// exceed 1; meant for sensitivity comparisons.
pub fn weighted_global_efficiency(net: &CollabNetwork) -> Result<f64> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::TooSmall {
            needed: 2,
            actual: n,
        });
    }
    let dist = to_distance(net)?;
    let mut sum = 0.0;
    for s in 0..n {
        let dag = dijkstra_dag(&dist, s);
        sum += dag.order[1..].iter().map(|&t| 1.0 / dag.dist[t]).sum::<f64>();
    }
    Ok(sum / (n * (n - 1)) as f64)
}
