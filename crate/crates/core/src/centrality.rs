//! Betweenness, eigenvector and degree centrality.
//!
//! Betweenness uses Brandes-style dependency accumulation over every source.
//! The weighted variant measures paths by summed inverse weights; the
//! topological variant by hop count. Scores are over unordered pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{to_distance, CollabNetwork};
use crate::paths::{bfs_dag, dijkstra_dag, ShortestPathDag};

pub const EIGEN_TOLERANCE: f64 = 1e-10;
pub const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Sources handled per reduction chunk. Fixed so the floating-point summation
/// order does not depend on the thread count.
const SOURCE_CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityKind {
    Betweenness,
    WeightedBetweenness,
    NormalizedBetweenness,
    NormalizedWeightedBetweenness,
    Eigenvector,
    Degree,
}

impl CentralityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CentralityKind::Betweenness => "bc",
            CentralityKind::WeightedBetweenness => "bcw",
            CentralityKind::NormalizedBetweenness => "bc_norm",
            CentralityKind::NormalizedWeightedBetweenness => "bcw_norm",
            CentralityKind::Eigenvector => "ev",
            CentralityKind::Degree => "deg",
        }
    }
}

/// Per-node scores, indexed like the network's node list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub kind: CentralityKind,
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
}

impl CentralityVector {
    fn new(kind: CentralityKind, net: &CollabNetwork, scores: Vec<f64>) -> Self {
        CentralityVector {
            kind,
            labels: net.nodes().to_vec(),
            scores,
        }
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.scores[i])
    }

    pub fn max(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            0.0
        } else {
            self.scores.iter().sum::<f64>() / self.scores.len() as f64
        }
    }
}

fn accumulate(dag: &ShortestPathDag, delta: &mut [f64], bc: &mut [f64]) {
    delta.iter_mut().for_each(|d| *d = 0.0);
    for &w in dag.order.iter().rev() {
        let coeff = (1.0 + delta[w]) / dag.sigma[w];
        for &v in &dag.preds[w] {
            delta[v] += dag.sigma[v] * coeff;
        }
        if w != dag.source {
            bc[w] += delta[w];
        }
    }
}

fn brandes(n: usize, dag_for: impl Fn(usize) -> ShortestPathDag + Sync) -> Vec<f64> {
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut bc = vec![0.0; n];
            let mut delta = vec![0.0; n];
            for &s in chunk {
                accumulate(&dag_for(s), &mut delta, &mut bc);
            }
            bc
        })
        .collect();
    let mut bc = vec![0.0; n];
    for p in partials {
        for (a, b) in bc.iter_mut().zip(p) {
            *a += b;
        }
    }
    // Each unordered pair was visited from both ends.
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

/// Raw betweenness. Disconnected pairs contribute nothing.
pub fn betweenness(net: &CollabNetwork, weighted: bool) -> Result<CentralityVector> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::TooSmall {
            needed: 2,
            actual: n,
        });
    }
    let scores = if weighted {
        let dist = to_distance(net)?;
        brandes(n, |s| dijkstra_dag(&dist, s))
    } else {
        brandes(n, |s| bfs_dag(net, s))
    };
    let kind = if weighted {
        CentralityKind::WeightedBetweenness
    } else {
        CentralityKind::Betweenness
    };
    Ok(CentralityVector::new(kind, net, scores))
}

/// Divides by `(n-1)(n-2)/2`, the most pairs one node can mediate.
pub fn normalize_bc(vector: &CentralityVector, n: usize) -> Result<CentralityVector> {
    if n < 3 {
        return Err(Error::TooSmall {
            needed: 3,
            actual: n,
        });
    }
    let divisor = ((n - 1) * (n - 2)) as f64 / 2.0;
    let kind = match vector.kind {
        CentralityKind::WeightedBetweenness | CentralityKind::NormalizedWeightedBetweenness => {
            CentralityKind::NormalizedWeightedBetweenness
        }
        _ => CentralityKind::NormalizedBetweenness,
    };
    Ok(CentralityVector {
        kind,
        labels: vector.labels.clone(),
        scores: vector.scores.iter().map(|s| s / divisor).collect(),
    })
}

pub fn normalized_betweenness(net: &CollabNetwork, weighted: bool) -> Result<CentralityVector> {
    normalize_bc(&betweenness(net, weighted)?, net.node_count())
}

/// Freeman centralization of normalized topological betweenness:
/// `sum(max - bc_i) / (n - 1)`. 1 on a star, 0 when every score is equal.
pub fn betweenness_centralization(net: &CollabNetwork) -> Result<f64> {
    let n = net.node_count();
    if n < 3 {
        return Err(Error::TooSmall {
            needed: 3,
            actual: n,
        });
    }
    let bc = normalized_betweenness(net, false)?;
    Ok(centralization_of(&bc.scores))
}

pub(crate) fn centralization_of(normalized: &[f64]) -> f64 {
    let n = normalized.len();
    let max = normalized.iter().copied().fold(0.0, f64::max);
    let spread: f64 = normalized.iter().map(|b| max - b).sum();
    (spread / (n - 1) as f64).clamp(0.0, 1.0)
}

/// Mean normalized topological betweenness over all nodes.
pub fn average_betweenness(net: &CollabNetwork) -> Result<f64> {
    Ok(normalized_betweenness(net, false)?.mean())
}

/// `deg(i) / (n - 1)`, ignoring weights.
pub fn degree_centrality(net: &CollabNetwork) -> Result<CentralityVector> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::TooSmall {
            needed: 2,
            actual: n,
        });
    }
    let scores = (0..n)
        .map(|i| net.degree(i) as f64 / (n - 1) as f64)
        .collect();
    Ok(CentralityVector::new(CentralityKind::Degree, net, scores))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorCentrality {
    pub vector: CentralityVector,
    pub eigenvalue: f64,
    /// `max |(A x - lambda x)_i|` at termination.
    pub residual: f64,
    pub iterations: usize,
    /// Size of the component the eigenvector was computed on.
    pub component_size: usize,
}

/// Principal eigenvector of the weighted adjacency matrix, L2-normalized.
///
/// On a disconnected network only the largest component is scored; the rest
/// get 0. Iteration stops once the fixed-point residual is at most
/// `tolerance` times the largest edge weight (or `tolerance` itself when all
/// weights are at most 1).
pub fn eigenvector_centrality(
    net: &CollabNetwork,
    tolerance: f64,
    max_iterations: usize,
) -> Result<EigenvectorCentrality> {
    let n = net.node_count();
    if n == 0 {
        return Err(Error::TooSmall {
            needed: 1,
            actual: 0,
        });
    }
    let comps = net.components();
    let largest = comps
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b[0].cmp(&a[0])))
        .expect("non-empty network");
    if comps.len() > 1 {
        log::warn!(
            "network has {} components; eigenvector centrality uses the largest ({} of {} nodes)",
            comps.len(),
            largest.len(),
            n
        );
    }
    let sub = if comps.len() > 1 {
        net.induced_subgraph(largest)
    } else {
        net.clone()
    };
    let (x, lambda, residual, iterations) = power_iteration(&sub, tolerance, max_iterations)?;
    let mut scores = vec![0.0; n];
    for (k, &i) in largest.iter().enumerate() {
        scores[i] = x[k];
    }
    Ok(EigenvectorCentrality {
        vector: CentralityVector::new(CentralityKind::Eigenvector, net, scores),
        eigenvalue: lambda,
        residual,
        iterations,
        component_size: largest.len(),
    })
}

fn power_iteration(
    net: &CollabNetwork,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, f64, f64, usize)> {
    let n = net.node_count();
    if n == 1 {
        return Ok((vec![1.0], 0.0, 0.0, 0));
    }
    let max_w = net.edges().iter().map(|e| e.2).fold(0.0, f64::max);
    let threshold = tolerance * max_w.max(1.0);
    // A + cI has the same eigenvectors and separates lambda from -lambda on
    // bipartite graphs; c is half the mean weighted degree (at most lambda).
    let shift = net.total_weight() / n as f64;

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iterations {
        for (i, out) in ax.iter_mut().enumerate() {
            *out = net.neighbors(i).iter().map(|&(j, w)| w * x[j]).sum();
        }
        let lambda: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        residual = x
            .iter()
            .zip(&ax)
            .map(|(xi, axi)| (axi - lambda * xi).abs())
            .fold(0.0, f64::max);
        if residual <= threshold {
            for v in &mut x {
                *v = v.max(0.0);
            }
            return Ok((x, lambda, residual, it));
        }
        if it == max_iterations {
            break;
        }
        let mut norm = 0.0;
        for i in 0..n {
            x[i] = ax[i] + shift * x[i];
            norm += x[i] * x[i];
        }
        let norm = norm.sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star3() -> CollabNetwork {
        CollabNetwork::from_pairs(&[("H", "A", 1.0), ("H", "B", 1.0), ("H", "C", 1.0)]).unwrap()
    }

    fn path3() -> CollabNetwork {
        CollabNetwork::from_pairs(&[("A", "B", 1.0), ("B", "C", 1.0)]).unwrap()
    }

    fn complete(k: usize) -> CollabNetwork {
        let names: Vec<String> = (0..k).map(|i| format!("N{i}")).collect();
        let mut e = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                e.push((names[i].as_str(), names[j].as_str(), 1.0));
            }
        }
        CollabNetwork::from_pairs(&e).unwrap()
    }

    #[test]
    fn path_interior_vertex() {
        for weighted in [false, true] {
            let bc = betweenness(&path3(), weighted).unwrap();
            assert_eq!(bc.scores, vec![0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn triangle_is_zero() {
        let bc = betweenness(&complete(3), false).unwrap();
        assert!(bc.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn weighted_prefers_heavy_detour() {
        let net = CollabNetwork::from_pairs(&[("A", "B", 100.0), ("B", "C", 100.0), ("A", "C", 1.0)]).unwrap();
        let w = betweenness(&net, true).unwrap();
        assert_eq!(w.get("B"), Some(1.0));
        assert_eq!(betweenness(&net, false).unwrap().get("B"), Some(0.0));
    }

    #[test]
    fn too_small() {
        let one = CollabNetwork::new(["A"], Vec::<(&str, &str, f64)>::new(), Default::default()).unwrap();
        assert!(betweenness(&one, false).is_err());
        let bc = betweenness(&CollabNetwork::from_pairs(&[("A", "B", 1.0)]).unwrap(), false).unwrap();
        assert!(normalize_bc(&bc, 2).is_err());
    }

    #[test]
    fn normalized_star_and_path() {
        let raw = betweenness(&star3(), false).unwrap();
        assert_eq!(raw.get("H"), Some(3.0));
        assert_eq!(normalize_bc(&raw, 4).unwrap().get("H"), Some(1.0));
        let p = normalized_betweenness(&path3(), false).unwrap();
        assert_eq!(p.get("B"), Some(1.0));
        let zeros = CentralityVector { kind: CentralityKind::Betweenness, labels: vec!["a".into(); 5], scores: vec![0.0; 5] };
        assert!(normalize_bc(&zeros, 5).unwrap().scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn eigen_complete_k4() {
        let ev = eigenvector_centrality(&complete(4), EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS).unwrap();
        for s in &ev.vector.scores {
            assert!((s - 0.5).abs() < 1e-12);
        }
        assert!((ev.eigenvalue - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_star() {
        let ev = eigenvector_centrality(&star3(), EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS).unwrap();
        assert!((ev.vector.get("H").unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((ev.vector.get("A").unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-9);
        assert!((ev.eigenvalue - 3f64.sqrt()).abs() < 1e-9);
        assert!(ev.residual <= 1e-10);
    }

    #[test]
    fn eigen_single_edge() {
        let net = CollabNetwork::from_pairs(&[("A", "B", 7.0)]).unwrap();
        let ev = eigenvector_centrality(&net, EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS).unwrap();
        for s in &ev.vector.scores {
            assert!((s - 0.5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_disconnected_uses_largest_component() {
        let net = CollabNetwork::from_pairs(&[("A", "B", 1.0), ("B", "C", 1.0), ("C", "A", 1.0), ("X", "Y", 1.0)]).unwrap();
        let ev = eigenvector_centrality(&net, EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS).unwrap();
        assert_eq!(ev.component_size, 3);
        assert_eq!(ev.vector.get("X"), Some(0.0));
        assert!((ev.vector.get("A").unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn eigen_reports_non_convergence() {
        let net = CollabNetwork::from_pairs(&[("A", "B", 1.0), ("B", "C", 2.0), ("C", "D", 1.0)]).unwrap();
        match eigenvector_centrality(&net, 1e-15, 0) {
            Err(Error::NoConvergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degree_examples() {
        let d = degree_centrality(&star3()).unwrap();
        assert_eq!(d.get("H"), Some(1.0));
        assert_eq!(d.get("A"), Some(1.0 / 3.0));
        let net = CollabNetwork::new(["Z"], [("A", "B", 1.0), ("B", "C", 1.0), ("C", "D", 1.0)], Default::default()).unwrap();
        assert_eq!(degree_centrality(&net).unwrap().get("Z"), Some(0.0));
        assert!(degree_centrality(&complete(6)).unwrap().scores.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn centralization_examples() {
        assert!((betweenness_centralization(&star3()).unwrap() - 1.0).abs() < 1e-15);
        assert!((betweenness_centralization(&path3()).unwrap() - 1.0).abs() < 1e-15);
        let c4 = CollabNetwork::from_pairs(&[("A", "B", 1.0), ("B", "C", 1.0), ("C", "D", 1.0), ("D", "A", 1.0)]).unwrap();
        assert_eq!(betweenness_centralization(&c4).unwrap(), 0.0);
    }
}
