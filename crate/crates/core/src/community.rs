//! Modularity and Clauset-Newman-Moore greedy community detection.
//!
//! Merges are applied while some pair of adjacent communities has a strictly
//! positive modularity gain. Gains within [`MERGE_TIE_TOLERANCE`] of the best
//! are ties, resolved by the lexicographically smallest sorted label list of
//! the merged block.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CollabNetwork;

pub const MERGE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Blocks of sorted labels, ordered by their first label.
    pub blocks: Vec<Vec<String>>,
    #[serde(rename = "Q")]
    pub q: f64,
}

impl CommunityPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

fn edge_weight(w: f64, weighted: bool) -> f64 {
    if weighted {
        w
    } else {
        1.0
    }
}

/// Modularity of a block assignment (`block[i]` for node `i`).
///
/// Uses `Q = sum_c L_c/m - ((2 L_c + B_c) / 2m)^2`, where `L_c` is the weight
/// inside block `c` and `B_c` the weight leaving it. An edgeless graph scores 0.
pub fn modularity_of_assignment(net: &CollabNetwork, block: &[usize], weighted: bool) -> f64 {
    let blocks = block.iter().copied().max().map_or(0, |b| b + 1);
    let mut inside = vec![0.0; blocks];
    let mut leaving = vec![0.0; blocks];
    let mut m = 0.0;
    for &(i, j, w) in net.edges() {
        let w = edge_weight(w, weighted);
        m += w;
        if block[i] == block[j] {
            inside[block[i]] += w;
        } else {
            leaving[block[i]] += w;
            leaving[block[j]] += w;
        }
    }
    if m == 0.0 {
        return 0.0;
    }
    (0..blocks)
        .map(|c| {
            let share = (2.0 * inside[c] + leaving[c]) / (2.0 * m);
            inside[c] / m - share * share
        })
        .sum()
}

/// Modularity of a labelled partition, which must cover every node exactly once.
pub fn modularity_score(
    net: &CollabNetwork,
    partition: &[Vec<String>],
    weighted: bool,
) -> Result<f64> {
    let mut block = vec![usize::MAX; net.node_count()];
    for (b, members) in partition.iter().enumerate() {
        for label in members {
            let i = net.require(label)?;
            if block[i] != usize::MAX {
                return Err(Error::Invalid(format!("{label} appears in two blocks")));
            }
            block[i] = b;
        }
    }
    if let Some(i) = block.iter().position(|&b| b == usize::MAX) {
        return Err(Error::Invalid(format!(
            "partition does not cover {}",
            net.label(i)
        )));
    }
    Ok(modularity_of_assignment(net, &block, weighted))
}

struct Community {
    members: Vec<usize>,
    degree: f64,
    links: BTreeMap<usize, f64>,
}

fn merged_key(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut k = Vec::with_capacity(a.len() + b.len());
    k.extend_from_slice(a);
    k.extend_from_slice(b);
    k.sort_unstable();
    k
}

/// Greedy agglomerative modularity maximisation.
pub fn communities(net: &CollabNetwork, weighted: bool) -> CommunityPartition {
    let n = net.node_count();
    let mut comms: Vec<Option<Community>> = (0..n)
        .map(|i| {
            Some(Community {
                members: vec![i],
                degree: 0.0,
                links: BTreeMap::new(),
            })
        })
        .collect();
    let mut m = 0.0;
    for &(i, j, w) in net.edges() {
        let w = edge_weight(w, weighted);
        m += w;
        for (a, b) in [(i, j), (j, i)] {
            let c = comms[a].as_mut().unwrap();
            c.degree += w;
            c.links.insert(b, w);
        }
    }

    if m > 0.0 {
        let two_m_sq = 2.0 * m * m;
        loop {
            let mut best = f64::NEG_INFINITY;
            let mut gains: Vec<(usize, usize, f64)> = Vec::new();
            for (c, comm) in comms.iter().enumerate() {
                let Some(comm) = comm else { continue };
                for (&d, &w) in comm.links.range(c + 1..) {
                    let other = comms[d].as_ref().unwrap();
                    let gain = w / m - comm.degree * other.degree / two_m_sq;
                    best = best.max(gain);
                    gains.push((c, d, gain));
                }
            }
            if !(best > 0.0) {
                break;
            }
            let mut chosen: Option<(usize, usize, Vec<usize>)> = None;
            for &(c, d, gain) in &gains {
                if gain < best - MERGE_TIE_TOLERANCE {
                    continue;
                }
                let key = merged_key(
                    &comms[c].as_ref().unwrap().members,
                    &comms[d].as_ref().unwrap().members,
                );
                if chosen.as_ref().is_none_or(|(_, _, k)| key < *k) {
                    chosen = Some((c, d, key));
                }
            }
            let (c, d, key) = chosen.expect("best gain has a candidate");
            let absorbed = comms[d].take().unwrap();
            for (&e, &w) in &absorbed.links {
                if e == c {
                    continue;
                }
                let other = comms[e].as_mut().unwrap();
                other.links.remove(&d);
                *other.links.entry(c).or_insert(0.0) += w;
            }
            let target = comms[c].as_mut().unwrap();
            target.members = key;
            target.degree += absorbed.degree;
            target.links.remove(&d);
            for (e, w) in absorbed.links {
                if e != c {
                    *target.links.entry(e).or_insert(0.0) += w;
                }
            }
        }
    }

    let mut block = vec![0; n];
    let mut blocks: Vec<Vec<usize>> = comms.into_iter().flatten().map(|c| c.members).collect();
    blocks.sort();
    for (b, members) in blocks.iter().enumerate() {
        for &i in members {
            block[i] = b;
        }
    }
    let q = modularity_of_assignment(net, &block, weighted);
    CommunityPartition {
        blocks: blocks
            .into_iter()
            .map(|b| b.into_iter().map(|i| net.label(i).to_string()).collect())
            .collect(),
        q,
    }
}

/// Ego network of `country`: its neighbours and every edge among them, plus
/// the ego itself unless `include_ego` is false.
pub fn ego_network(net: &CollabNetwork, country: &str, include_ego: bool) -> Result<CollabNetwork> {
    let ego = net.require(country)?;
    let mut keep: Vec<usize> = net.neighbors(ego).iter().map(|&(j, _)| j).collect();
    if include_ego {
        keep.push(ego);
    }
    Ok(net.induced_subgraph(&keep))
}

/// Modularity of the greedy partition of an ego network.
pub fn ego_modularity(
    net: &CollabNetwork,
    country: &str,
    include_ego: bool,
    weighted: bool,
) -> Result<f64> {
    let ego = ego_network(net, country, include_ego)?;
    Ok(communities(&ego, weighted).q)
}
