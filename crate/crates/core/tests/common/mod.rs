//! Exhaustive reference implementations used to check the fast algorithms on
//! small graphs. Everything here enumerates; nothing is clever.
#![allow(dead_code)]

use collabnet::CollabNetwork;
use rand::Rng;

pub const LABELS: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

/// Random connected graph on `n` nodes: a random spanning tree plus each
/// remaining pair with probability `p`. Weights are integers in 1..=5 when
/// `integer` is set, otherwise uniform in [0.1, 10).
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, p: f64, integer: bool) -> CollabNetwork {
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    let weight = |rng: &mut R| {
        if integer {
            rng.gen_range(1..=5) as f64
        } else {
            rng.gen_range(0.1..10.0)
        }
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        adj[u][v] = true;
        adj[v][u] = true;
        let w = weight(rng);
        edges.push((LABELS[u], LABELS[v], w));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !adj[u][v] && rng.gen_bool(p) {
                adj[u][v] = true;
                let w = weight(rng);
                edges.push((LABELS[u], LABELS[v], w));
            }
        }
    }
    CollabNetwork::from_pairs(&edges).expect("valid random graph")
}

/// Every simple path from `s` to `t`, as node sequences.
pub fn simple_paths(net: &CollabNetwork, s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(net: &CollabNetwork, t: usize, path: &mut Vec<usize>, seen: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == t {
            out.push(path.clone());
            return;
        }
        for &(u, _) in net.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                path.push(u);
                walk(net, t, path, seen, out);
                path.pop();
                seen[u] = false;
            }
        }
    }
    let mut seen = vec![false; net.node_count()];
    seen[s] = true;
    let mut out = Vec::new();
    walk(net, t, &mut vec![s], &mut seen, &mut out);
    out
}

pub fn path_length(net: &CollabNetwork, path: &[usize], weighted: bool) -> f64 {
    path.windows(2)
        .map(|e| if weighted { 1.0 / net.weight(e[0], e[1]).unwrap() } else { 1.0 })
        .sum()
}

/// Minimum-length simple paths between `s` and `t`, with their length.
pub fn shortest_paths(net: &CollabNetwork, s: usize, t: usize, weighted: bool) -> (f64, Vec<Vec<usize>>) {
    let all = simple_paths(net, s, t);
    let lens: Vec<f64> = all.iter().map(|p| path_length(net, p, weighted)).collect();
    let best = lens.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * best.max(1.0);
    let paths = all
        .into_iter()
        .zip(&lens)
        .filter(|(_, &l)| l - best <= tol)
        .map(|(p, _)| p)
        .collect();
    (best, paths)
}

/// Betweenness by enumerating every shortest path of every unordered pair.
pub fn betweenness(net: &CollabNetwork, weighted: bool) -> Vec<f64> {
    let n = net.node_count();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let (_, paths) = shortest_paths(net, s, t, weighted);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as f64;
            for v in 0..n {
                let through = paths.iter().filter(|p| p[1..p.len() - 1].contains(&v)).count();
                bc[v] += through as f64 / total;
            }
        }
    }
    bc
}

/// Hop-count global efficiency from enumerated paths.
pub fn efficiency(net: &CollabNetwork) -> f64 {
    let n = net.node_count();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for s in 0..n {
        for t in s + 1..n {
            let (d, paths) = shortest_paths(net, s, t, false);
            if !paths.is_empty() {
                sum += 1.0 / d;
            }
        }
    }
    2.0 * sum / (n * (n - 1)) as f64
}

/// Core number of each node: the largest minimum degree over all node
/// subsets containing it.
pub fn core_numbers(net: &CollabNetwork) -> Vec<usize> {
    let n = net.node_count();
    assert!(n <= 16);
    let mut core = vec![0usize; n];
    for mask in 1u32..(1 << n) {
        let inside = |v: usize| mask & (1 << v) != 0;
        let min_deg = (0..n)
            .filter(|&v| inside(v))
            .map(|v| net.neighbors(v).iter().filter(|&&(u, _)| inside(u)).count())
            .min()
            .unwrap();
        for v in (0..n).filter(|&v| inside(v)) {
            core[v] = core[v].max(min_deg);
        }
    }
    core
}

/// Modularity by the double sum over all ordered node pairs.
pub fn modularity(net: &CollabNetwork, block: &[usize], weighted: bool) -> f64 {
    let n = net.node_count();
    let w = |i: usize, j: usize| net.weight(i, j).map_or(0.0, |x| if weighted { x } else { 1.0 });
    let k: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w(i, j)).sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if block[i] == block[j] {
                q += w(i, j) - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as a block index per node.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(v: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if v.len() == n {
            out.push(v.clone());
            return;
        }
        let next = v.iter().max().map_or(0, |m| m + 1);
        for b in 0..=next {
            v.push(b);
            grow(v, n, out);
            v.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        grow(&mut vec![0], n, &mut out);
    }
    out
}

/// Best modularity over every partition.
pub fn optimal_modularity(net: &CollabNetwork, weighted: bool) -> (f64, Vec<usize>) {
    set_partitions(net.node_count())
        .into_iter()
        .map(|p| (modularity(net, &p, weighted), p))
        .fold((f64::NEG_INFINITY, Vec::new()), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Labels of each block of a per-node assignment.
pub fn blocks_to_labels(net: &CollabNetwork, block: &[usize]) -> Vec<Vec<String>> {
    let nb = block.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); nb];
    for (i, &b) in block.iter().enumerate() {
        out[b].push(net.label(i).to_string());
    }
    out.retain(|b| !b.is_empty());
    out
}

/// Spearman rank correlation, average ranks on ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Gaussian AR(1) series with coefficient `phi`, started from stationarity.
pub fn ar1<R: Rng>(rng: &mut R, t: usize, phi: f64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut x: f64 = StandardNormal.sample(rng);
    x /= (1.0 - phi * phi).sqrt();
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        out.push(x);
        let e: f64 = StandardNormal.sample(rng);
        x = phi * x + e;
    }
    out
}
