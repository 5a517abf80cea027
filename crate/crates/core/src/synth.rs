//! Seeded growth models: preferential attachment, fitness-weighted attachment
//! and a densifying hole-closure experiment.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `SynthConfig::seed`. Each
//! phase draws from its own stream of that seed: stream 0 picks attachment
//! targets, stream 1 draws node fitness, stream 2 picks densification pairs.
//! Adding a phase therefore never perturbs the draws of another.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::normalized_betweenness;
use crate::community::communities;
use crate::error::{Error, Result};
use crate::graph::{CollabNetwork, Slice};
use crate::ingest::PublicationRecord;
use crate::structure::{clustering, global_efficiency, k_core};

/// Attachment kernel recorded in run metadata.
pub const KERNEL: &str = "eta_i * k_i";

const STREAM_GROWTH: u64 = 0;
const STREAM_FITNESS: u64 = 1;
const STREAM_DENSIFY: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum FitnessLaw {
    /// Every node has fitness 1: plain preferential attachment.
    Constant,
    /// Fitness drawn from (0, 1].
    Uniform,
    /// Fitness 1 except the entrant, which gets `eta` times the median
    /// fitness of the nodes present when it arrives.
    Entrant { eta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_final: usize,
    pub m: usize,
    pub fitness: FitnessLaw,
    /// Index of the node that arrives as the entrant. Growth before it is the
    /// hub phase; densification only runs from here on.
    pub entrant_arrival: usize,
    pub checkpoint_stride: usize,
    /// Densification edges added per arrival, as a fraction of the current
    /// node count. 0 disables densification.
    #[serde(default)]
    pub densify_rate: f64,
    /// Rounds of densification without arrivals after growth ends.
    #[serde(default)]
    pub settle_rounds: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_final: 1000,
            m: 3,
            fitness: FitnessLaw::Entrant { eta: 5.0 },
            entrant_arrival: 200,
            checkpoint_stride: 100,
            densify_rate: DEFAULT_DENSIFY_RATE,
            settle_rounds: 0,
        }
    }
}

/// Densification rate of the standard hole-closure run.
pub const DEFAULT_DENSIFY_RATE: f64 = 0.1;

impl SynthConfig {
    pub fn pa(seed: u64, n_final: usize, m: usize) -> Self {
        SynthConfig {
            seed,
            n_final,
            m,
            fitness: FitnessLaw::Constant,
            entrant_arrival: n_final - 1,
            checkpoint_stride: n_final,
            densify_rate: 0.0,
            settle_rounds: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        if self.n_final <= self.m + 1 {
            return bad(format!("n_final {} must exceed m + 1 = {}", self.n_final, self.m + 1));
        }
        if self.entrant_arrival <= self.m || self.entrant_arrival >= self.n_final {
            return bad(format!(
                "entrant arrival {} must lie in {}..{}",
                self.entrant_arrival,
                self.m + 1,
                self.n_final
            ));
        }
        if self.checkpoint_stride == 0 {
            return bad("checkpoint stride must be positive".into());
        }
        if !(self.densify_rate >= 0.0 && self.densify_rate.is_finite()) {
            return bad(format!("densify rate {} must be finite and >= 0", self.densify_rate));
        }
        if let FitnessLaw::Entrant { eta } = self.fitness {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("eta {eta} must be positive and finite"));
            }
        }
        Ok(())
    }

    fn has_entrant(&self) -> bool {
        matches!(self.fitness, FitnessLaw::Entrant { .. })
    }
}

/// A generated graph with the step at which every edge appeared.
///
/// Steps count arrivals: an edge with step `s` exists once the graph has `s`
/// nodes. Settle rounds continue the count past `n_final`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SynthConfig,
    pub fitness: Vec<f64>,
    /// `(a, b, step)` in insertion order, so steps are non-decreasing.
    pub edges: Vec<(u32, u32, u32)>,
}

pub fn node_label(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(4);
    format!("N{i:0width$}")
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn edge_key(a: u32, b: u32) -> u64 {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    ((a as u64) << 32) | b as u64
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

struct Builder {
    edges: Vec<(u32, u32, u32)>,
    present: HashSet<u64>,
    /// Every edge contributes both endpoints, so a uniform pick is degree
    /// proportional.
    endpoints: Vec<u32>,
    /// Prefix sums of fitness for pair sampling.
    fitness_cumsum: Vec<f64>,
}

impl Builder {
    fn add(&mut self, a: u32, b: u32, step: u32) -> bool {
        if a == b || !self.present.insert(edge_key(a, b)) {
            return false;
        }
        self.edges.push((a, b, step));
        self.endpoints.push(a);
        self.endpoints.push(b);
        true
    }

    fn pick_by_fitness(&self, r: &mut ChaCha8Rng, nodes: usize) -> u32 {
        let total = self.fitness_cumsum[nodes - 1];
        let x = r.gen::<f64>() * total;
        self.fitness_cumsum[..nodes].partition_point(|&c| c <= x).min(nodes - 1) as u32
    }

    /// Adds up to `count` new edges between distinct nodes drawn with
    /// probability proportional to fitness.
    fn densify(&mut self, r: &mut ChaCha8Rng, nodes: usize, count: usize, step: u32) {
        let capacity = nodes * (nodes - 1) / 2;
        let mut added = 0;
        while added < count && self.present.len() < capacity {
            let a = self.pick_by_fitness(r, nodes);
            let b = self.pick_by_fitness(r, nodes);
            if self.add(a, b, step) {
                added += 1;
            }
        }
    }
}

/// Fitness-weighted growth: every arrival attaches `m` edges to distinct
/// existing nodes chosen with probability proportional to `eta_i * k_i`.
pub fn generate_fitness(config: &SynthConfig) -> Result<Trajectory> {
    config.validate()?;
    let n = config.n_final;
    let m = config.m;
    let mut fitness = match config.fitness {
        FitnessLaw::Uniform => {
            let mut r = rng(config.seed, STREAM_FITNESS);
            (0..n).map(|_| 1.0 - r.gen::<f64>()).collect()
        }
        _ => vec![1.0; n],
    };
    let mut grow = rng(config.seed, STREAM_GROWTH);
    let mut dens = rng(config.seed, STREAM_DENSIFY);
    let mut b = Builder {
        edges: Vec::new(),
        present: HashSet::new(),
        endpoints: Vec::new(),
        fitness_cumsum: Vec::with_capacity(n),
    };
    let seed_nodes = m + 1;
    for i in 0..seed_nodes {
        for j in i + 1..seed_nodes {
            b.add(i as u32, j as u32, seed_nodes as u32);
        }
    }
    let mut acc = 0.0;
    for &f in &fitness[..seed_nodes] {
        acc += f;
        b.fitness_cumsum.push(acc);
    }
    let mut eta_max = fitness[..seed_nodes].iter().cloned().fold(0.0, f64::max);

    let mut targets = Vec::with_capacity(m);
    for v in seed_nodes..n {
        if let (FitnessLaw::Entrant { eta }, true) = (config.fitness, v == config.entrant_arrival) {
            fitness[v] = eta * median(&fitness[..v]);
        }
        targets.clear();
        while targets.len() < m {
            let u = b.endpoints[grow.gen_range(0..b.endpoints.len())];
            let f = fitness[u as usize];
            // Thinning turns the degree-proportional pick into eta * k.
            if f < eta_max && grow.gen::<f64>() * eta_max >= f {
                continue;
            }
            if !targets.contains(&u) {
                targets.push(u);
            }
        }
        let step = (v + 1) as u32;
        for &u in &targets {
            b.add(v as u32, u, step);
        }
        eta_max = eta_max.max(fitness[v]);
        acc += fitness[v];
        b.fitness_cumsum.push(acc);
        if v >= config.entrant_arrival && config.densify_rate > 0.0 {
            let count = (config.densify_rate * (v + 1) as f64).round() as usize;
            b.densify(&mut dens, v + 1, count, step);
        }
    }
    for round in 0..config.settle_rounds {
        let count = (config.densify_rate * n as f64).round() as usize;
        b.densify(&mut dens, n, count, (n + 1 + round) as u32);
    }
    Ok(Trajectory {
        config: config.clone(),
        fitness,
        edges: b.edges,
    })
}

/// Classic preferential attachment. Requires the constant fitness law, under
/// which it matches `generate_fitness` draw for draw.
pub fn generate_pa(config: &SynthConfig) -> Result<Trajectory> {
    if config.fitness != FitnessLaw::Constant {
        return Err(Error::Invalid("preferential attachment needs constant fitness".into()));
    }
    generate_fitness(config)
}

impl Trajectory {
    pub fn last_step(&self) -> usize {
        self.config.n_final + self.config.settle_rounds
    }

    pub fn nodes_at(&self, step: usize) -> usize {
        step.min(self.config.n_final)
    }

    /// Edges present at `step`.
    pub fn edges_at(&self, step: usize) -> &[(u32, u32, u32)] {
        let end = self.edges.partition_point(|&(_, _, s)| s as usize <= step);
        &self.edges[..end]
    }

    pub fn degrees_at(&self, step: usize) -> Vec<usize> {
        let mut deg = vec![0; self.nodes_at(step)];
        for &(a, b, _) in self.edges_at(step) {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg
    }

    /// Unit-weight network at `step`.
    pub fn network_at(&self, step: usize) -> Result<CollabNetwork> {
        let n = self.config.n_final;
        let labels: Vec<String> = (0..self.nodes_at(step)).map(|i| node_label(i, n)).collect();
        let edges: Vec<(String, String, f64)> = self
            .edges_at(step)
            .iter()
            .map(|&(a, b, _)| (labels[a as usize].clone(), labels[b as usize].clone(), 1.0))
            .collect();
        CollabNetwork::new(labels.iter().cloned(), edges, Slice::default())
    }

    /// The entrant's index, if the law designates one.
    pub fn entrant(&self) -> Option<usize> {
        self.config.has_entrant().then_some(self.config.entrant_arrival)
    }

    /// Steps at which the experiment records metrics: multiples of the
    /// stride, the step just before the entrant arrives, the end of growth
    /// and every settle round.
    pub fn checkpoint_steps(&self) -> Vec<usize> {
        let c = &self.config;
        let mut steps: Vec<usize> = (1..)
            .map(|k| k * c.checkpoint_stride)
            .take_while(|&s| s <= c.n_final)
            .filter(|&s| s > c.m)
            .collect();
        steps.push(c.entrant_arrival);
        steps.extend(c.n_final..=self.last_step());
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    /// Writes one JSON-lines publication per edge per year, `per_edge` times,
    /// over `years` consecutive years starting at `first_year`. Year `k`
    /// shows the graph after a proportional share of the arrivals.
    pub fn export_publications<W: Write>(
        &self,
        mut out: W,
        first_year: i32,
        years: usize,
        per_edge: usize,
        field: &str,
    ) -> Result<usize> {
        if years == 0 || per_edge == 0 {
            return Err(Error::Invalid("export needs at least one year and one record per edge".into()));
        }
        let n = self.config.n_final;
        let start = self.config.m + 1;
        let mut written = 0;
        for k in 0..years {
            let step = start + (n - start) * (k + 1) / years;
            let year = first_year + k as i32;
            for (e, &(a, b, _)) in self.edges_at(step).iter().enumerate() {
                for r in 0..per_edge {
                    let rec = PublicationRecord {
                        id: format!("{year}-{e}-{r}"),
                        year,
                        field: field.to_string(),
                        countries: [node_label(a as usize, n), node_label(b as usize, n)]
                            .into_iter()
                            .collect(),
                    };
                    serde_json::to_writer(&mut out, &rec).map_err(|e| Error::json("publication export", e))?;
                    out.write_all(b"\n").map_err(|e| Error::io("publication export", e))?;
                    written += 1;
                }
            }
        }
        Ok(written)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub nodes: usize,
    pub edges: usize,
    pub hub_degree: usize,
    pub hub_bc_norm: f64,
    pub avg_clustering: f64,
    pub efficiency: f64,
    pub max_k: usize,
    pub communities: usize,
    pub entrant_degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthRun {
    pub config: SynthConfig,
    pub kernel: String,
    /// Highest-degree node when the entrant arrives, lowest index on ties.
    pub hub: String,
    pub entrant: Option<String>,
    pub checkpoints: Vec<Checkpoint>,
}

impl SynthRun {
    /// Index of the checkpoint taken just before the entrant arrived.
    pub fn arrival_index(&self) -> usize {
        self.checkpoints
            .iter()
            .position(|c| c.step == self.config.entrant_arrival)
            .expect("arrival step is always a checkpoint")
    }
}

fn hub_of(degrees: &[usize]) -> usize {
    let mut best = 0;
    for (i, &d) in degrees.iter().enumerate() {
        if d > degrees[best] {
            best = i;
        }
    }
    best
}

/// Grows the configured trajectory and records hub betweenness and cohesion
/// at every checkpoint. Before the entrant arrives the hub is the current
/// highest-degree node.
pub fn hole_closure_experiment(config: &SynthConfig) -> Result<SynthRun> {
    let traj = generate_fitness(config)?;
    let n = config.n_final;
    let hub = hub_of(&traj.degrees_at(config.entrant_arrival));
    let entrant = traj.entrant();
    let mut checkpoints = Vec::new();
    for step in traj.checkpoint_steps() {
        let net = traj.network_at(step)?;
        let degrees = traj.degrees_at(step);
        let tracked = if step >= config.entrant_arrival { hub } else { hub_of(&degrees) };
        let bc = normalized_betweenness(&net, false)?;
        let cores = k_core(&net);
        checkpoints.push(Checkpoint {
            step,
            nodes: net.node_count(),
            edges: net.edge_count(),
            hub_degree: degrees[tracked],
            hub_bc_norm: bc.scores[tracked],
            avg_clustering: clustering(&net).average,
            efficiency: global_efficiency(&net)?,
            max_k: cores.max_k,
            communities: communities(&net, false).len(),
            entrant_degree: entrant.filter(|&e| e < degrees.len()).map(|e| degrees[e]),
        });
    }
    Ok(SynthRun {
        config: config.clone(),
        kernel: KERNEL.to_string(),
        hub: node_label(hub, n),
        entrant: entrant.map(|e| node_label(e, n)),
        checkpoints,
    })
}

/// Runs the experiment once per seed, in parallel, keeping seed order.
pub fn run_seeds(config: &SynthConfig, seeds: &[u64]) -> Result<Vec<SynthRun>> {
    seeds
        .par_iter()
        .map(|&seed| {
            hole_closure_experiment(&SynthConfig {
                seed,
                ..config.clone()
            })
        })
        .collect()
}
