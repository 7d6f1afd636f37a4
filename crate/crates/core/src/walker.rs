//! Degree-biased random walk search for a maximum-degree node, plus the two
//! uniform sampling baselines it is compared against.
//!
//! From a node `u` the walk moves to neighbour `v` with probability
//! proportional to `d(v)^beta`; it stops on the first node of maximum degree.

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{partition_chain, AbsorbingChain, ChainError, DEFAULT_STEP_CAP};
use crate::graph::{DegreeProfile, Graph, GraphError, NodeId};
use crate::linalg::DenseMatrix;
use crate::seed::{stream_rng, Rng};

pub const DEFAULT_TRIALS: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("node {0} has no neighbours")]
    IsolatedNode(NodeId),
    #[error("graph is disconnected; absorption is not guaranteed")]
    Disconnected,
    #[error("every node has maximum degree; there are no transient states")]
    NoTransientStates,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sampling pool exhausted without finding a maximum-degree node")]
    PoolExhausted,
}

/// Where walks start.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum StartMode {
    /// Uniform over nodes that are not of maximum degree.
    #[default]
    Transient,
    /// Uniform over all nodes; starts on a maximum-degree node take zero steps.
    AllNodes,
    /// Explicit per-node probabilities.
    Custom(Vec<f64>),
}

impl StartMode {
    /// Per-node start probabilities.
    pub fn node_distribution(&self, profile: &DegreeProfile) -> Result<Vec<f64>, WalkError> {
        let n = profile.node_count();
        match self {
            StartMode::Transient => {
                let transient = profile.transient_nodes();
                if transient.is_empty() {
                    return Err(WalkError::NoTransientStates);
                }
                let p = 1.0 / transient.len() as f64;
                let mut dist = vec![0.0; n];
                for v in transient {
                    dist[v] = p;
                }
                Ok(dist)
            }
            StartMode::AllNodes => Ok(vec![1.0 / n as f64; n]),
            StartMode::Custom(dist) => {
                if dist.len() != n {
                    return Err(WalkError::InvalidConfig(format!(
                        "start distribution has {} entries for {n} nodes",
                        dist.len()
                    )));
                }
                let total: f64 = dist.iter().sum();
                if dist.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(WalkError::InvalidConfig(
                        "start distribution must be nonnegative and sum to 1".into(),
                    ));
                }
                Ok(dist.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub beta: f64,
    pub seed: u64,
    pub trials: usize,
    pub step_cap: u64,
    pub start: StartMode,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            beta: 0.0,
            seed: 0,
            trials: DEFAULT_TRIALS,
            step_cap: DEFAULT_STEP_CAP,
            start: StartMode::Transient,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(WalkError::InvalidConfig(format!("beta = {}", self.beta)));
        }
        if self.trials == 0 {
            return Err(WalkError::InvalidConfig("trial count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sample statistics of absorption times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
}

impl TrialSummary {
    pub fn from_samples(samples: &[u64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                std: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = samples.iter().map(|&t| t as f64).sum::<f64>() / n;
        let std = if count > 1 {
            let ss: f64 = samples.iter().map(|&t| (t as f64 - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            count,
            mean,
            std,
            stderr: std / n.sqrt(),
        }
    }
}

/// Normalised weights `w_i ∝ degree_i^beta`, evaluated as
/// `exp(beta (ln d_i - max ln d))` so large exponents cannot overflow.
pub fn biased_weights(degrees: impl Iterator<Item = usize> + Clone, beta: f64) -> Vec<f64> {
    let logs: Vec<f64> = degrees.map(|d| (d as f64).ln()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (beta * (l - top)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Transition probabilities out of `u`, paired with the neighbour they lead to.
pub fn walk_transition_row(g: &Graph, u: NodeId, beta: f64) -> Result<Vec<(NodeId, f64)>, WalkError> {
    let neighbors = g.neighbors(u);
    if neighbors.is_empty() {
        return Err(WalkError::IsolatedNode(u));
    }
    let weights = biased_weights(neighbors.iter().map(|&v| g.degree(v)), beta);
    Ok(neighbors.iter().copied().zip(weights).collect())
}

/// The walk as an `n`-state absorbing chain; maximum-degree nodes absorb.
pub fn build_full_chain(g: &Graph, beta: f64) -> Result<AbsorbingChain, WalkError> {
    if !g.is_connected() {
        return Err(WalkError::Disconnected);
    }
    let profile = DegreeProfile::new(g)?;
    let n = g.node_count();
    let mut p = DenseMatrix::zeros(n, n);
    for u in 0..n {
        if profile.is_max_degree(u) {
            p[(u, u)] = 1.0;
        } else {
            for (v, w) in walk_transition_row(g, u, beta)? {
                p[(u, v)] = w;
            }
        }
    }
    let labels = g.labels().iter().map(u64::to_string).collect();
    Ok(partition_chain(labels, &p, |u| profile.is_max_degree(u))?)
}

/// Per-node cumulative transition weights for one bias value.
#[derive(Debug, Clone)]
pub struct WalkTable<'g> {
    graph: &'g Graph,
    cumulative: Vec<Vec<f64>>,
}

impl<'g> WalkTable<'g> {
    pub fn new(graph: &'g Graph, beta: f64) -> Self {
        let cumulative = (0..graph.node_count())
            .map(|u| {
                let nb = graph.neighbors(u);
                let mut acc = 0.0;
                biased_weights(nb.iter().map(|&v| graph.degree(v)), beta)
                    .into_iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { graph, cumulative }
    }

    pub fn step(&self, u: NodeId, rng: &mut Rng) -> NodeId {
        let nb = self.graph.neighbors(u);
        if nb.len() == 1 {
            return nb[0];
        }
        let cum = &self.cumulative[u];
        let x = rng.random::<f64>() * cum[cum.len() - 1];
        nb[cum.partition_point(|&c| c <= x).min(nb.len() - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub start: NodeId,
    /// Steps to stand on a maximum-degree node, `None` if the cap was hit.
    pub steps: Option<u64>,
    /// First time a maximum-degree node was in the current node's closed
    /// neighbourhood.
    pub first_seen: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkRun {
    pub beta: f64,
    pub summary: TrialSummary,
    pub records: Vec<TrialRecord>,
    pub capped: usize,
}

impl WalkRun {
    /// Absorption times of the trials that finished.
    pub fn times(&self) -> Vec<u64> {
        self.records.iter().filter_map(|r| r.steps).collect()
    }
}

fn sample_index(cumulative: &[f64], rng: &mut Rng) -> usize {
    let total = cumulative[cumulative.len() - 1];
    let x = rng.random::<f64>() * total;
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
}

/// Nodes whose closed neighbourhood contains a maximum-degree node.
fn sees_max(g: &Graph, profile: &DegreeProfile) -> Vec<bool> {
    (0..g.node_count())
        .map(|v| profile.is_max_degree(v) || g.neighbors(v).iter().any(|&u| profile.is_max_degree(u)))
        .collect()
}

/// Monte Carlo estimate of the absorption time. Trial `i` draws from stream
/// `i` of the master seed, so per-trial times do not depend on threading.
pub fn simulate_brw(g: &Graph, cfg: &WalkConfig) -> Result<WalkRun, WalkError> {
    cfg.validate()?;
    if !g.is_connected() {
        return Err(WalkError::Disconnected);
    }
    let profile = DegreeProfile::new(g)?;
    if profile.transient_nodes().is_empty() {
        return Err(WalkError::NoTransientStates);
    }
    let start_cdf: Vec<f64> = {
        let mut acc = 0.0;
        cfg.start
            .node_distribution(&profile)?
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    };
    let table = WalkTable::new(g, cfg.beta);
    let seen = sees_max(g, &profile);
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(cfg.seed, trial as u64);
            let start = sample_index(&start_cdf, &mut rng);
            let mut node = start;
            let mut first_seen = seen[node].then_some(0);
            let mut steps = Some(0);
            let mut t = 0u64;
            while !profile.is_max_degree(node) {
                if t == cfg.step_cap {
                    steps = None;
                    break;
                }
                node = table.step(node, &mut rng);
                t += 1;
                if first_seen.is_none() && seen[node] {
                    first_seen = Some(t);
                }
                steps = Some(t);
            }
            TrialRecord {
                trial,
                start,
                steps,
                first_seen,
            }
        })
        .collect();
    let times: Vec<u64> = records.iter().filter_map(|r| r.steps).collect();
    Ok(WalkRun {
        beta: cfg.beta,
        summary: TrialSummary::from_samples(&times),
        capped: records.len() - times.len(),
        records,
    })
}

/// Uniform sampling baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SamplingMode {
    /// Draw nodes without replacement; success when the drawn node has maximum degree.
    #[serde(rename = "no-r")]
    NoReplacement,
    /// Draw without replacement observing the node and all its neighbours;
    /// success when any of them has maximum degree.
    #[serde(rename = "no-r-n")]
    WithNeighbors,
}

impl SamplingMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplingMode::NoReplacement => "no-r",
            SamplingMode::WithNeighbors => "no-r-n",
        }
    }
}

/// Which nodes leave the pool after a neighbourhood draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborPool {
    /// The drawn node and every neighbour it revealed.
    #[default]
    RemoveObserved,
    /// Only the drawn node.
    RemoveDrawnOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub mode: SamplingMode,
    pub seed: u64,
    pub trials: usize,
    pub pool: NeighborPool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingRun {
    pub mode: SamplingMode,
    pub summary: TrialSummary,
    pub times: Vec<u64>,
}

/// Remaining nodes with O(1) removal.
struct Pool {
    items: Vec<NodeId>,
    slot: Vec<usize>,
}

impl Pool {
    fn full(n: usize) -> Self {
        Self {
            items: (0..n).collect(),
            slot: (0..n).collect(),
        }
    }

    fn remove(&mut self, v: NodeId) {
        let i = self.slot[v];
        if i == usize::MAX {
            return;
        }
        let last = *self.items.last().expect("nonempty pool");
        self.items.swap_remove(i);
        if last != v {
            self.slot[last] = i;
        }
        self.slot[v] = usize::MAX;
    }
}

pub fn simulate_sampling(g: &Graph, cfg: &SamplingConfig) -> Result<SamplingRun, WalkError> {
    if cfg.trials == 0 {
        return Err(WalkError::InvalidConfig("trial count must be at least 1".into()));
    }
    let profile = DegreeProfile::new(g)?;
    let seen = sees_max(g, &profile);
    let n = g.node_count();
    let times: Result<Vec<u64>, WalkError> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(cfg.seed, trial as u64);
            let mut pool = Pool::full(n);
            let mut draws = 0u64;
            while !pool.items.is_empty() {
                let v = pool.items[rng.random_range(0..pool.items.len())];
                draws += 1;
                pool.remove(v);
                match cfg.mode {
                    SamplingMode::NoReplacement => {
                        if profile.is_max_degree(v) {
                            return Ok(draws);
                        }
                    }
                    SamplingMode::WithNeighbors => {
                        if seen[v] {
                            return Ok(draws);
                        }
                        if cfg.pool == NeighborPool::RemoveObserved {
                            for &u in g.neighbors(v) {
                                pool.remove(u);
                            }
                        }
                    }
                }
            }
            Err(WalkError::PoolExhausted)
        })
        .collect();
    let times = times?;
    Ok(SamplingRun {
        mode: cfg.mode,
        summary: TrialSummary::from_samples(&times),
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{absorption_stats, aggregate};
    use crate::graph::fixtures::{cycle, lollipop, star};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transition_rows() {
        // node 0 of a graph whose neighbours have degrees 2, 2, 4
        let g = Graph::from_edges(
            8,
            [(0, 1), (0, 2), (0, 3), (1, 4), (2, 5), (3, 5), (3, 6), (3, 7)],
        )
        .unwrap();
        let row = walk_transition_row(&g, 0, 0.0).unwrap();
        assert!(row.iter().all(|&(_, p)| close(p, 1.0 / 3.0, 1e-15)));

        let g = Graph::from_edges(6, [(0, 1), (0, 2), (1, 3), (2, 4), (2, 5), (2, 3)]).unwrap();
        assert_eq!((g.degree(1), g.degree(2)), (2, 4));
        let row = walk_transition_row(&g, 0, 1.0).unwrap();
        assert_eq!(row[0].0, 1);
        assert!(close(row[0].1, 1.0 / 3.0, 1e-15) && close(row[1].1, 2.0 / 3.0, 1e-15));
        let row = walk_transition_row(&g, 0, 30.0).unwrap();
        assert!(row[1].1 >= 1.0 - 1e-8);
        assert!(close(row[0].1 / row[1].1, 0.5f64.powi(30), 1e-20));

        let iso = Graph::from_edges(2, []).unwrap();
        assert_eq!(walk_transition_row(&iso, 0, 1.0), Err(WalkError::IsolatedNode(0)));
    }

    #[test]
    fn weights_survive_huge_beta() {
        let w = biased_weights([2usize, 3, 1000].into_iter(), 1000.0);
        assert!(w.iter().all(|x| x.is_finite()));
        assert!(close(w.iter().sum::<f64>(), 1.0, 1e-12));
        assert_eq!(w[2], 1.0);
    }

    #[test]
    fn full_chain_examples() {
        let s = absorption_stats(&build_full_chain(&star(5), 3.0).unwrap()).unwrap();
        assert!(s.mean.iter().all(|&m| close(m, 1.0, 1e-12)));

        let c = build_full_chain(&lollipop(), 0.0).unwrap();
        let s = absorption_stats(&c).unwrap();
        assert_eq!(c.transient_states(), &[0, 1, 3]);
        for (m, want) in s.mean.iter().zip([2.0, 2.0, 1.0]) {
            assert!(close(*m, want, 1e-12));
        }

        let c = build_full_chain(&cycle(3), 1.0).unwrap();
        assert_eq!(c.transient_count(), 0);

        let split = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(build_full_chain(&split, 1.0), Err(WalkError::Disconnected));
    }

    #[test]
    fn star_walks_take_one_step() {
        let run = simulate_brw(&star(5), &WalkConfig { beta: 2.0, ..Default::default() }).unwrap();
        assert_eq!((run.summary.mean, run.summary.std), (1.0, 0.0));
        assert!(run.records.iter().all(|r| r.first_seen == Some(0)));
    }

    #[test]
    fn lollipop_zero_bias_mean() {
        let cfg = WalkConfig {
            trials: 100_000,
            seed: 3,
            ..Default::default()
        };
        let run = simulate_brw(&lollipop(), &cfg).unwrap();
        assert!(close(run.summary.mean, 5.0 / 3.0, 3.0 * run.summary.stderr));
    }

    #[test]
    fn all_nodes_start_includes_zero_times() {
        let cfg = WalkConfig {
            trials: 20_000,
            seed: 11,
            start: StartMode::AllNodes,
            ..Default::default()
        };
        let run = simulate_brw(&lollipop(), &cfg).unwrap();
        // uniform over a, b, c, d: (2 + 2 + 0 + 1) / 4
        assert!(close(run.summary.mean, 1.25, 4.0 * run.summary.stderr));
        assert!(run.records.iter().any(|r| r.steps == Some(0)));
    }

    #[test]
    fn regular_graph_has_no_transient_nodes() {
        assert_eq!(
            simulate_brw(&cycle(5), &WalkConfig::default()),
            Err(WalkError::NoTransientStates)
        );
    }

    #[test]
    fn step_cap_is_reported() {
        // long path hanging off a hub-free structure: path 0..40 plus node 40 with degree 3
        let mut edges: Vec<(usize, usize)> = (0..40).map(|i| (i, i + 1)).collect();
        edges.push((40, 41));
        edges.push((40, 42));
        let g = Graph::from_edges(43, edges).unwrap();
        let cfg = WalkConfig {
            trials: 50,
            step_cap: 3,
            start: StartMode::Custom({
                let mut d = vec![0.0; 43];
                d[0] = 1.0;
                d
            }),
            ..Default::default()
        };
        let run = simulate_brw(&g, &cfg).unwrap();
        assert_eq!(run.capped, 50);
        assert_eq!(run.summary.count, 0);
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = WalkConfig {
            beta: 1.5,
            seed: 99,
            trials: 300,
            ..Default::default()
        };
        let g = lollipop();
        assert_eq!(simulate_brw(&g, &cfg).unwrap(), simulate_brw(&g, &cfg).unwrap());
    }

    #[test]
    fn full_chain_agrees_with_simulation_on_lollipop() {
        let g = lollipop();
        for beta in [0.0, 1.0, 2.0] {
            let c = build_full_chain(&g, beta).unwrap();
            let s = absorption_stats(&c).unwrap();
            let agg = aggregate(&s, &vec![1.0 / 3.0; 3]).unwrap();
            let run = simulate_brw(
                &g,
                &WalkConfig {
                    beta,
                    seed: 17,
                    trials: 10_000,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(close(run.summary.mean, agg.mean, 4.0 * run.summary.stderr));
        }
    }

    fn sampling(g: &Graph, mode: SamplingMode, trials: usize) -> SamplingRun {
        simulate_sampling(
            g,
            &SamplingConfig {
                mode,
                seed: 4,
                trials,
                pool: NeighborPool::RemoveObserved,
            },
        )
        .unwrap()
    }

    #[test]
    fn sampling_trivial_cases() {
        for mode in [SamplingMode::NoReplacement, SamplingMode::WithNeighbors] {
            assert!(sampling(&cycle(6), mode, 100).times.iter().all(|&t| t == 1));
        }
        assert!(sampling(&star(5), SamplingMode::WithNeighbors, 100)
            .times
            .iter()
            .all(|&t| t == 1));
    }

    #[test]
    fn no_replacement_order_statistic() {
        // path on 10 nodes plus one extra leaf on node 4: single degree-3 node
        let mut edges: Vec<(usize, usize)> = (0..8).map(|i| (i, i + 1)).collect();
        edges.push((4, 9));
        let g = Graph::from_edges(10, edges).unwrap();
        let dp = DegreeProfile::new(&g).unwrap();
        assert_eq!(dp.max_degree_nodes().len(), 1);
        let run = sampling(&g, SamplingMode::NoReplacement, 50_000);
        assert!(close(run.summary.mean, 5.5, 3.0 * run.summary.stderr));
    }

    #[test]
    fn neighbor_pool_variants_differ_only_in_removal() {
        let mut edges: Vec<(usize, usize)> = (0..29).map(|i| (i, i + 1)).collect();
        edges.push((15, 30));
        let g = Graph::from_edges(31, edges).unwrap();
        let mut cfg = SamplingConfig {
            mode: SamplingMode::WithNeighbors,
            seed: 8,
            trials: 20_000,
            pool: NeighborPool::RemoveObserved,
        };
        let removed = simulate_sampling(&g, &cfg).unwrap();
        cfg.pool = NeighborPool::RemoveDrawnOnly;
        let kept = simulate_sampling(&g, &cfg).unwrap();
        // removing revealed non-hits can only shorten the search
        assert!(removed.summary.mean < kept.summary.mean);
    }
}
