//! Degree-preserving rewiring toward a target assortativity, and the
//! reconnection step that joins stray components to the giant one.
//!
//! A proposal picks two edges `{a,b}`, `{c,d}` with four distinct endpoints
//! and considers the swaps `{a,c}+{b,d}` and `{a,d}+{b,c}`. A swap is
//! accepted only if it keeps the graph simple and moves the assortativity
//! strictly closer to the target. Every node keeps its degree.

use std::collections::HashSet;

use rand::Rng as _;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{assortativity, DegreeCorrelation, Graph, GraphError, NodeId};
use crate::seed::stream_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewireError {
    #[error("rewiring needs at least 2 edges, graph has {0}")]
    TooFewEdges(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Which reconnections a proposal tries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapChoice {
    /// Try both, keep the one closer to the target.
    #[default]
    BestOfBoth,
    /// Try one reconnection chosen uniformly at random.
    SingleRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewireConfig {
    pub target: f64,
    pub tolerance: f64,
    pub max_proposals: u64,
    pub seed: u64,
    pub choice: SwapChoice,
}

impl Default for RewireConfig {
    fn default() -> Self {
        Self {
            target: 0.0,
            tolerance: 0.01,
            max_proposals: 5_000_000,
            seed: 0,
            choice: SwapChoice::BestOfBoth,
        }
    }
}

impl RewireConfig {
    pub fn validate(&self) -> Result<(), RewireError> {
        if !(self.target.abs() <= 1.0) {
            return Err(RewireError::InvalidConfig(format!("target {}", self.target)));
        }
        if !(self.tolerance > 0.0) {
            return Err(RewireError::InvalidConfig(format!("tolerance {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewireOutcome {
    pub graph: Graph,
    pub initial: f64,
    pub achieved: f64,
    pub proposals: u64,
    pub accepted: u64,
    pub converged: bool,
    /// Assortativity after each accepted swap.
    pub history: Vec<f64>,
}

/// Mutable edge state with O(1) assortativity updates.
#[derive(Debug, Clone)]
pub struct SwapState {
    degrees: Vec<usize>,
    edges: Vec<(NodeId, NodeId)>,
    present: HashSet<(NodeId, NodeId)>,
    correlation: DegreeCorrelation,
}

fn key(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    (u.min(v), u.max(v))
}

/// A concrete double-edge swap: edges at `slots` are replaced by `added`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Swap {
    pub slots: [usize; 2],
    pub added: [(NodeId, NodeId); 2],
}

impl SwapState {
    pub fn new(g: &Graph) -> Self {
        Self {
            degrees: (0..g.node_count()).map(|v| g.degree(v)).collect(),
            edges: g.edges().to_vec(),
            present: g.edges().iter().copied().collect(),
            correlation: DegreeCorrelation::from_graph(g),
        }
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn assortativity(&self) -> Option<f64> {
        self.correlation.coefficient()
    }

    /// Whether `swap` keeps the graph simple.
    pub fn is_valid(&self, swap: &Swap) -> bool {
        let [(a, b), (c, d)] = swap.added;
        a != b && c != d && key(a, b) != key(c, d) && !self.present.contains(&key(a, b))
            && !self.present.contains(&key(c, d))
    }

    fn degree_pairs(&self, edges: [(NodeId, NodeId); 2]) -> [(usize, usize); 2] {
        edges.map(|(u, v)| (self.degrees[u], self.degrees[v]))
    }

    /// Assortativity after `swap`, without applying it.
    pub fn assortativity_after(&self, swap: &Swap) -> Option<f64> {
        incremental_assortativity(
            self.correlation,
            &self.degree_pairs(swap.slots.map(|s| self.edges[s])),
            &self.degree_pairs(swap.added),
        )
    }

    pub fn apply(&mut self, swap: &Swap) {
        let removed = swap.slots.map(|s| self.edges[s]);
        self.correlation.apply_swap(&self.degree_pairs(removed), &self.degree_pairs(swap.added));
        for (slot, (old, new)) in swap.slots.iter().zip(removed.iter().zip(swap.added)) {
            self.present.remove(&key(old.0, old.1));
            self.present.insert(key(new.0, new.1));
            self.edges[*slot] = key(new.0, new.1);
        }
    }

    pub fn to_graph(&self, labels: Vec<u64>) -> Graph {
        Graph::with_labels(labels, self.edges.iter().copied()).expect("swaps keep the graph simple")
    }
}

/// Assortativity after removing and adding edges, given their endpoint degrees.
pub fn incremental_assortativity(
    mut state: DegreeCorrelation,
    removed: &[(usize, usize)],
    added: &[(usize, usize)],
) -> Option<f64> {
    state.apply_swap(removed, added);
    state.coefficient()
}

pub fn rewire_to_target(g: &Graph, cfg: &RewireConfig) -> Result<RewireOutcome, RewireError> {
    cfg.validate()?;
    let m = g.edge_count();
    if m < 2 {
        return Err(RewireError::TooFewEdges(m));
    }
    let initial = assortativity(g)?;
    let mut state = SwapState::new(g);
    let mut current = initial;
    let mut rng = stream_rng(cfg.seed, 0);
    let mut proposals = 0;
    let mut accepted = 0;
    let mut history = Vec::new();
    while (current - cfg.target).abs() > cfg.tolerance && proposals < cfg.max_proposals {
        proposals += 1;
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m - 1);
        let j = if j >= i { j + 1 } else { j };
        let ((a, b), (c, d)) = (state.edges[i], state.edges[j]);
        if a == c || a == d || b == c || b == d {
            continue;
        }
        let candidates = [
            Swap {
                slots: [i, j],
                added: [key(a, c), key(b, d)],
            },
            Swap {
                slots: [i, j],
                added: [key(a, d), key(b, c)],
            },
        ];
        let tried: &[Swap] = match cfg.choice {
            SwapChoice::BestOfBoth => &candidates,
            SwapChoice::SingleRandom => {
                let pick = rng.random_range(0..2);
                &candidates[pick..pick + 1]
            }
        };
        let mut best: Option<(Swap, f64)> = None;
        for swap in tried {
            if !state.is_valid(swap) {
                continue;
            }
            let Some(alpha) = state.assortativity_after(swap) else {
                continue;
            };
            let dist = (alpha - cfg.target).abs();
            if dist < (current - cfg.target).abs()
                && best.is_none_or(|(_, a)| dist < (a - cfg.target).abs())
            {
                best = Some((*swap, alpha));
            }
        }
        if let Some((swap, alpha)) = best {
            state.apply(&swap);
            current = alpha;
            accepted += 1;
            history.push(alpha);
        }
    }
    Ok(RewireOutcome {
        graph: state.to_graph(g.labels().to_vec()),
        initial,
        achieved: current,
        proposals,
        accepted,
        converged: (current - cfg.target).abs() <= cfg.tolerance,
        history,
    })
}

/// Joins every non-giant component to the giant component with one edge
/// between uniformly chosen endpoints. Components are processed in order of
/// their smallest node.
pub fn reconnect_components(g: &Graph, seed: u64) -> Graph {
    let comps = g.components();
    if comps.len() <= 1 {
        return g.clone();
    }
    let giant = (0..comps.len())
        .fold(0, |best, i| if comps[i].len() > comps[best].len() { i } else { best });
    let mut rng = stream_rng(seed, 0);
    let mut edges = g.edges().to_vec();
    for (i, comp) in comps.iter().enumerate() {
        if i == giant {
            continue;
        }
        let u = comp[rng.random_range(0..comp.len())];
        let v = comps[giant][rng.random_range(0..comps[giant].len())];
        edges.push((u, v));
    }
    Graph::with_labels(g.labels().to_vec(), edges).expect("bridges join distinct components")
}
