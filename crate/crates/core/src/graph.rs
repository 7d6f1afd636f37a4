//! Undirected simple graphs and the degree statistics derived from them.
//!
//! Nodes are dense indices `0..n`. The external ids a graph was loaded with
//! are kept as labels so that files written back out use the original ids.
//! Everything in here is immutable once built, so it can be shared freely
//! between simulation workers.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: u64 },
    #[error("line {line}: cannot parse {token:?} as a node id")]
    BadToken { line: usize, token: String },
    #[error("line {line}: expected two node ids, found {found}")]
    WrongArity { line: usize, found: usize },
    #[error("self-loop on node {0}")]
    SelfLoopEdge(NodeId),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(NodeId, NodeId, usize),
    #[error("graph has no nodes")]
    Empty,
    #[error("degree class {0} has no incident edges")]
    IsolatedDegreeClass(usize),
    #[error("assortativity undefined: endpoint degrees have zero variance")]
    AssortativityUndefined,
    #[error("conditional degree matrix: {0}")]
    BadRows(String),
}

/// Undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    edges: Vec<(NodeId, NodeId)>,
    labels: Vec<u64>,
}

impl Graph {
    /// Builds a graph on `n` nodes labelled `0..n`. Duplicate edges (in either
    /// orientation) collapse; self-loops are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        Self::with_labels((0..n as u64).collect(), edges)
    }

    pub fn with_labels<I>(labels: Vec<u64>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let n = labels.len();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoopEdge(u));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            adjacency,
            edges,
            labels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// External id of node `v`.
    pub fn label(&self, v: NodeId) -> u64 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Connected components, each sorted, ordered by their smallest node.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            stack.push(root);
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() > 0 && self.components().len() == 1
    }

    /// Induced subgraph on `nodes` (which must be sorted and distinct).
    /// Labels carry over from this graph.
    pub fn induced(&self, nodes: &[NodeId]) -> Graph {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            index.insert(v, i);
        }
        let edges = self.edges.iter().filter_map(|&(u, v)| {
            Some((*index.get(&u)?, *index.get(&v)?))
        });
        let labels = nodes.iter().map(|&v| self.labels[v]).collect();
        Graph::with_labels(labels, edges).expect("subgraph of a simple graph is simple")
    }

    /// Serialises to the edge-list text format using the external labels.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 12);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{} {}", self.labels[u], self.labels[v]);
        }
        out
    }

    /// Short stable fingerprint of the labelled edge set.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.node_count() as u64).to_le_bytes());
        hasher.update(self.to_edge_list().as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }
}

/// Parses the edge-list format: one edge per line, two whitespace-separated
/// integer ids, `#` starts a comment. Ids are compacted to `0..n` in
/// ascending order of the external id.
pub fn load_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(GraphError::WrongArity {
                line: line_no,
                found: tokens.len(),
            });
        }
        let parse = |t: &str| {
            t.parse::<u64>().map_err(|_| GraphError::BadToken {
                line: line_no,
                token: t.to_string(),
            })
        };
        let (a, b) = (parse(tokens[0])?, parse(tokens[1])?);
        if a == b {
            return Err(GraphError::SelfLoop {
                line: line_no,
                node: a,
            });
        }
        raw.push((a, b));
    }
    let labels: Vec<u64> = raw
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<u64, NodeId> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    Graph::with_labels(labels, raw.into_iter().map(|(a, b)| (index[&a], index[&b])))
}

/// Per-node degrees and everything grouped by degree.
///
/// Matrices over degrees are indexed by position in the sorted degree set;
/// [`DegreeProfile::index_of`] maps a degree value to that position.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile {
    node_degrees: Vec<usize>,
    degrees: Vec<usize>,
    position: HashMap<usize, usize>,
    classes: Vec<Vec<NodeId>>,
    /// `neighborhoods[v][i]` = number of neighbours of `v` with degree `degrees[i]`.
    neighborhoods: Vec<Vec<u32>>,
}

impl DegreeProfile {
    pub fn new(g: &Graph) -> Result<Self, GraphError> {
        if g.node_count() == 0 {
            return Err(GraphError::Empty);
        }
        let node_degrees: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
        let degrees: Vec<usize> = node_degrees
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let position: HashMap<usize, usize> =
            degrees.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut classes = vec![Vec::new(); degrees.len()];
        for (v, k) in node_degrees.iter().enumerate() {
            classes[position[k]].push(v);
        }
        let neighborhoods = (0..g.node_count())
            .map(|v| {
                let mut counts = vec![0u32; degrees.len()];
                for &u in g.neighbors(v) {
                    counts[position[&node_degrees[u]]] += 1;
                }
                counts
            })
            .collect();
        Ok(Self {
            node_degrees,
            degrees,
            position,
            classes,
            neighborhoods,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_degrees.len()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.node_degrees[v]
    }

    pub fn node_degrees(&self) -> &[usize] {
        &self.node_degrees
    }

    /// Sorted distinct degrees.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Number of distinct degrees.
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn index_of(&self, degree: usize) -> Option<usize> {
        self.position.get(&degree).copied()
    }

    pub fn max_degree(&self) -> usize {
        *self.degrees.last().expect("profile of a nonempty graph")
    }

    pub fn max_index(&self) -> usize {
        self.degrees.len() - 1
    }

    /// Nodes of the degree at position `i`.
    pub fn class(&self, i: usize) -> &[NodeId] {
        &self.classes[i]
    }

    pub fn max_degree_nodes(&self) -> &[NodeId] {
        &self.classes[self.max_index()]
    }

    pub fn is_max_degree(&self, v: NodeId) -> bool {
        self.node_degrees[v] == self.max_degree()
    }

    /// Nodes that are not of maximum degree, ascending.
    pub fn transient_nodes(&self) -> Vec<NodeId> {
        (0..self.node_count())
            .filter(|&v| !self.is_max_degree(v))
            .collect()
    }

    /// `|V_k| / n` for each degree in order.
    pub fn distribution(&self) -> Vec<f64> {
        let n = self.node_count() as f64;
        self.classes.iter().map(|c| c.len() as f64 / n).collect()
    }

    /// Degree neighbourhood of `v`, indexed like [`DegreeProfile::degrees`].
    pub fn neighborhood(&self, v: NodeId) -> &[u32] {
        &self.neighborhoods[v]
    }
}

/// Writes a square matrix labelled by degrees as CSV.
pub(crate) fn labeled_matrix_csv<T: std::fmt::Display>(
    degrees: &[usize],
    entry: impl Fn(usize, usize) -> T,
) -> String {
    let mut out = String::from("degree");
    for k in degrees {
        let _ = write!(out, ",{k}");
    }
    out.push('\n');
    for (i, k) in degrees.iter().enumerate() {
        let _ = write!(out, "{k}");
        for j in 0..degrees.len() {
            let _ = write!(out, ",{}", entry(i, j));
        }
        out.push('\n');
    }
    out
}

/// Edge counts grouped by endpoint degrees, diagonal doubled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDegreeMatrix {
    degrees: Vec<usize>,
    counts: Vec<u64>,
}

impl JointDegreeMatrix {
    pub fn new(g: &Graph, profile: &DegreeProfile) -> Self {
        let size = profile.len();
        let mut counts = vec![0u64; size * size];
        for &(u, v) in g.edges() {
            let i = profile.index_of(g.degree(u)).expect("degree in profile");
            let j = profile.index_of(g.degree(v)).expect("degree in profile");
            counts[i * size + j] += 1;
            counts[j * size + i] += 1;
        }
        Self {
            degrees: profile.degrees().to_vec(),
            counts,
        }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn size(&self) -> usize {
        self.degrees.len()
    }

    /// Entry at positions `(i, j)` in the sorted degree set.
    pub fn at(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.size() + j]
    }

    /// Entry by degree values; zero for degrees absent from the graph.
    pub fn get(&self, k: usize, l: usize) -> u64 {
        match (self.position(k), self.position(l)) {
            (Some(i), Some(j)) => self.at(i, j),
            _ => 0,
        }
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.size()).map(|j| self.at(i, j)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn position(&self, k: usize) -> Option<usize> {
        self.degrees.binary_search(&k).ok()
    }

    pub fn to_csv(&self) -> String {
        labeled_matrix_csv(&self.degrees, |i, j| self.at(i, j))
    }
}

/// Row-normalised joint degree matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDegreeMatrix {
    degrees: Vec<usize>,
    probs: Vec<f64>,
    supports: Vec<Vec<usize>>,
}

impl ConditionalDegreeMatrix {
    pub fn new(joint: &JointDegreeMatrix) -> Result<Self, GraphError> {
        let size = joint.size();
        let mut probs = vec![0.0; size * size];
        let mut supports = Vec::with_capacity(size);
        for i in 0..size {
            let total = joint.row_sum(i);
            if total == 0 {
                return Err(GraphError::IsolatedDegreeClass(joint.degrees()[i]));
            }
            let mut support = Vec::new();
            for j in 0..size {
                let c = joint.at(i, j);
                if c > 0 {
                    probs[i * size + j] = c as f64 / total as f64;
                    support.push(j);
                }
            }
            supports.push(support);
        }
        Ok(Self {
            degrees: joint.degrees().to_vec(),
            probs,
            supports,
        })
    }

    /// Builds the matrix from explicit rows over ascending `degrees`; each
    /// row must be nonnegative and sum to 1 within `1e-12`.
    pub fn from_rows(degrees: Vec<usize>, rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let size = degrees.len();
        if rows.len() != size || degrees.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphError::BadRows("degrees must be ascending, one row each".into()));
        }
        let mut probs = Vec::with_capacity(size * size);
        let mut supports = Vec::with_capacity(size);
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != size || row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(GraphError::BadRows(format!("row {i} is not a distribution")));
            }
            supports.push((0..size).filter(|&j| row[j] > 0.0).collect());
            probs.extend_from_slice(row);
        }
        Ok(Self {
            degrees,
            probs,
            supports,
        })
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn size(&self) -> usize {
        self.degrees.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let s = self.size();
        &self.probs[i * s..(i + 1) * s]
    }

    /// Positions `j` with a positive entry in row `i`.
    pub fn support(&self, i: usize) -> &[usize] {
        &self.supports[i]
    }

    pub fn to_csv(&self) -> String {
        labeled_matrix_csv(&self.degrees, |i, j| self.at(i, j))
    }
}

/// Running sums over the `2m` oriented edge stubs `(d(u), d(v))`.
///
/// All sums are exact integers, so the coefficient computed after any
/// sequence of incremental updates is identical to a full recomputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DegreeCorrelation {
    stubs: i128,
    sum: i128,
    sum_sq: i128,
    sum_prod: i128,
}

impl DegreeCorrelation {
    pub fn from_graph(g: &Graph) -> Self {
        let mut acc = Self::default();
        for &(u, v) in g.edges() {
            acc.add_edge(g.degree(u), g.degree(v));
        }
        acc
    }

    /// Adds the undirected edge with endpoint degrees `(x, y)` (both orientations).
    pub fn add_edge(&mut self, x: usize, y: usize) {
        let (x, y) = (x as i128, y as i128);
        self.stubs += 2;
        self.sum += x + y;
        self.sum_sq += x * x + y * y;
        self.sum_prod += 2 * x * y;
    }

    pub fn remove_edge(&mut self, x: usize, y: usize) {
        let (x, y) = (x as i128, y as i128);
        self.stubs -= 2;
        self.sum -= x + y;
        self.sum_sq -= x * x + y * y;
        self.sum_prod -= 2 * x * y;
    }

    /// Applies a swap given as endpoint-degree pairs of removed and added edges.
    pub fn apply_swap(&mut self, removed: &[(usize, usize)], added: &[(usize, usize)]) {
        for &(x, y) in removed {
            self.remove_edge(x, y);
        }
        for &(x, y) in added {
            self.add_edge(x, y);
        }
    }

    /// Pearson correlation of endpoint degrees, `None` when the variance is zero.
    pub fn coefficient(&self) -> Option<f64> {
        let denom = self.stubs * self.sum_sq - self.sum * self.sum;
        if self.stubs == 0 || denom == 0 {
            return None;
        }
        let numer = self.stubs * self.sum_prod - self.sum * self.sum;
        Some(numer as f64 / denom as f64)
    }
}

/// Degree assortativity: Pearson correlation of the degrees at either end of
/// a uniformly random edge, counting both orientations.
pub fn assortativity(g: &Graph) -> Result<f64, GraphError> {
    DegreeCorrelation::from_graph(g)
        .coefficient()
        .ok_or(GraphError::AssortativityUndefined)
}
