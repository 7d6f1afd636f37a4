//! The reduced walk over degree states.
//!
//! Instead of tracking which node the walk is on, track only its degree.
//! Two `δ × δ` transition matrices are available:
//!
//! * the *averaged* matrix, which averages the exact degree-transition
//!   distribution of every node of degree `k` (needs the full graph), and
//! * the *approximate* matrix, which replaces each node's neighbourhood by a
//!   multinomial draw `N ~ mult(k, J̃(k, ·))` and takes the expected
//!   degree-transition distribution. It only needs `J̃`.
//!
//! Making the maximum degree absorbing turns the approximate matrix into a
//! `δ`-state absorbing chain whose absorption time can be solved exactly.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{
    absorption_stats, aggregate_with, partition_chain_with_tolerance, AbsorbingChain, ChainError,
    MixtureVariance,
};
use crate::graph::{ConditionalDegreeMatrix, DegreeProfile, Graph, GraphError, JointDegreeMatrix};
use crate::linalg::DenseMatrix;
use crate::walker::{StartMode, WalkError};

pub const ROW_SUM_TOL: f64 = 1e-10;
pub const DEFAULT_TERM_BUDGET: u128 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("degree neighbourhood is empty")]
    EmptyNeighborhood,
    #[error("model infeasible: {terms} multinomial terms exceed the budget of {budget} (d_max = {max_degree})")]
    Infeasible {
        terms: u128,
        budget: u128,
        max_degree: usize,
    },
    #[error("maximum degree is unreachable from degree {0}")]
    Unreachable(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Averaged,
    Approximate,
}

/// Row-stochastic matrix over the sorted degree set.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeTransitionMatrix {
    pub kind: MatrixKind,
    pub beta: f64,
    degrees: Vec<usize>,
    entries: DenseMatrix,
}

impl DegreeTransitionMatrix {
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn size(&self) -> usize {
        self.degrees.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Entry by degree values.
    pub fn get(&self, k: usize, l: usize) -> Option<f64> {
        let i = self.degrees.binary_search(&k).ok()?;
        let j = self.degrees.binary_search(&l).ok()?;
        Some(self.at(i, j))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.entries.row(i)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.entries
    }

    pub fn to_csv(&self) -> String {
        crate::graph::labeled_matrix_csv(&self.degrees, |i, j| self.at(i, j))
    }
}

/// Degree-transition distribution from a node whose neighbourhood has
/// `counts[i]` neighbours of degree `degrees[i]`: mass `∝ n_l l^beta`.
pub fn biased_degree_distribution(
    counts: &[u32],
    degrees: &[usize],
    beta: f64,
) -> Result<Vec<f64>, ModelError> {
    assert_eq!(counts.len(), degrees.len());
    if counts.iter().all(|&c| c == 0) {
        return Err(ModelError::EmptyNeighborhood);
    }
    let mut out = vec![0.0; counts.len()];
    fill_biased(counts, degrees, beta, &mut out);
    Ok(out)
}

/// Adds `scale * p̆(counts)` into `out`, using log-shifted weights.
fn fill_biased(counts: &[u32], degrees: &[usize], beta: f64, out: &mut [f64]) {
    let present = counts.iter().zip(degrees).filter(|(&c, _)| c > 0);
    let top = present
        .clone()
        .map(|(_, &d)| (d as f64).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (i, (&c, &d)) in counts.iter().zip(degrees).enumerate() {
        out[i] = if c > 0 {
            c as f64 * (beta * ((d as f64).ln() - top)).exp()
        } else {
            0.0
        };
        total += out[i];
    }
    for x in out.iter_mut() {
        *x /= total;
    }
}

pub fn averaged_matrix(g: &Graph, beta: f64) -> Result<DegreeTransitionMatrix, ModelError> {
    let profile = DegreeProfile::new(g)?;
    averaged_matrix_for(g, &profile, beta)
}

pub fn averaged_matrix_for(
    g: &Graph,
    profile: &DegreeProfile,
    beta: f64,
) -> Result<DegreeTransitionMatrix, ModelError> {
    let size = profile.len();
    let mut entries = DenseMatrix::zeros(size, size);
    let mut scratch = vec![0.0; size];
    for i in 0..size {
        let class = profile.class(i);
        for &v in class {
            if g.degree(v) == 0 {
                return Err(GraphError::IsolatedDegreeClass(0).into());
            }
            fill_biased(profile.neighborhood(v), profile.degrees(), beta, &mut scratch);
            for j in 0..size {
                entries[(i, j)] += scratch[j];
            }
        }
        for j in 0..size {
            entries[(i, j)] /= class.len() as f64;
        }
    }
    Ok(DegreeTransitionMatrix {
        kind: MatrixKind::Averaged,
        beta,
        degrees: profile.degrees().to_vec(),
        entries,
    })
}

/// `C(k + parts - 1, parts - 1)`, saturating.
pub fn composition_count(k: usize, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(k == 0);
    }
    let (n, r) = ((k + parts - 1) as u128, (parts - 1) as u128);
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All vectors of `parts` nonnegative integers summing to `total`, in
/// lexicographically decreasing order: `(k, 0, ..)`, `(k-1, 1, ..)`, ...
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u32>,
    done: bool,
}

impl Compositions {
    pub fn new(total: usize, parts: usize) -> Self {
        let mut current = vec![0; parts];
        let done = match current.first_mut() {
            Some(first) => {
                *first = total as u32;
                false
            }
            None => total != 0,
        };
        Self { current, done }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let p = self.current.len();
        // rightmost nonzero entry among the first p - 1 moves one unit right
        // and absorbs everything after it
        match (0..p.saturating_sub(1)).rev().find(|&i| self.current[i] > 0) {
            Some(i) => {
                let tail: u32 = self.current[i + 1..].iter().sum();
                self.current[i] -= 1;
                for x in &mut self.current[i + 1..] {
                    *x = 0;
                }
                self.current[i + 1] = tail + 1;
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// Every composition of `k` over the positions in `support` (length `δ`
/// vectors, zero outside the support). Fails when the count exceeds `budget`.
pub fn multinomial_support(
    k: usize,
    support: &[usize],
    size: usize,
    budget: u128,
) -> Result<impl Iterator<Item = Vec<u32>> + '_, ModelError> {
    let count = composition_count(k, support.len());
    if count > budget {
        return Err(ModelError::Infeasible {
            terms: count,
            budget,
            max_degree: k,
        });
    }
    Ok(Compositions::new(k, support.len()).map(move |c| {
        let mut full = vec![0u32; size];
        for (&pos, &n) in support.iter().zip(&c) {
            full[pos] = n;
        }
        full
    }))
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Total multinomial terms the approximate matrix would enumerate.
pub fn term_count(jt: &ConditionalDegreeMatrix, rows: impl Iterator<Item = usize>) -> u128 {
    rows.map(|i| composition_count(jt.degrees()[i], jt.support(i).len()))
        .fold(0u128, u128::saturating_add)
}

/// One row of the approximate matrix: `E[p̆(N)]` with `N ~ mult(k, J̃(k, ·))`,
/// enumerating only compositions supported on the positive entries of the row.
fn approximate_row(jt: &ConditionalDegreeMatrix, i: usize, beta: f64, ln_fact: &[f64]) -> Vec<f64> {
    let size = jt.size();
    let k = jt.degrees()[i];
    let support = jt.support(i);
    let degrees: Vec<usize> = support.iter().map(|&j| jt.degrees()[j]).collect();
    let ln_p: Vec<f64> = support.iter().map(|&j| jt.at(i, j).ln()).collect();
    let ln_deg: Vec<f64> = degrees.iter().map(|&d| (d as f64).ln()).collect();
    let mut acc = vec![CompensatedSum::default(); support.len()];
    let mut weights = vec![0.0; support.len()];
    for comp in Compositions::new(k, support.len()) {
        let mut ln_term = ln_fact[k];
        let mut top = f64::NEG_INFINITY;
        for (s, &n) in comp.iter().enumerate() {
            if n > 0 {
                ln_term += n as f64 * ln_p[s] - ln_fact[n as usize];
                top = top.max(ln_deg[s]);
            }
        }
        let prob = ln_term.exp();
        let mut total = 0.0;
        for (s, &n) in comp.iter().enumerate() {
            weights[s] = if n > 0 {
                n as f64 * (beta * (ln_deg[s] - top)).exp()
            } else {
                0.0
            };
            total += weights[s];
        }
        for s in 0..support.len() {
            if weights[s] > 0.0 {
                acc[s].add(prob * weights[s] / total);
            }
        }
    }
    let mut row = vec![0.0; size];
    for (s, &j) in support.iter().enumerate() {
        row[j] = acc[s].value();
    }
    row
}

fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = vec![0.0; max + 1];
    for i in 1..=max {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

/// The approximate matrix over every row of `J̃`.
pub fn approximate_matrix(
    jt: &ConditionalDegreeMatrix,
    beta: f64,
    budget: u128,
) -> Result<DegreeTransitionMatrix, ModelError> {
    approximate_rows(jt, beta, budget, |_| true)
}

/// The approximate matrix computing only the rows selected by `include`;
/// other rows are left as self-loops.
pub fn approximate_rows(
    jt: &ConditionalDegreeMatrix,
    beta: f64,
    budget: u128,
    include: impl Fn(usize) -> bool + Sync,
) -> Result<DegreeTransitionMatrix, ModelError> {
    let size = jt.size();
    let selected: Vec<usize> = (0..size).filter(|&i| include(i)).collect();
    let terms = term_count(jt, selected.iter().copied());
    if terms > budget {
        return Err(ModelError::Infeasible {
            terms,
            budget,
            max_degree: *jt.degrees().last().unwrap_or(&0),
        });
    }
    let ln_fact = ln_factorials(*jt.degrees().last().unwrap_or(&0));
    let rows: Vec<(usize, Vec<f64>)> = selected
        .par_iter()
        .map(|&i| (i, approximate_row(jt, i, beta, &ln_fact)))
        .collect();
    let mut entries = DenseMatrix::identity(size);
    for (i, row) in rows {
        for (j, p) in row.into_iter().enumerate() {
            entries[(i, j)] = p;
        }
    }
    Ok(DegreeTransitionMatrix {
        kind: MatrixKind::Approximate,
        beta,
        degrees: jt.degrees().to_vec(),
        entries,
    })
}

/// Makes the maximum degree absorbing and checks it is reachable.
pub fn build_reduced_chain(matrix: &DegreeTransitionMatrix) -> Result<AbsorbingChain, ModelError> {
    let size = matrix.size();
    let top = size - 1;
    let mut p = matrix.entries.clone();
    for j in 0..size {
        p[(top, j)] = if j == top { 1.0 } else { 0.0 };
    }
    let labels = matrix.degrees.iter().map(usize::to_string).collect();
    let chain = partition_chain_with_tolerance(labels, &p, |i| i == top, ROW_SUM_TOL)?;
    match chain.check_absorbing() {
        Ok(()) => Ok(chain),
        Err(ChainError::NonAbsorbing(label)) => {
            Err(ModelError::Unreachable(label.parse().expect("degree label")))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSummary {
    pub beta: f64,
    #[serde(rename = "E_T")]
    pub mean: f64,
    #[serde(rename = "Std_T")]
    pub std: f64,
    pub feasible: bool,
    pub term_count: u128,
    /// Every node already has maximum degree; `T = 0`.
    pub already_absorbed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub start: StartMode,
    pub budget: u128,
    pub mixture: MixtureVariance,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            start: StartMode::Transient,
            budget: DEFAULT_TERM_BUDGET,
            mixture: MixtureVariance::TotalVariance,
        }
    }
}

/// Initial mass per degree position under `start`.
fn degree_start_mass(profile: &DegreeProfile, start: &StartMode) -> Result<Vec<f64>, ModelError> {
    let node_mass = start.node_distribution(profile)?;
    let mut mass = vec![0.0; profile.len()];
    for (v, p) in node_mass.into_iter().enumerate() {
        mass[profile.index_of(profile.degree(v)).expect("degree in profile")] += p;
    }
    Ok(mass)
}

/// Mean and standard deviation of the reduced-chain absorption time.
pub fn model_absorption(g: &Graph, beta: f64, options: &ModelOptions) -> Result<ModelSummary, ModelError> {
    let profile = DegreeProfile::new(g)?;
    if profile.len() == 1 {
        return Ok(ModelSummary {
            beta,
            mean: 0.0,
            std: 0.0,
            feasible: true,
            term_count: 0,
            already_absorbed: true,
        });
    }
    let jt = ConditionalDegreeMatrix::new(&JointDegreeMatrix::new(g, &profile))?;
    let top = profile.max_index();
    let terms = term_count(&jt, 0..top);
    let matrix = approximate_rows(&jt, beta, options.budget, |i| i != top)?;
    let chain = build_reduced_chain(&matrix)?;
    let stats = absorption_stats(&chain)?;
    let mass = degree_start_mass(&profile, &options.start)?;
    let initial: Vec<f64> = chain.transient_states().iter().map(|&i| mass[i]).collect();
    let agg = aggregate_with(&stats, &initial, mass[top], options.mixture)?;
    Ok(ModelSummary {
        beta,
        mean: agg.mean,
        std: agg.std,
        feasible: true,
        term_count: terms,
        already_absorbed: false,
    })
}
