//! Absorbing discrete-time Markov chains.
//!
//! A chain is split into absorbing states (self-probability one) and
//! transient states. With `Q` the transient-to-transient block and
//! `N = (I - Q)^-1` the fundamental matrix, the absorption time from each
//! transient state has mean `mu = N 1` and variance `(2N - I) mu - mu∘mu`.
//! `N` is never formed explicitly; both quantities come from two solves
//! against one LU factorisation of `I - Q`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng as _;
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::seed::{stream_rng, Rng};

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;
const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("transition matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("row {row} sums to {sum}, expected 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("state {0} is declared absorbing but its self-probability is not 1")]
    NotAbsorbing(String),
    #[error("no absorbing state is reachable from transient state {0}")]
    NonAbsorbing(String),
    #[error("I - Q is numerically singular (pivot column {0})")]
    Singular(usize),
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("initial distribution: {0}")]
    BadDistribution(String),
    #[error("state {0} is not transient")]
    NotTransient(usize),
    #[error("walk exceeded {0} steps without absorbing")]
    StepCapExceeded(u64),
}

/// Chain partitioned into transient and absorbing states.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    labels: Vec<String>,
    transient: Vec<usize>,
    absorbing: Vec<usize>,
    q: DenseMatrix,
    r: DenseMatrix,
}

/// Splits `matrix` according to `is_absorbing`, checking that it is row
/// stochastic within [`ROW_SUM_TOL`] and that absorbing states hold.
pub fn partition_chain(
    labels: Vec<String>,
    matrix: &DenseMatrix,
    is_absorbing: impl Fn(usize) -> bool,
) -> Result<AbsorbingChain, ChainError> {
    partition_chain_with_tolerance(labels, matrix, is_absorbing, ROW_SUM_TOL)
}

pub fn partition_chain_with_tolerance(
    labels: Vec<String>,
    matrix: &DenseMatrix,
    is_absorbing: impl Fn(usize) -> bool,
    tolerance: f64,
) -> Result<AbsorbingChain, ChainError> {
    if !matrix.is_square() {
        return Err(ChainError::NotSquare {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    let n = matrix.rows();
    assert_eq!(labels.len(), n, "one label per state");
    for i in 0..n {
        let row = matrix.row(i);
        for (j, &value) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ChainError::EntryOutOfRange { row: i, col: j, value });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(ChainError::RowNotStochastic { row: i, sum });
        }
    }
    let (absorbing, transient): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_absorbing(i));
    if let Some(&bad) = absorbing.iter().find(|&&i| matrix[(i, i)] != 1.0) {
        return Err(ChainError::NotAbsorbing(labels[bad].clone()));
    }
    let mut q = DenseMatrix::zeros(transient.len(), transient.len());
    let mut r = DenseMatrix::zeros(transient.len(), absorbing.len());
    for (a, &i) in transient.iter().enumerate() {
        for (b, &j) in transient.iter().enumerate() {
            q[(a, b)] = matrix[(i, j)];
        }
        for (b, &j) in absorbing.iter().enumerate() {
            r[(a, b)] = matrix[(i, j)];
        }
    }
    Ok(AbsorbingChain {
        labels,
        transient,
        absorbing,
        q,
        r,
    })
}

impl AbsorbingChain {
    pub fn state_count(&self) -> usize {
        self.labels.len()
    }

    pub fn transient_count(&self) -> usize {
        self.transient.len()
    }

    pub fn absorbing_count(&self) -> usize {
        self.absorbing.len()
    }

    /// Original indices of the transient states, in block order.
    pub fn transient_states(&self) -> &[usize] {
        &self.transient
    }

    pub fn absorbing_states(&self) -> &[usize] {
        &self.absorbing
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transient_label(&self, x: usize) -> &str {
        &self.labels[self.transient[x]]
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// Block position of original state `i` if it is transient.
    pub fn transient_position(&self, i: usize) -> Option<usize> {
        self.transient.iter().position(|&t| t == i)
    }

    /// Confirms every transient state can reach an absorbing state through
    /// positive-probability transitions.
    pub fn check_absorbing(&self) -> Result<(), ChainError> {
        let n = self.transient_count();
        let mut reverse = vec![Vec::new(); n];
        let mut reached = vec![false; n];
        let mut queue = VecDeque::new();
        for x in 0..n {
            for y in 0..n {
                if self.q[(x, y)] > 0.0 {
                    reverse[y].push(x);
                }
            }
            if self.r.row(x).iter().any(|&p| p > 0.0) {
                reached[x] = true;
                queue.push_back(x);
            }
        }
        while let Some(y) = queue.pop_front() {
            for &x in &reverse[y] {
                if !reached[x] {
                    reached[x] = true;
                    queue.push_back(x);
                }
            }
        }
        match reached.iter().position(|&r| !r) {
            Some(x) => Err(ChainError::NonAbsorbing(self.transient_label(x).to_string())),
            None => Ok(()),
        }
    }

    /// Full transition matrix in original state order, as labelled CSV.
    pub fn to_csv(&self) -> String {
        let n = self.state_count();
        let mut full = DenseMatrix::zeros(n, n);
        for &a in &self.absorbing {
            full[(a, a)] = 1.0;
        }
        for (x, &i) in self.transient.iter().enumerate() {
            for (y, &j) in self.transient.iter().enumerate() {
                full[(i, j)] = self.q[(x, y)];
            }
            for (y, &j) in self.absorbing.iter().enumerate() {
                full[(i, j)] = self.r[(x, y)];
            }
        }
        let mut out = String::from("state");
        for l in &self.labels {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for j in 0..n {
                let _ = write!(out, ",{}", full[(i, j)]);
            }
            out.push('\n');
        }
        out
    }
}

/// How the per-state variance is assembled from the mean vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceForm {
    /// `(2N - I) mu - mu∘mu`.
    #[default]
    Elementwise,
    /// `(2N - I) mu - (muᵀ mu) 1`: subtracts the squared norm of the whole
    /// mean vector from every state. Kept for comparison only; it does not
    /// give the variance of the absorption time.
    InnerProduct,
}

/// Mean and variance of the absorption time from each transient state,
/// in transient block order.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl AbsorptionStats {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn to_csv(&self, chain: &AbsorbingChain) -> String {
        let mut out = String::from("state,mu,var\n");
        for x in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                chain.transient_label(x),
                self.mean[x],
                self.variance[x]
            );
        }
        out
    }
}

pub fn absorption_stats(chain: &AbsorbingChain) -> Result<AbsorptionStats, ChainError> {
    absorption_stats_with(chain, VarianceForm::Elementwise)
}

pub fn absorption_stats_with(
    chain: &AbsorbingChain,
    form: VarianceForm,
) -> Result<AbsorptionStats, ChainError> {
    chain.check_absorbing()?;
    let n = chain.transient_count();
    if n == 0 {
        return Ok(AbsorptionStats {
            mean: Vec::new(),
            variance: Vec::new(),
        });
    }
    let mut system = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            system[(i, j)] -= chain.q[(i, j)];
        }
    }
    let lu = system
        .lu(PIVOT_TOL)
        .map_err(|s| ChainError::Singular(s.column))?;
    let mean = lu.solve(&vec![1.0; n]);
    let n_mean = lu.solve(&mean);
    let norm_sq: f64 = mean.iter().map(|m| m * m).sum();
    let variance = mean
        .iter()
        .zip(&n_mean)
        .map(|(&m, &nm)| {
            let base = 2.0 * nm - m;
            match form {
                VarianceForm::Elementwise => (base - m * m).max(0.0),
                VarianceForm::InnerProduct => base - norm_sq,
            }
        })
        .collect();
    Ok(AbsorptionStats { mean, variance })
}

/// How per-state variances are combined under an initial distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixtureVariance {
    /// Law of total variance: within-state plus between-state spread of means.
    #[default]
    TotalVariance,
    /// Probability-weighted average of per-state variances only.
    WithinStateOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub variance: f64,
    pub std: f64,
}

pub fn aggregate(stats: &AbsorptionStats, initial: &[f64]) -> Result<Aggregate, ChainError> {
    aggregate_with(stats, initial, 0.0, MixtureVariance::TotalVariance)
}

/// Aggregates under an initial distribution whose mass is `initial` on the
/// transient states plus `absorbed` on states that are already absorbing
/// (contributing `T = 0`). The masses together must sum to one.
pub fn aggregate_with(
    stats: &AbsorptionStats,
    initial: &[f64],
    absorbed: f64,
    mixture: MixtureVariance,
) -> Result<Aggregate, ChainError> {
    if initial.len() != stats.len() {
        return Err(ChainError::DimensionMismatch {
            expected: stats.len(),
            found: initial.len(),
        });
    }
    if initial.iter().chain([&absorbed]).any(|&p| !(p >= 0.0)) {
        return Err(ChainError::BadDistribution("negative or NaN mass".into()));
    }
    let total: f64 = initial.iter().sum::<f64>() + absorbed;
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return Err(ChainError::BadDistribution(format!("masses sum to {total}")));
    }
    let mean: f64 = initial.iter().zip(&stats.mean).map(|(p, m)| p * m).sum();
    let within: f64 = initial.iter().zip(&stats.variance).map(|(p, v)| p * v).sum();
    let variance = match mixture {
        MixtureVariance::WithinStateOnly => within,
        MixtureVariance::TotalVariance => {
            let between: f64 = initial
                .iter()
                .zip(&stats.mean)
                .map(|(p, m)| p * (m - mean).powi(2))
                .sum::<f64>()
                + absorbed * mean * mean;
            within + between
        }
    };
    Ok(Aggregate {
        mean,
        variance,
        std: variance.max(0.0).sqrt(),
    })
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Transient(usize),
    Absorbed,
}

/// Inverse-CDF sampler over the rows of `[R | Q]`.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    rows: Vec<Vec<(f64, Target)>>,
}

impl ChainSampler {
    pub fn new(chain: &AbsorbingChain) -> Self {
        let rows = (0..chain.transient_count())
            .map(|x| {
                let mut acc = 0.0;
                let mut row = Vec::new();
                let entries = chain
                    .r
                    .row(x)
                    .iter()
                    .map(|&p| (p, Target::Absorbed))
                    .chain(
                        chain
                            .q
                            .row(x)
                            .iter()
                            .enumerate()
                            .map(|(y, &p)| (p, Target::Transient(y))),
                    );
                for (p, target) in entries {
                    if p > 0.0 {
                        acc += p;
                        row.push((acc, target));
                    }
                }
                row
            })
            .collect();
        Self { rows }
    }

    /// Steps until absorption starting from transient block position `start`.
    pub fn absorption_time(&self, start: usize, rng: &mut Rng, cap: u64) -> Result<u64, ChainError> {
        if start >= self.rows.len() {
            return Err(ChainError::NotTransient(start));
        }
        let mut state = start;
        for step in 1..=cap {
            let row = &self.rows[state];
            let u: f64 = rng.random::<f64>() * row.last().map_or(1.0, |e| e.0);
            let k = row.partition_point(|e| e.0 <= u).min(row.len() - 1);
            match row[k].1 {
                Target::Absorbed => return Ok(step),
                Target::Transient(y) => state = y,
            }
        }
        Err(ChainError::StepCapExceeded(cap))
    }
}

/// One absorption-time draw from transient position `start` using stream 0
/// under `seed`.
pub fn simulate_chain(chain: &AbsorbingChain, start: usize, seed: u64) -> Result<u64, ChainError> {
    let mut rng = stream_rng(seed, 0);
    ChainSampler::new(chain).absorption_time(start, &mut rng, DEFAULT_STEP_CAP)
}
