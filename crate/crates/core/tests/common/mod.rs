//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use maxdeg::chain::{partition_chain, AbsorbingChain, ChainSampler};
use maxdeg::generators::{extract_giant_component, generate_er, ErSpec};
use maxdeg::graph::{ConditionalDegreeMatrix, DegreeProfile, Graph};
use maxdeg::linalg::DenseMatrix;
use maxdeg::reduced::biased_degree_distribution;
use maxdeg::seed::{stream_rng, Rng};
use rand::Rng as _;

/// Random absorbing chain with `transient` transient states followed by
/// `absorbing` absorbing ones. Every transient row puts positive mass on the
/// first absorbing state, with a self-mass that keeps times moderate.
pub fn random_chain(rng: &mut Rng, transient: usize, absorbing: usize) -> AbsorbingChain {
    let n = transient + absorbing;
    let mut p = DenseMatrix::zeros(n, n);
    for i in 0..transient {
        let mut w: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.35 { 0.0 } else { rng.random::<f64>() })
            .collect();
        w[transient] += 0.05 + 0.3 * rng.random::<f64>();
        let total: f64 = w.iter().sum();
        for j in 0..n {
            p[(i, j)] = w[j] / total;
        }
    }
    for a in transient..n {
        p[(a, a)] = 1.0;
    }
    let labels = (0..n).map(|i| format!("s{i}")).collect();
    partition_chain(labels, &p, |i| i >= transient).expect("valid chain")
}

/// Sample mean, variance and standard errors of both from `trials` draws.
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
}

pub fn moments(samples: &[u64]) -> Moments {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in samples {
        let d = x as f64 - mean;
        m2 += d * d;
        m4 += d.powi(4);
    }
    let variance = m2 / (n - 1.0);
    let m4 = m4 / n;
    Moments {
        mean,
        variance,
        mean_se: (variance / n).sqrt(),
        variance_se: ((m4 - variance * variance).max(0.0) / n).sqrt(),
    }
}

pub fn chain_samples(chain: &AbsorbingChain, start: usize, seed: u64, trials: usize) -> Vec<u64> {
    let sampler = ChainSampler::new(chain);
    let mut rng = stream_rng(seed, start as u64);
    (0..trials)
        .map(|_| sampler.absorption_time(start, &mut rng, 10_000_000).unwrap())
        .collect()
}

/// A connected graph that is not regular, drawn from ER and trimmed to its
/// giant component, retrying with new seeds as needed.
pub fn connected_graph(n: usize, p: f64, seed: u64) -> Graph {
    for attempt in 0.. {
        let g = generate_er(&ErSpec { n, p, seed: seed.wrapping_mul(1000).wrapping_add(attempt) }).unwrap();
        let g = extract_giant_component(&g);
        if g.node_count() >= 3 {
            let profile = DegreeProfile::new(&g).unwrap();
            if profile.len() > 1 {
                return g;
            }
        }
    }
    unreachable!()
}

/// Random stochastic rows over `degrees`, each with a random support.
pub fn random_conditional(rng: &mut Rng, degrees: Vec<usize>) -> ConditionalDegreeMatrix {
    let size = degrees.len();
    let rows: Vec<Vec<f64>> = (0..size)
        .map(|_| {
            let mut w: Vec<f64> = (0..size)
                .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() })
                .collect();
            let j = rng.random_range(0..size);
            w[j] += 0.1;
            let total: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / total).collect();
            // make the row sum to one exactly enough for the constructor
            let s: f64 = row.iter().sum();
            row[j] += 1.0 - s;
            row
        })
        .collect();
    ConditionalDegreeMatrix::from_rows(degrees, &rows).unwrap()
}

/// Monte Carlo estimate of one approximate-matrix row: draw
/// `N ~ mult(k, row)` and average the biased degree distribution. Returns
/// per-entry means and standard errors.
pub fn multinomial_row_estimate(
    jt: &ConditionalDegreeMatrix,
    i: usize,
    beta: f64,
    draws: usize,
    rng: &mut Rng,
) -> (Vec<f64>, Vec<f64>) {
    let size = jt.size();
    let k = jt.degrees()[i];
    let cdf: Vec<f64> = jt
        .row(i)
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut sum = vec![0.0; size];
    let mut sum_sq = vec![0.0; size];
    let mut counts = vec![0u32; size];
    for _ in 0..draws {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..k {
            let u = rng.random::<f64>() * cdf[size - 1];
            let j = cdf.partition_point(|&c| c <= u).min(size - 1);
            counts[j] += 1;
        }
        let p = biased_degree_distribution(&counts, jt.degrees(), beta).unwrap();
        for j in 0..size {
            sum[j] += p[j];
            sum_sq[j] += p[j] * p[j];
        }
    }
    let n = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se = (0..size)
        .map(|j| ((sum_sq[j] / n - mean[j] * mean[j]).max(0.0) / n).sqrt())
        .collect();
    (mean, se)
}
