//! Erdős–Rényi graphs and the parameter heuristics used to size them.

use rand::Rng as _;
use thiserror::Error;

use crate::graph::Graph;
use crate::seed::stream_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("edge probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("max-degree bound requires ln(n) > lambda > 0 (n = {n}, lambda = {lambda})")]
    BoundDomain { n: usize, lambda: f64 },
    #[error("no giant component for mean degree {0} <= 1")]
    Subcritical(f64),
    #[error("Lambert W is undefined below -1/e (x = {0})")]
    LambertDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErSpec {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl ErSpec {
    /// `p = lambda / n`.
    pub fn with_mean_degree(n: usize, lambda: f64, seed: u64) -> Self {
        Self {
            n,
            p: lambda / n as f64,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.n < 2 {
            return Err(GeneratorError::TooFewNodes(self.n));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(GeneratorError::BadProbability(self.p));
        }
        Ok(())
    }
}

/// `G(n, p)`: each unordered pair independently with probability `p`.
///
/// Pairs are visited in the order `(1,0), (2,0), (2,1), (3,0), ...` and the
/// gap to the next included pair is drawn from a geometric distribution, so
/// the cost is proportional to the number of edges rather than `n²`.
pub fn generate_er(spec: &ErSpec) -> Result<Graph, GeneratorError> {
    spec.validate()?;
    let n = spec.n;
    let mut edges = Vec::new();
    if spec.p >= 1.0 {
        for v in 1..n {
            edges.extend((0..v).map(|w| (v, w)));
        }
    } else if spec.p > 0.0 {
        let mut rng = stream_rng(spec.seed, 0);
        let log_q = (1.0 - spec.p).ln();
        let (mut v, mut w): (usize, i64) = (1, -1);
        while v < n {
            let r: f64 = rng.random();
            let skip = ((1.0 - r).ln() / log_q).floor();
            w += 1 + if skip.is_finite() { skip.min(i64::MAX as f64 / 4.0) as i64 } else { 0 };
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((v, w as usize));
            }
        }
    }
    Ok(Graph::from_edges(n, edges).expect("generated pairs are distinct"))
}

/// Principal branch of the Lambert W function, `w e^w = x` for `x >= -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64, GeneratorError> {
    let branch = -1.0 / std::f64::consts::E;
    if x.is_nan() || x < branch {
        return Err(GeneratorError::LambertDomain(x));
    }
    if x == branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < -0.25 {
        // series about the branch point
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0
    } else if x < 3.0 {
        x.ln_1p() * 0.8
    } else {
        let l = x.ln();
        l - l.ln()
    };
    let tol = 1e-12 * x.abs().max(1.0);
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            break;
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-16 * w.abs().max(1.0) {
            break;
        }
    }
    Ok(w)
}

/// Upper bound on the expected maximum degree of `G(n, lambda/n)` from the
/// Chernoff-style bound `E[max] <= (ln n + lambda (e^t - 1)) / t` minimised
/// over `t`, which has the closed form `(ln n - lambda) / W((ln n - lambda) / (e lambda))`.
pub fn expected_max_degree_bound(n: usize, lambda: f64) -> Result<f64, GeneratorError> {
    let log_n = (n as f64).ln();
    if !(lambda > 0.0) || log_n <= lambda {
        return Err(GeneratorError::BoundDomain { n, lambda });
    }
    let a = log_n - lambda;
    Ok(a / lambert_w0(a / (std::f64::consts::E * lambda))?)
}

/// Fraction `gamma` of nodes in the giant component of `G(n, lambda/n)`,
/// the root of `-ln(1 - gamma) / gamma = lambda`.
pub fn giant_component_fraction(lambda: f64) -> Result<f64, GeneratorError> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(GeneratorError::Subcritical(lambda));
    }
    let f = |g: f64| -(-g).ln_1p() / g - lambda;
    let (mut lo, mut hi) = (f64::EPSILON, 1.0 - f64::EPSILON);
    if f(hi) < 0.0 {
        return Ok(hi);
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest connected component as an induced subgraph; labels carry over.
/// Equal-sized components resolve to the one holding the smallest node.
pub fn extract_giant_component(g: &Graph) -> Graph {
    let comps = g.components();
    let mut best: Option<&Vec<usize>> = None;
    for c in &comps {
        if best.is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    match best {
        Some(c) if c.len() < g.node_count() => g.induced(c),
        _ => g.clone(),
    }
}
