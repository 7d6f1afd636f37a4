use serde::Serialize;

use super::ExperimentError;
use crate::chain::DEFAULT_STEP_CAP;
use crate::graph::{assortativity, DegreeProfile, Graph};
use crate::reduced::{model_absorption, ModelError, ModelOptions, ModelSummary, DEFAULT_TERM_BUDGET};
use crate::seed::child_seed;
use crate::walker::{
    simulate_brw, simulate_sampling, NeighborPool, SamplingConfig, SamplingMode, StartMode,
    TrialSummary, WalkConfig, DEFAULT_TRIALS,
};

/// Evenly spaced bias values `start, start + step, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for BetaGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: 8.0,
            step: 0.25,
        }
    }
}

impl BetaGrid {
    pub fn values(&self) -> Result<Vec<f64>, ExperimentError> {
        if !(self.step > 0.0) || !(self.end >= self.start) || !(self.start >= 0.0) {
            return Err(ExperimentError::EmptyGrid);
        }
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub start: StartMode,
    pub step_cap: u64,
    pub model: bool,
    pub budget: u128,
    pub pool: NeighborPool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            betas: BetaGrid::default().values().expect("default grid"),
            trials: DEFAULT_TRIALS,
            seed: 0,
            start: StartMode::Transient,
            step_cap: DEFAULT_STEP_CAP,
            model: true,
            budget: DEFAULT_TERM_BUDGET,
            pool: NeighborPool::RemoveObserved,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaPoint {
    pub beta: f64,
    pub brw: TrialSummary,
    pub capped: usize,
    pub model: Option<ModelSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMeta {
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
    pub transient_nodes: usize,
    pub assortativity: Option<f64>,
    pub seed: u64,
}

/// The grid value with the smallest mean and every value within 10% of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalBeta {
    pub beta_star: f64,
    pub best_mean: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// All grid values with mean `<= 1.1 * best_mean`.
    pub members: Vec<f64>,
}

/// Locates the optimum over `betas`; ties go to the smallest bias. Entries
/// with a NaN mean are skipped.
pub fn optimal_interval(betas: &[f64], means: &[f64]) -> Option<OptimalBeta> {
    assert_eq!(betas.len(), means.len());
    let best = (0..betas.len())
        .filter(|&i| !means[i].is_nan())
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if means[b] <= means[i] => Some(b),
            _ => Some(i),
        })?;
    let limit = 1.1 * means[best];
    let members: Vec<f64> = (0..betas.len())
        .filter(|&i| means[i] <= limit)
        .map(|i| betas[i])
        .collect();
    Some(OptimalBeta {
        beta_star: betas[best],
        best_mean: means[best],
        beta_min: members.iter().copied().fold(f64::INFINITY, f64::min),
        beta_max: members.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        members,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub meta: SweepMeta,
    /// No transient nodes: every node already has maximum degree.
    pub degenerate: bool,
    pub points: Vec<BetaPoint>,
    pub no_r: Option<TrialSummary>,
    pub no_r_n: Option<TrialSummary>,
    pub optimum: Option<OptimalBeta>,
    pub model_optimum: Option<OptimalBeta>,
    pub model_feasible: bool,
    #[serde(skip)]
    pub brw_times: Vec<Vec<u64>>,
    #[serde(skip)]
    pub no_r_times: Vec<u64>,
    #[serde(skip)]
    pub no_r_n_times: Vec<u64>,
    #[serde(skip)]
    pub trial_starts: Vec<Vec<(usize, usize, Option<u64>)>>,
}

impl SweepResult {
    pub fn capped_trials(&self) -> usize {
        self.points.iter().map(|p| p.capped).sum()
    }

    /// Whether anything in the sweep needs the caller's attention.
    pub fn has_flags(&self) -> bool {
        self.degenerate || self.capped_trials() > 0 || !self.model_feasible
    }
}

fn run_model(g: &Graph, beta: f64, cfg: &SweepConfig) -> Result<Option<ModelSummary>, ExperimentError> {
    let options = ModelOptions {
        start: cfg.start.clone(),
        budget: cfg.budget,
        ..Default::default()
    };
    match model_absorption(g, beta, &options) {
        Ok(s) => Ok(Some(s)),
        Err(ModelError::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Simulates the walk at every grid bias and the sampling baselines once.
///
/// All biases share the walk seed, so trial `i` uses the same random stream
/// at every grid point.
pub fn sweep_beta(g: &Graph, cfg: &SweepConfig) -> Result<SweepResult, ExperimentError> {
    if cfg.betas.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    let profile = DegreeProfile::new(g)?;
    let meta = SweepMeta {
        graph: g.fingerprint(),
        n: g.node_count(),
        m: g.edge_count(),
        max_degree: profile.max_degree(),
        transient_nodes: profile.transient_nodes().len(),
        assortativity: assortativity(g).ok(),
        seed: cfg.seed,
    };
    if meta.transient_nodes == 0 {
        return Ok(SweepResult {
            meta,
            degenerate: true,
            points: Vec::new(),
            no_r: None,
            no_r_n: None,
            optimum: None,
            model_optimum: None,
            model_feasible: true,
            brw_times: Vec::new(),
            no_r_times: Vec::new(),
            no_r_n_times: Vec::new(),
            trial_starts: Vec::new(),
        });
    }
    let walk_seed = child_seed(cfg.seed, &[0]);
    let mut points = Vec::with_capacity(cfg.betas.len());
    let mut brw_times = Vec::with_capacity(cfg.betas.len());
    let mut trial_starts = Vec::with_capacity(cfg.betas.len());
    let mut model_feasible = cfg.model;
    for &beta in &cfg.betas {
        let run = simulate_brw(
            g,
            &WalkConfig {
                beta,
                seed: walk_seed,
                trials: cfg.trials,
                step_cap: cfg.step_cap,
                start: cfg.start.clone(),
            },
        )?;
        let model = if model_feasible {
            let m = run_model(g, beta, cfg)?;
            model_feasible = m.is_some();
            m
        } else {
            None
        };
        brw_times.push(run.times());
        trial_starts.push(run.records.iter().map(|r| (r.trial, r.start, r.steps)).collect());
        points.push(BetaPoint {
            beta,
            brw: run.summary,
            capped: run.capped,
            model,
        });
    }
    if !model_feasible {
        for p in &mut points {
            p.model = None;
        }
    }
    let sampling = |mode, tag| {
        simulate_sampling(
            g,
            &SamplingConfig {
                mode,
                seed: child_seed(cfg.seed, &[tag]),
                trials: cfg.trials,
                pool: cfg.pool,
            },
        )
    };
    let no_r = sampling(SamplingMode::NoReplacement, 1)?;
    let no_r_n = sampling(SamplingMode::WithNeighbors, 2)?;
    let means: Vec<f64> = points.iter().map(|p| p.brw.mean).collect();
    let optimum = optimal_interval(&cfg.betas, &means);
    let model_optimum = if model_feasible && cfg.model {
        let model_means: Vec<f64> = points
            .iter()
            .map(|p| p.model.map_or(f64::NAN, |m| m.mean))
            .collect();
        optimal_interval(&cfg.betas, &model_means)
    } else {
        None
    };
    Ok(SweepResult {
        meta,
        degenerate: false,
        points,
        no_r: Some(no_r.summary),
        no_r_n: Some(no_r_n.summary),
        optimum,
        model_optimum,
        model_feasible: model_feasible || !cfg.model,
        brw_times,
        no_r_times: no_r.times,
        no_r_n_times: no_r_n.times,
        trial_starts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelComparison {
    pub beta: f64,
    pub empirical_mean: f64,
    pub empirical_std: f64,
    pub empirical_stderr: f64,
    pub model_mean: f64,
    pub model_std: f64,
    /// `model_mean - empirical_mean`.
    pub discrepancy: f64,
    /// `discrepancy / empirical_mean`.
    pub relative_error: f64,
}

/// Empirical walk means against the reduced-model prediction at each bias.
pub fn compare_model(
    g: &Graph,
    betas: &[f64],
    trials: usize,
    seed: u64,
    options: &ModelOptions,
) -> Result<Vec<ModelComparison>, ExperimentError> {
    if betas.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    let walk_seed = child_seed(seed, &[0]);
    betas
        .iter()
        .map(|&beta| {
            let model = model_absorption(g, beta, options)?;
            let run = simulate_brw(
                g,
                &WalkConfig {
                    beta,
                    seed: walk_seed,
                    trials,
                    start: options.start.clone(),
                    ..Default::default()
                },
            )?;
            let discrepancy = model.mean - run.summary.mean;
            Ok(ModelComparison {
                beta,
                empirical_mean: run.summary.mean,
                empirical_std: run.summary.std,
                empirical_stderr: run.summary.stderr,
                model_mean: model.mean,
                model_std: model.std,
                discrepancy,
                relative_error: discrepancy / run.summary.mean,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{absorption_stats, aggregate};
    use crate::graph::fixtures::{cycle, lollipop, star};
    use crate::walker::build_full_chain;

    #[test]
    fn default_grid() {
        let b = BetaGrid::default().values().unwrap();
        assert_eq!(b.len(), 33);
        assert_eq!((b[0], b[32]), (0.0, 8.0));
        assert!(BetaGrid { start: 1.0, end: 0.0, step: 0.5 }.values().is_err());
    }

    #[test]
    fn interval_rules() {
        let o = optimal_interval(&[0.0, 1.0, 2.0, 3.0], &[10.0, 9.0, 9.0, 9.5]).unwrap();
        assert_eq!(o.beta_star, 1.0);
        assert_eq!((o.beta_min, o.beta_max), (1.0, 3.0));
        let o = optimal_interval(&[0.0, 1.0, 2.0], &[5.0, 20.0, 5.4]).unwrap();
        assert_eq!(o.members, vec![0.0, 2.0]);
    }

    #[test]
    fn star_sweep_is_flat() {
        let cfg = SweepConfig {
            trials: 50,
            ..Default::default()
        };
        let r = sweep_beta(&star(5), &cfg).unwrap();
        assert!(r.points.iter().all(|p| p.brw.mean == 1.0));
        let o = r.optimum.unwrap();
        assert_eq!((o.beta_min, o.beta_max), (0.0, 8.0));
        assert_eq!(o.members.len(), 33);
    }

    #[test]
    fn regular_sweep_is_degenerate() {
        let r = sweep_beta(&cycle(7), &SweepConfig::default()).unwrap();
        assert!(r.degenerate && r.has_flags());
    }

    #[test]
    fn lollipop_sweep_matches_full_chain() {
        let g = lollipop();
        let cfg = SweepConfig {
            betas: vec![0.0, 1.0, 2.0],
            trials: 20_000,
            seed: 12,
            ..Default::default()
        };
        let r = sweep_beta(&g, &cfg).unwrap();
        for p in &r.points {
            let s = absorption_stats(&build_full_chain(&g, p.beta).unwrap()).unwrap();
            let exact = aggregate(&s, &[1.0 / 3.0; 3]).unwrap().mean;
            assert!((p.brw.mean - exact).abs() <= 4.0 * p.brw.stderr);
        }
        let no_r = r.no_r.unwrap();
        assert!(no_r.count == 20_000);
    }

    #[test]
    fn star_model_is_exact() {
        let rows = compare_model(&star(6), &[0.0, 2.0, 8.0], 200, 1, &ModelOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.discrepancy == 0.0));
        assert!(compare_model(&star(6), &[], 10, 1, &ModelOptions::default()).is_err());
    }
}
