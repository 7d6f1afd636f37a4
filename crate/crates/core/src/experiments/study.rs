use rayon::prelude::*;
use serde::Serialize;

use super::sweep::{sweep_beta, BetaGrid, SweepConfig, SweepResult};
use super::ExperimentError;
use crate::chain::DEFAULT_STEP_CAP;
use crate::generators::{extract_giant_component, generate_er, ErSpec};
use crate::graph::assortativity;
use crate::reduced::DEFAULT_TERM_BUDGET;
use crate::rewire::{reconnect_components, rewire_to_target, RewireConfig, SwapChoice};
use crate::seed::child_seed;
use crate::walker::{NeighborPool, StartMode, TrialSummary, DEFAULT_TRIALS};

#[derive(Debug, Clone, PartialEq)]
pub struct RewireSettings {
    pub tolerance: f64,
    pub max_proposals: u64,
    pub choice: SwapChoice,
}

impl Default for RewireSettings {
    fn default() -> Self {
        let d = RewireConfig::default();
        Self {
            tolerance: d.tolerance,
            max_proposals: d.max_proposals,
            choice: d.choice,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub targets: Vec<f64>,
    pub graphs: usize,
    pub n: usize,
    pub p: f64,
    pub grid: BetaGrid,
    pub trials: usize,
    pub seed: u64,
    pub rewire: RewireSettings,
    pub start: StartMode,
    pub step_cap: u64,
    /// Evaluate the reduced model at every grid point as well.
    pub model: bool,
    pub budget: u128,
    pub pool: NeighborPool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            targets: (0..9).map(|i| -1.0 + 0.25 * i as f64).collect(),
            graphs: 10,
            n: 100,
            p: 0.05,
            grid: BetaGrid::default(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            rewire: RewireSettings::default(),
            start: StartMode::Transient,
            step_cap: DEFAULT_STEP_CAP,
            model: false,
            budget: DEFAULT_TERM_BUDGET,
            pool: NeighborPool::RemoveObserved,
        }
    }
}

impl ExperimentPlan {
    fn validate(&self) -> Result<Vec<f64>, ExperimentError> {
        if self.targets.is_empty() || self.graphs == 0 || self.trials == 0 {
            return Err(ExperimentError::EmptyResults);
        }
        self.grid.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewireRecord {
    pub initial: f64,
    pub pre_connect: f64,
    pub post_connect: f64,
    pub proposals: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphRun {
    pub target: f64,
    pub graph: usize,
    pub rewire: RewireRecord,
    pub sweep: SweepResult,
}

impl GraphRun {
    /// Walk times at this graph's optimal bias.
    pub fn optimal_times(&self) -> &[u64] {
        match &self.sweep.optimum {
            Some(o) => {
                let i = self.sweep.points.iter().position(|p| p.beta == o.beta_star).expect("optimum on grid");
                &self.sweep.brw_times[i]
            }
            None => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSummary {
    pub alpha_t: f64,
    pub graphs: usize,
    pub mean_alpha: f64,
    /// Means of the per-graph optimum and interval endpoints.
    pub beta_star: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Pooled walk times at each graph's optimum.
    pub t_star: TrialSummary,
    pub no_r: TrialSummary,
    pub no_r_n: TrialSummary,
    /// Mean over graphs of the smallest model mean, when every graph has one.
    pub model_t_star: Option<f64>,
    pub unconverged: usize,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaStudy {
    pub seed: u64,
    pub betas: Vec<f64>,
    pub runs: Vec<GraphRun>,
    pub targets: Vec<TargetSummary>,
}

impl AlphaStudy {
    pub fn has_flags(&self) -> bool {
        self.targets.iter().any(|t| t.unconverged > 0 || t.degenerate > 0)
            || self.runs.iter().any(|r| r.sweep.has_flags())
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

fn summarise(target: f64, runs: &[&GraphRun]) -> TargetSummary {
    let live: Vec<&&GraphRun> = runs.iter().filter(|r| r.sweep.optimum.is_some()).collect();
    let pooled = |f: &dyn Fn(&GraphRun) -> Vec<u64>| {
        let all: Vec<u64> = runs.iter().flat_map(|r| f(r)).collect();
        TrialSummary::from_samples(&all)
    };
    let model_t_star = if !live.is_empty() && live.iter().all(|r| r.sweep.model_optimum.is_some()) {
        Some(mean(live.iter().map(|r| r.sweep.model_optimum.as_ref().unwrap().best_mean)))
    } else {
        None
    };
    TargetSummary {
        alpha_t: target,
        graphs: runs.len(),
        mean_alpha: mean(runs.iter().map(|r| r.rewire.post_connect)),
        beta_star: mean(live.iter().map(|r| r.sweep.optimum.as_ref().unwrap().beta_star)),
        beta_min: mean(live.iter().map(|r| r.sweep.optimum.as_ref().unwrap().beta_min)),
        beta_max: mean(live.iter().map(|r| r.sweep.optimum.as_ref().unwrap().beta_max)),
        t_star: pooled(&|r| r.optimal_times().to_vec()),
        no_r: pooled(&|r| r.sweep.no_r_times.clone()),
        no_r_n: pooled(&|r| r.sweep.no_r_n_times.clone()),
        model_t_star,
        unconverged: runs.iter().filter(|r| !r.rewire.converged).count(),
        degenerate: runs.iter().filter(|r| r.sweep.degenerate).count(),
    }
}

fn run_cell(plan: &ExperimentPlan, betas: &[f64], target: f64, t: usize, graph: usize) -> Result<GraphRun, ExperimentError> {
    let base = generate_er(&ErSpec {
        n: plan.n,
        p: plan.p,
        seed: child_seed(plan.seed, &[0, graph as u64]),
    })?;
    let base = extract_giant_component(&base);
    let cell = [1, t as u64, graph as u64];
    let outcome = rewire_to_target(
        &base,
        &RewireConfig {
            target,
            tolerance: plan.rewire.tolerance,
            max_proposals: plan.rewire.max_proposals,
            seed: child_seed(plan.seed, &[cell[0], cell[1], cell[2], 0]),
            choice: plan.rewire.choice,
        },
    )?;
    let connected = reconnect_components(&outcome.graph, child_seed(plan.seed, &[cell[0], cell[1], cell[2], 1]));
    let post_connect = assortativity(&connected).unwrap_or(f64::NAN);
    let sweep = sweep_beta(
        &connected,
        &SweepConfig {
            betas: betas.to_vec(),
            trials: plan.trials,
            seed: child_seed(plan.seed, &[cell[0], cell[1], cell[2], 2]),
            start: plan.start.clone(),
            step_cap: plan.step_cap,
            model: plan.model,
            budget: plan.budget,
            pool: plan.pool,
        },
    )?;
    Ok(GraphRun {
        target,
        graph,
        rewire: RewireRecord {
            initial: outcome.initial,
            pre_connect: outcome.achieved,
            post_connect,
            proposals: outcome.proposals,
            converged: outcome.converged,
        },
        sweep,
    })
}

/// Generates, rewires, reconnects and sweeps `graphs` instances per target.
///
/// Graph `i` starts from the same Erdős–Rényi instance for every target.
/// Cells run in parallel; results keep `(target, graph)` order.
pub fn alpha_study(plan: &ExperimentPlan) -> Result<AlphaStudy, ExperimentError> {
    let betas = plan.validate()?;
    let cells: Vec<(usize, usize)> = (0..plan.targets.len())
        .flat_map(|t| (0..plan.graphs).map(move |g| (t, g)))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(t, g)| run_cell(plan, &betas, plan.targets[t], t, g))
        .collect::<Result<Vec<_>, _>>()?;
    let targets = plan
        .targets
        .iter()
        .enumerate()
        .map(|(t, &alpha)| {
            let group: Vec<&GraphRun> = runs[t * plan.graphs..(t + 1) * plan.graphs].iter().collect();
            summarise(alpha, &group)
        })
        .collect();
    Ok(AlphaStudy {
        seed: plan.seed,
        betas,
        runs,
        targets,
    })
}
