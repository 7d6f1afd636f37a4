use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::study::AlphaStudy;
use super::sweep::{ModelComparison, SweepResult};
use super::ExperimentError;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Writes `rows` to `dir/stem.{csv,json}`; an empty table is an error.
fn write_table<T: Serialize>(dir: &Path, stem: &str, rows: &[T], format: OutputFormat) -> Result<PathBuf, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::EmptyResults);
    }
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        OutputFormat::Json => write_json(&path, rows)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| io_error(&path, e.into_error()))?;
            write_bytes(&path, &bytes)?;
        }
    }
    Ok(path)
}

#[derive(Serialize)]
struct SweepRow {
    beta: f64,
    brw_mean: f64,
    brw_std: f64,
    brw_stderr: f64,
    brw_capped: usize,
    model_mean: Option<f64>,
    model_std: Option<f64>,
    no_r_mean: Option<f64>,
    no_r_std: Option<f64>,
    no_r_n_mean: Option<f64>,
    no_r_n_std: Option<f64>,
    in_interval: bool,
}

fn sweep_rows(s: &SweepResult) -> Vec<SweepRow> {
    let members = s.optimum.as_ref().map(|o| o.members.as_slice()).unwrap_or(&[]);
    s.points
        .iter()
        .map(|p| SweepRow {
            beta: p.beta,
            brw_mean: p.brw.mean,
            brw_std: p.brw.std,
            brw_stderr: p.brw.stderr,
            brw_capped: p.capped,
            model_mean: p.model.map(|m| m.mean),
            model_std: p.model.map(|m| m.std),
            no_r_mean: s.no_r.map(|b| b.mean),
            no_r_std: s.no_r.map(|b| b.std),
            no_r_n_mean: s.no_r_n.map(|b| b.mean),
            no_r_n_std: s.no_r_n.map(|b| b.std),
            in_interval: members.contains(&p.beta),
        })
        .collect()
}

/// `sweep.{csv,json}` with one row per bias, plus `sweep_summary.json`.
pub fn write_sweep(dir: &Path, sweep: &SweepResult, format: OutputFormat) -> Result<Vec<PathBuf>, ExperimentError> {
    let rows = sweep_rows(sweep);
    let mut out = Vec::new();
    if rows.is_empty() {
        // nothing to sweep; the summary still records why
        if !sweep.degenerate {
            return Err(ExperimentError::EmptyResults);
        }
    } else {
        out.push(write_table(dir, "sweep", &rows, format)?);
    }
    let summary = dir.join("sweep_summary.json");
    write_json(
        &summary,
        &serde_json::json!({
            "meta": sweep.meta,
            "degenerate": sweep.degenerate,
            "optimum": sweep.optimum,
            "model_optimum": sweep.model_optimum,
            "model_feasible": sweep.model_feasible,
            "capped_trials": sweep.capped_trials(),
            "no_r": sweep.no_r,
            "no_r_n": sweep.no_r_n,
        }),
    )?;
    out.push(summary);
    Ok(out)
}

#[derive(Serialize)]
struct TrialRow {
    beta: f64,
    trial: usize,
    start_node: u64,
    #[serde(rename = "T")]
    steps: Option<u64>,
}

/// Per-trial walk times, `trials.{csv,json}`; a capped trial has no `T`.
pub fn write_trials(dir: &Path, g: &Graph, sweep: &SweepResult, format: OutputFormat) -> Result<PathBuf, ExperimentError> {
    let rows: Vec<TrialRow> = sweep
        .points
        .iter()
        .zip(&sweep.trial_starts)
        .flat_map(|(p, trials)| {
            trials.iter().map(move |&(trial, start, steps)| TrialRow {
                beta: p.beta,
                trial,
                start_node: g.label(start),
                steps,
            })
        })
        .collect();
    write_table(dir, "trials", &rows, format)
}

pub fn write_model_comparison(
    dir: &Path,
    rows: &[ModelComparison],
    format: OutputFormat,
) -> Result<PathBuf, ExperimentError> {
    write_table(dir, "model_compare", rows, format)
}

#[derive(Serialize)]
struct RewireRow {
    alpha_t: f64,
    graph: usize,
    alpha_initial: f64,
    alpha_disconnected: f64,
    alpha_connected: f64,
    proposals: u64,
    converged: bool,
}

#[derive(Serialize)]
struct StudySweepRow {
    alpha_t: f64,
    graph: usize,
    beta: f64,
    brw_mean: f64,
    brw_stderr: f64,
    model_mean: Option<f64>,
    no_r_mean: Option<f64>,
    no_r_n_mean: Option<f64>,
}

#[derive(Serialize)]
struct BetaStarRow {
    alpha_t: f64,
    beta_star: f64,
    beta_min: f64,
    beta_max: f64,
    mean_alpha: f64,
    graphs: usize,
    unconverged: usize,
}

#[derive(Serialize)]
struct TStarRow {
    alpha_t: f64,
    t_star: f64,
    t_star_stderr: f64,
    no_r_mean: f64,
    no_r_stderr: f64,
    no_r_n_mean: f64,
    no_r_n_stderr: f64,
    model_t_star: Option<f64>,
}

/// Four tables: rewiring outcomes, per-graph sweeps, the optimal bias per
/// target and the optimal mean per target, plus
/// `study_summary.json`.
pub fn write_alpha_study(dir: &Path, study: &AlphaStudy, format: OutputFormat) -> Result<Vec<PathBuf>, ExperimentError> {
    if study.runs.is_empty() {
        return Err(ExperimentError::EmptyResults);
    }
    let rewire: Vec<RewireRow> = study
        .runs
        .iter()
        .map(|r| RewireRow {
            alpha_t: r.target,
            graph: r.graph,
            alpha_initial: r.rewire.initial,
            alpha_disconnected: r.rewire.pre_connect,
            alpha_connected: r.rewire.post_connect,
            proposals: r.rewire.proposals,
            converged: r.rewire.converged,
        })
        .collect();
    let sweeps: Vec<StudySweepRow> = study
        .runs
        .iter()
        .flat_map(|r| {
            sweep_rows(&r.sweep).into_iter().map(move |s| StudySweepRow {
                alpha_t: r.target,
                graph: r.graph,
                beta: s.beta,
                brw_mean: s.brw_mean,
                brw_stderr: s.brw_stderr,
                model_mean: s.model_mean,
                no_r_mean: s.no_r_mean,
                no_r_n_mean: s.no_r_n_mean,
            })
        })
        .collect();
    let beta_star: Vec<BetaStarRow> = study
        .targets
        .iter()
        .map(|t| BetaStarRow {
            alpha_t: t.alpha_t,
            beta_star: t.beta_star,
            beta_min: t.beta_min,
            beta_max: t.beta_max,
            mean_alpha: t.mean_alpha,
            graphs: t.graphs,
            unconverged: t.unconverged,
        })
        .collect();
    let t_star: Vec<TStarRow> = study
        .targets
        .iter()
        .map(|t| TStarRow {
            alpha_t: t.alpha_t,
            t_star: t.t_star.mean,
            t_star_stderr: t.t_star.stderr,
            no_r_mean: t.no_r.mean,
            no_r_stderr: t.no_r.stderr,
            no_r_n_mean: t.no_r_n.mean,
            no_r_n_stderr: t.no_r_n.stderr,
            model_t_star: t.model_t_star,
        })
        .collect();
    let mut out = vec![
        write_table(dir, "study_rewiring", &rewire, format)?,
        write_table(dir, "study_sweeps", &sweeps, format)?,
        write_table(dir, "study_beta_star", &beta_star, format)?,
        write_table(dir, "study_t_star", &t_star, format)?,
    ];
    let summary = dir.join("study_summary.json");
    write_json(
        &summary,
        &serde_json::json!({
            "seed": study.seed,
            "betas": study.betas,
            "targets": study.targets,
            "flags": study.has_flags(),
        }),
    )?;
    out.push(summary);
    Ok(out)
}
