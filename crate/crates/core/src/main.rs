use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use maxdeg::experiments::{
    alpha_study, compare_model, sweep_beta, write_alpha_study, write_model_comparison, write_sweep,
    write_trials, BetaGrid, ExperimentPlan, OutputFormat, RewireSettings, SweepConfig,
};
use maxdeg::generators::{expected_max_degree_bound, extract_giant_component, generate_er, ErSpec};
use maxdeg::graph::{
    assortativity, load_edge_list, ConditionalDegreeMatrix, DegreeProfile, Graph, JointDegreeMatrix,
};
use maxdeg::reduced::{ModelOptions, DEFAULT_TERM_BUDGET};
use maxdeg::rewire::{reconnect_components, rewire_to_target, RewireConfig};
use maxdeg::seed::child_seed;
use maxdeg::walker::{StartMode, DEFAULT_TRIALS};

type CliResult = Result<bool, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "maxdeg", version, about = "Biased random walks toward maximum-degree nodes")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    /// Uniform over nodes without maximum degree.
    Transient,
    /// Uniform over all nodes.
    All,
}

impl From<Start> for StartMode {
    fn from(s: Start) -> Self {
        match s {
            Start::Transient => StartMode::Transient,
            Start::All => StartMode::AllNodes,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.0)]
    beta_start: f64,
    #[arg(long, default_value_t = 8.0)]
    beta_end: f64,
    #[arg(long, default_value_t = 0.25)]
    beta_step: f64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = Start::Transient)]
    start: Start,
}

impl GridArgs {
    fn grid(&self) -> BetaGrid {
        BetaGrid {
            start: self.beta_start,
            end: self.beta_end,
            step: self.beta_step,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample an Erdős–Rényi graph.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "lambda", required_unless_present = "lambda")]
        p: Option<f64>,
        /// Mean degree; sets p = lambda / n.
        #[arg(long)]
        lambda: Option<f64>,
        /// Keep only the largest connected component.
        #[arg(long)]
        giant_only: bool,
        /// Edge-list path (default: <out-dir>/graph.txt).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewire a graph toward a target assortativity.
    Rewire {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        target_alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 5_000_000)]
        max_proposals: u64,
        /// Join disconnected pieces afterwards.
        #[arg(long)]
        reconnect: bool,
        /// Edge-list path (default: <out-dir>/rewired.txt).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint and conditional degree matrices plus summary statistics.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Sweep the walk bias on one graph.
    Sweep {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Skip the reduced model.
        #[arg(long)]
        no_model: bool,
        #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
        budget: u128,
        /// Also write every trial's absorption time.
        #[arg(long)]
        trials_out: bool,
    },
    /// Optimal bias as a function of target assortativity.
    AlphaStudy {
        /// Comma-separated targets.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_value = "-1,-0.75,-0.5,-0.25,0,0.25,0.5,0.75,1")]
        targets: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        graphs: usize,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 5_000_000)]
        max_proposals: u64,
        /// Evaluate the reduced model at every grid point.
        #[arg(long)]
        model: bool,
        #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
        budget: u128,
    },
    /// Walk simulation against the reduced-model prediction.
    ModelCompare {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
        budget: u128,
    },
}

fn read_graph(path: &Path) -> Result<Graph, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(load_edge_list(&text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Box<dyn std::error::Error>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Box<dyn std::error::Error>> {
    write_file(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn run(cli: Cli) -> CliResult {
    let dir = cli.out_dir.as_path();
    let format = OutputFormat::from(cli.format);
    fs::create_dir_all(dir)?;
    match cli.command {
        Command::Generate { n, p, lambda, giant_only, out } => {
            let spec = match (p, lambda) {
                (Some(p), _) => ErSpec { n, p, seed: cli.seed },
                (None, Some(l)) => ErSpec::with_mean_degree(n, l, cli.seed),
                (None, None) => unreachable!("clap requires one of --p/--lambda"),
            };
            let mut g = generate_er(&spec)?;
            if giant_only {
                g = extract_giant_component(&g);
            }
            let out = out.unwrap_or_else(|| dir.join("graph.txt"));
            write_file(&out, &g.to_edge_list())?;
            let lambda = spec.p * n as f64;
            let summary = json!({
                "n": g.node_count(),
                "m": g.edge_count(),
                "max_degree": DegreeProfile::new(&g).map(|d| d.max_degree()).ok(),
                "max_degree_bound": expected_max_degree_bound(n, lambda).ok(),
                "fingerprint": g.fingerprint(),
            });
            println!("{}", serde_json::to_string(&summary)?);
            Ok(true)
        }
        Command::Rewire { input, target_alpha, eps, max_proposals, reconnect, out } => {
            let g = read_graph(&input)?;
            let outcome = rewire_to_target(
                &g,
                &RewireConfig {
                    target: target_alpha,
                    tolerance: eps,
                    max_proposals,
                    seed: child_seed(cli.seed, &[0]),
                    ..Default::default()
                },
            )?;
            let (result, post) = if reconnect {
                let h = reconnect_components(&outcome.graph, child_seed(cli.seed, &[1]));
                let a = assortativity(&h).ok();
                (h, a)
            } else {
                (outcome.graph.clone(), Some(outcome.achieved))
            };
            let out = out.unwrap_or_else(|| dir.join("rewired.txt"));
            write_file(&out, &result.to_edge_list())?;
            write_json(
                &dir.join("rewire_report.json"),
                &json!({
                    "target": target_alpha,
                    "initial": outcome.initial,
                    "achieved_pre_connect": outcome.achieved,
                    "achieved_post_connect": post,
                    "proposals": outcome.proposals,
                    "accepted": outcome.accepted,
                    "converged": outcome.converged,
                }),
            )?;
            Ok(outcome.converged)
        }
        Command::Stats { input } => {
            let g = read_graph(&input)?;
            let profile = DegreeProfile::new(&g)?;
            let joint = JointDegreeMatrix::new(&g, &profile);
            let conditional = ConditionalDegreeMatrix::new(&joint)?;
            write_file(&dir.join("joint_degree.csv"), &joint.to_csv())?;
            write_file(&dir.join("conditional_degree.csv"), &conditional.to_csv())?;
            let alpha = assortativity(&g).ok();
            write_json(
                &dir.join("stats.json"),
                &json!({
                    "n": g.node_count(),
                    "m": g.edge_count(),
                    "fingerprint": g.fingerprint(),
                    "connected": g.is_connected(),
                    "components": g.components().len(),
                    "degrees": profile.degrees(),
                    "degree_distribution": profile.distribution(),
                    "max_degree": profile.max_degree(),
                    "max_degree_nodes": profile.max_degree_nodes().iter().map(|&v| g.label(v)).collect::<Vec<_>>(),
                    "assortativity": alpha,
                }),
            )?;
            Ok(alpha.is_some())
        }
        Command::Sweep { input, grid, no_model, budget, trials_out } => {
            let g = read_graph(&input)?;
            let cfg = SweepConfig {
                betas: grid.grid().values()?,
                trials: grid.trials,
                seed: cli.seed,
                start: grid.start.into(),
                model: !no_model,
                budget,
                ..Default::default()
            };
            let result = sweep_beta(&g, &cfg)?;
            write_sweep(dir, &result, format)?;
            if trials_out && !result.degenerate {
                write_trials(dir, &g, &result, format)?;
            }
            Ok(!result.has_flags())
        }
        Command::AlphaStudy { targets, graphs, n, p, grid, eps, max_proposals, model, budget } => {
            let plan = ExperimentPlan {
                targets,
                graphs,
                n,
                p,
                grid: grid.grid(),
                trials: grid.trials,
                seed: cli.seed,
                rewire: RewireSettings {
                    tolerance: eps,
                    max_proposals,
                    ..Default::default()
                },
                start: grid.start.into(),
                model,
                budget,
                ..Default::default()
            };
            let study = alpha_study(&plan)?;
            write_alpha_study(dir, &study, format)?;
            Ok(!study.has_flags())
        }
        Command::ModelCompare { input, grid, budget } => {
            let g = read_graph(&input)?;
            let options = ModelOptions {
                start: grid.start.into(),
                budget,
                ..Default::default()
            };
            let rows = compare_model(&g, &grid.grid().values()?, grid.trials, cli.seed, &options)?;
            write_model_comparison(dir, &rows, format)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("maxdeg: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("maxdeg: finished with flags set (see output files)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("maxdeg: {e}");
            ExitCode::FAILURE
        }
    }
}
