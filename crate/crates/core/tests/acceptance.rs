//! Acceptance suite: one `[PASS]` / `[FAIL]` line per criterion.
//!
//! Runs as a plain binary so the report is always printed. Exits nonzero
//! when a gated criterion fails; AC10 is reported but not gated.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{chain_samples, connected_graph, moments, multinomial_row_estimate, random_chain, random_conditional};
use maxdeg::chain::{absorption_stats, absorption_stats_with, aggregate, VarianceForm};
use maxdeg::experiments::{alpha_study, AlphaStudy, ExperimentPlan};
use maxdeg::generators::{expected_max_degree_bound, generate_er, giant_component_fraction, ErSpec};
use maxdeg::graph::{assortativity, ConditionalDegreeMatrix, DegreeProfile, Graph, JointDegreeMatrix};
use maxdeg::reduced::{approximate_matrix, averaged_matrix, DEFAULT_TERM_BUDGET};
use maxdeg::rewire::{reconnect_components, rewire_to_target, RewireConfig};
use maxdeg::seed::{child_seed, stream_rng};
use maxdeg::stats::{spearman, welch_t_test};
use maxdeg::walker::{build_full_chain, simulate_brw, WalkConfig};
use rand::Rng as _;
use rayon::prelude::*;

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn record(&mut self, id: &'static str, pass: bool, gated: bool, detail: String) {
        let tag = match (pass, gated) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "SOFT-FAIL",
        };
        println!("[{tag}] {id} {detail}");
        if !pass && gated {
            self.failed.push(id);
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn ac1(r: &mut Report) {
    let reps = 1000;
    let (b, elapsed) = timed(|| {
        let mut b = 0.0;
        for _ in 0..reps {
            b = expected_max_degree_bound(std::hint::black_box(1090), 2.8).unwrap();
        }
        b
    });
    let per_call = elapsed / reps;
    let pass = (b - 11.1041).abs() <= 1e-3 && per_call < Duration::from_millis(1);
    r.record("AC1", pass, true, format!("max-degree bound(1090, 2.8) = {b:.6} (target 11.1041 +/- 1e-3), {per_call:?}/call"));
}

fn ac2(r: &mut Report) {
    let reps = 1000;
    let (g, elapsed) = timed(|| {
        let mut g = 0.0;
        for _ in 0..reps {
            g = giant_component_fraction(std::hint::black_box(2.8)).unwrap();
        }
        g
    });
    let per_call = elapsed / reps;
    let size = (1090.0 * g).round();
    let pass = (g - 0.924975).abs() <= 1e-4 && size == 1008.0 && per_call < Duration::from_millis(1);
    r.record("AC2", pass, true, format!("giant fraction(2.8) = {g:.6} (target 0.924975 +/- 1e-4), 1090*gamma -> {size}, {per_call:?}/call"));
}

fn ac3(r: &mut Report) {
    let trials = 100_000;
    let ((elementwise, printed, states), elapsed) = timed(|| {
        let per_chain: Vec<(usize, usize, usize)> = (0..50u64)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(3003, c);
                let t = rng.random_range(1..=8);
                let a = rng.random_range(1..=3);
                let chain = random_chain(&mut rng, t, a);
                let good = absorption_stats_with(&chain, VarianceForm::Elementwise).unwrap();
                let bad = absorption_stats_with(&chain, VarianceForm::InnerProduct).unwrap();
                let (mut ok_good, mut ok_bad) = (0, 0);
                for x in 0..t {
                    let m = moments(&chain_samples(&chain, x, child_seed(3003, &[c]), trials));
                    let within = |mu: f64, var: f64| {
                        (m.mean - mu).abs() <= 4.0 * m.mean_se && (m.variance - var).abs() <= 4.0 * m.variance_se
                    };
                    ok_good += within(good.mean[x], good.variance[x]) as usize;
                    ok_bad += within(bad.mean[x], bad.variance[x]) as usize;
                }
                (ok_good, ok_bad, t)
            })
            .collect();
        per_chain.iter().fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    });
    let frac_good = elementwise as f64 / states as f64;
    let frac_bad = printed as f64 / states as f64;
    let pass = frac_good >= 0.95 && frac_bad < 0.95 && elapsed < Duration::from_secs(120);
    r.record(
        "AC3",
        pass,
        true,
        format!(
            "50 chains / {states} states: elementwise variance within 4 SE on {:.1}%, inner-product form on {:.1}% (must be < 95%), {elapsed:.1?}",
            100.0 * frac_good,
            100.0 * frac_bad
        ),
    );
}

fn test_graphs() -> Vec<Graph> {
    (0..20u64)
        .map(|s| {
            let mut rng = stream_rng(4004, s);
            let n = rng.random_range(8..=60);
            let p = (3.0 + 3.0 * rng.random::<f64>()) / n as f64;
            connected_graph(n, p.min(0.9), child_seed(4004, &[s]))
        })
        .collect()
}

fn ac4(r: &mut Report, graphs: &[Graph]) {
    let ((ok, total, worst), elapsed) = timed(|| {
        let mut ok = 0;
        let mut total = 0;
        let mut worst: f64 = 0.0;
        for (i, g) in graphs.iter().enumerate() {
            let profile = DegreeProfile::new(g).unwrap();
            let transient = profile.transient_nodes().len();
            for &beta in &[0.0, 1.0, 2.0] {
                let chain = build_full_chain(g, beta).unwrap();
                let stats = absorption_stats(&chain).unwrap();
                let exact = aggregate(&stats, &vec![1.0 / transient as f64; transient]).unwrap();
                let run = simulate_brw(g, &WalkConfig { beta, seed: i as u64, trials: 10_000, ..Default::default() }).unwrap();
                let z = (run.summary.mean - exact.mean).abs() / run.summary.stderr;
                worst = worst.max(z);
                ok += (z <= 4.0) as usize;
                total += 1;
            }
        }
        (ok, total, worst)
    });
    let pass = ok == total && elapsed < Duration::from_secs(300);
    r.record("AC4", pass, true, format!("full chain vs simulation: {ok}/{total} within 4 SE (worst {worst:.2} SE), {elapsed:.1?}"));
}

fn ac5(r: &mut Report, graphs: &[Graph]) {
    let lollipop = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
    let star = Graph::from_edges(6, (1..6).map(|v| (0, v))).unwrap();
    let mut worst: f64 = 0.0;
    let (_, elapsed) = timed(|| {
        for g in graphs.iter().chain([&lollipop, &star]) {
            let profile = DegreeProfile::new(g).unwrap();
            let jt = ConditionalDegreeMatrix::new(&JointDegreeMatrix::new(g, &profile)).unwrap();
            let bar = averaged_matrix(g, 0.0).unwrap();
            let tilde = approximate_matrix(&jt, 0.0, DEFAULT_TERM_BUDGET).unwrap();
            for i in 0..jt.size() {
                for j in 0..jt.size() {
                    worst = worst.max((bar.at(i, j) - jt.at(i, j)).abs()).max((tilde.at(i, j) - jt.at(i, j)).abs());
                }
            }
        }
    });
    r.record("AC5", worst <= 1e-10, true, format!("zero-bias collapse on 22 graphs: max deviation {worst:.2e} (tol 1e-10), {elapsed:.1?}"));
}

fn ac6(r: &mut Report) {
    let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
    let jt = ConditionalDegreeMatrix::new(&JointDegreeMatrix::new(&g, &DegreeProfile::new(&g).unwrap())).unwrap();
    let m = approximate_matrix(&jt, 1.0, DEFAULT_TERM_BUDGET).unwrap();
    let v = m.get(2, 3).unwrap();
    r.record("AC6", (v - 0.55).abs() <= 1e-12, true, format!("lollipop approximate entry (2 -> 3) at beta=1 = {v:.15} (target 0.55 +/- 1e-12)"));
}

fn ac7(r: &mut Report) {
    let ((ok, total, worst), elapsed) = timed(|| {
        let cases: Vec<(u64, usize, f64)> = (0..4u64).flat_map(|c| [(c, 6, 0.7), (c, 4, 3.0)]).collect();
        let results: Vec<(usize, usize, f64)> = cases
            .par_iter()
            .map(|&(c, k, beta)| {
                let mut rng = stream_rng(7007, c * 10 + k as u64);
                let jt = random_conditional(&mut rng, (1..=k).collect());
                let m = approximate_matrix(&jt, beta, DEFAULT_TERM_BUDGET).unwrap();
                let (mut ok, mut total, mut worst): (usize, usize, f64) = (0, 0, 0.0);
                for i in 0..jt.size() {
                    let (mean, se) = multinomial_row_estimate(&jt, i, beta, 1_000_000, &mut rng);
                    for j in 0..jt.size() {
                        let diff = (m.at(i, j) - mean[j]).abs();
                        if se[j] > 0.0 {
                            worst = worst.max(diff / se[j]);
                        }
                        ok += (diff <= 4.0 * se[j] + 1e-12) as usize;
                        total += 1;
                    }
                }
                (ok, total, worst)
            })
            .collect();
        results.iter().fold((0, 0, 0.0f64), |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)))
    });
    let pass = ok == total && elapsed < Duration::from_secs(60);
    r.record("AC7", pass, true, format!("approximate matrix vs 1e6 multinomial draws: {ok}/{total} entries within 4 SE (worst {worst:.2} SE), {elapsed:.1?}"));
}

fn sorted_degrees(g: &Graph) -> Vec<usize> {
    let mut d: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    d.sort_unstable();
    d
}

fn ac8(r: &mut Report) {
    let ((summary, pass), elapsed) = timed(|| {
        let mut parts = Vec::new();
        let mut pass = true;
        for &target in &[-0.5, 0.5] {
            let (mut hits, mut degrees_ok, mut shift_ok, mut worst_shift) = (0, 0, 0, 0.0f64);
            for seed in 0..10u64 {
                let g = generate_er(&ErSpec { n: 100, p: 0.05, seed }).unwrap();
                let out = rewire_to_target(&g, &RewireConfig { target, seed: child_seed(8008, &[seed]), ..Default::default() }).unwrap();
                hits += ((out.achieved - target).abs() <= 0.02) as usize;
                degrees_ok += (sorted_degrees(&out.graph) == sorted_degrees(&g)) as usize;
                let joined = reconnect_components(&out.graph, child_seed(8008, &[seed, 1]));
                let shift = (assortativity(&joined).unwrap() - out.achieved).abs();
                worst_shift = worst_shift.max(shift);
                shift_ok += (shift <= 0.05) as usize;
            }
            pass &= hits >= 8 && degrees_ok == 10 && shift_ok == 10;
            parts.push(format!(
                "target {target:+}: {hits}/10 within 0.02, degrees kept {degrees_ok}/10, reconnect shift <= 0.05 on {shift_ok}/10 (max {worst_shift:.4})"
            ));
        }
        (parts.join("; "), pass)
    });
    r.record("AC8", pass && elapsed < Duration::from_secs(120), true, format!("{summary}, {elapsed:.1?}"));
}

fn run_study() -> (AlphaStudy, Duration) {
    timed(|| {
        alpha_study(&ExperimentPlan {
            seed: 9009,
            ..Default::default()
        })
        .unwrap()
    })
}

fn ac9(r: &mut Report, study: &AlphaStudy, elapsed: Duration) {
    let runs_for = |t: f64| study.runs.iter().filter(move |run| run.target == t);
    let brw: Vec<f64> = runs_for(0.5).flat_map(|run| run.optimal_times().iter().map(|&x| x as f64)).collect();
    let base: Vec<f64> = runs_for(0.5).flat_map(|run| run.sweep.no_r_n_times.iter().map(|&x| x as f64)).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let test = welch_t_test(&brw, &base).unwrap();
    let assortative_ok = mean(&brw) < mean(&base) && test.p_value < 0.05;
    let dominated = runs_for(-0.5)
        .filter(|run| {
            let b = run.sweep.no_r_n.unwrap().mean;
            run.sweep.points.iter().all(|p| p.brw.mean >= b)
        })
        .count();
    let pass = assortative_ok && dominated >= 8 && elapsed < Duration::from_secs(1800);
    r.record(
        "AC9",
        pass,
        true,
        format!(
            "alpha_t=+0.5: optimal BRW mean {:.3} vs no-r-n {:.3} (Welch t={:.2}, p={:.3e}); alpha_t=-0.5: BRW >= no-r-n at every beta on {dominated}/10 graphs; study {elapsed:.1?}",
            mean(&brw),
            mean(&base),
            test.t,
            test.p_value
        ),
    );
}

fn ac10(r: &mut Report, study: &AlphaStudy) {
    let x: Vec<f64> = study.targets.iter().map(|t| t.alpha_t).collect();
    let y: Vec<f64> = study.targets.iter().map(|t| t.beta_star).collect();
    let c = spearman(&x, &y, 0.95).unwrap();
    let listing: Vec<String> = study.targets.iter().map(|t| format!("{:+.2}:{:.2}", t.alpha_t, t.beta_star)).collect();
    r.record(
        "AC10",
        c.rho > 0.0,
        false,
        format!("Spearman(alpha_t, mean beta*) = {:.3}, 95% CI [{:.3}, {:.3}] (reported, not gated); {}", c.rho, c.lower, c.upper, listing.join(" ")),
    );
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn ac11(r: &mut Report) {
    let bin = env!("CARGO_BIN_EXE_maxdeg");
    let fixture = tempfile::tempdir().unwrap();
    let graph = fixture.path().join("g.txt");
    fs::write(&graph, connected_graph(40, 0.1, 11).to_edge_list()).unwrap();
    let g = graph.to_str().unwrap();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("generate", vec!["generate", "--n", "200", "--lambda", "3", "--giant-only"]),
        ("rewire", vec!["rewire", "--in", g, "--target-alpha", "0.3", "--reconnect"]),
        ("stats", vec!["stats", "--in", g]),
        ("sweep", vec!["sweep", "--in", g, "--trials", "100", "--beta-step", "1", "--trials-out"]),
        ("sweep-json", vec!["sweep", "--in", g, "--trials", "100", "--beta-step", "2", "--format", "json"]),
        ("alpha-study", vec!["alpha-study", "--targets", "-0.3,0.3", "--graphs", "2", "--n", "40", "--p", "0.12", "--beta-step", "2", "--trials", "50"]),
        ("model-compare", vec!["model-compare", "--in", g, "--trials", "100", "--beta-step", "4"]),
    ];
    let ((ok, notes), elapsed) = timed(|| {
        let mut ok = 0;
        let mut notes = Vec::new();
        for (name, args) in &commands {
            let outputs: Vec<(Vec<(String, Vec<u8>)>, Option<i32>)> = (0..2)
                .map(|_| {
                    let dir = tempfile::tempdir().unwrap();
                    let status = Command::new(bin)
                        .args(args)
                        .args(["--seed", "17", "--out-dir"])
                        .arg(dir.path())
                        .output()
                        .unwrap();
                    (snapshot(dir.path()), status.status.code())
                })
                .collect();
            let same = outputs[0] == outputs[1] && !outputs[0].0.is_empty();
            let code = outputs[0].1;
            if same && matches!(code, Some(0) | Some(2)) {
                ok += 1;
            } else {
                notes.push(format!("{name} (exit {code:?}, identical {same})"));
            }
        }
        (ok, notes)
    });
    let detail = if notes.is_empty() { String::new() } else { format!("; differing: {}", notes.join(", ")) };
    r.record(
        "AC11",
        ok == commands.len(),
        true,
        format!("{ok}/{} CLI invocations byte-identical across reruns{detail}, {elapsed:.1?}", commands.len()),
    );
}

fn main() {
    // `cargo test -- <filter>` style arguments are accepted and ignored
    let mut r = Report { failed: Vec::new() };
    ac1(&mut r);
    ac2(&mut r);
    ac3(&mut r);
    let graphs = test_graphs();
    ac4(&mut r, &graphs);
    ac5(&mut r, &graphs);
    ac6(&mut r);
    ac7(&mut r);
    ac8(&mut r);
    let (study, study_time) = run_study();
    ac9(&mut r, &study, study_time);
    ac10(&mut r, &study);
    ac11(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all gated criteria passed");
    } else {
        println!("acceptance: failed {}", r.failed.join(", "));
        std::process::exit(1);
    }
}
