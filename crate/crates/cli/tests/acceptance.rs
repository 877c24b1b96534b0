//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (uncaptured) and then asserts the same condition.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use evolsm::config::ExperimentConfig;
use evolsm::env::{EpisodeEnd, TaskId};
use evolsm::harness::{ablation_cells, baseline_reward, master_seeds, mean_std, run_ablation, CellResult, SeedRun};
use evolsm::plasticity::{bcm_phi, da_bcm_raw, update_theta, update_trace, PlasticityParams};
use evolsm::rank::separation_property;
use evolsm::seed;
use evolsm::snn::SpikeStateMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng as _;
use tempfile::TempDir;

const SEEDS: usize = 10;

// Cell order from `ablation_cells`.
const STDP_STDP: usize = 0;
const UNEVOLVED: usize = 1;
const NONE_DA: usize = 2;
const STDP_DA: usize = 3;
const FULL: usize = 4;

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n} {name}: {verdict} ({detail})");
}

struct Ablation {
    results: Vec<CellResult>,
    runs: Vec<SeedRun>,
    elapsed: Duration,
    baseline: Vec<f64>,
}

impl Ablation {
    fn stats(&self) -> Vec<(f64, f64)> {
        self.results.iter().map(CellResult::mean_std).collect()
    }

    fn summary(&self) -> String {
        self.results
            .iter()
            .zip(self.stats())
            .map(|(r, (m, s))| format!("{} {m:.2}+-{s:.2}", r.cell.label()))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn run(task: TaskId) -> Ablation {
    let cfg = ExperimentConfig::for_task(task);
    let seeds = master_seeds(0, SEEDS);
    let start = Instant::now();
    let (results, runs) = run_ablation(&cfg, &ablation_cells(), &seeds).expect("ablation");
    let elapsed = start.elapsed();
    let baseline = seeds.iter().map(|&m| baseline_reward(&cfg, m).expect("baseline")).collect();
    Ablation {
        results,
        runs,
        elapsed,
        baseline,
    }
}

fn ablation(task: TaskId) -> &'static Ablation {
    static TMAZE: OnceLock<Ablation> = OnceLock::new();
    static FLAPPY: OnceLock<Ablation> = OnceLock::new();
    match task {
        TaskId::TMaze => TMAZE.get_or_init(|| run(task)),
        TaskId::Flappy => FLAPPY.get_or_init(|| run(task)),
    }
}

fn strictly_ordered(stats: &[(f64, f64)]) -> bool {
    let order = [FULL, STDP_DA, NONE_DA, UNEVOLVED, STDP_STDP];
    order.windows(2).all(|w| stats[w[0]].0 > stats[w[1]].0)
}

#[test]
fn c1_tmaze_ablation_ordering() {
    let a = ablation(TaskId::TMaze);
    let s = a.stats();
    let ordered = strictly_ordered(&s);
    let gap = s[FULL].0 - s[STDP_STDP].0 >= 5.0 * s[FULL].1;
    let stdp_near_zero = s[STDP_STDP].0.abs() <= 3.0 * s[STDP_STDP].1;
    let fast = a.elapsed < Duration::from_secs(600);
    let pass = ordered && gap && stdp_near_zero && fast;
    let detail = format!(
        "ordered {ordered}, gap {gap}, stdp+stdp near 0 {stdp_near_zero}, {:.0?}; {}",
        a.elapsed,
        a.summary()
    );
    report(1, "T-maze ablation ordering", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn c2_flappy_ablation_ordering() {
    let a = ablation(TaskId::Flappy);
    let s = a.stats();
    let ordered = strictly_ordered(&s);
    let stdp_negative = s[STDP_STDP].0 < 0.0;
    let fast = a.elapsed < Duration::from_secs(900);
    let pass = ordered && stdp_negative && fast;
    let detail = format!(
        "ordered {ordered}, stdp+stdp negative {stdp_negative}, {:.0?}; {}",
        a.elapsed,
        a.summary()
    );
    report(2, "Flappy Bird ablation ordering", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn c3_beats_q_learning() {
    let mut pass = true;
    let mut detail = Vec::new();
    for task in [TaskId::TMaze, TaskId::Flappy] {
        let a = ablation(task);
        let (full, _) = a.stats()[FULL];
        let (q, q_std) = mean_std(&a.baseline);
        pass &= full > q;
        detail.push(format!("{task}: model {full:.2} vs q-learning {q:.2}+-{q_std:.2}"));
    }
    let detail = detail.join("; ");
    report(3, "beats tabular Q-learning", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn c4_evolution_is_monotone() {
    let mut bad = Vec::new();
    let mut checked = 0;
    for task in [TaskId::TMaze, TaskId::Flappy] {
        for run in &ablation(task).runs {
            let best = run.evolution.as_ref().expect("evolved cells present").record.best();
            checked += 1;
            if !best.windows(2).all(|w| w[0] <= w[1]) {
                bad.push(format!("{task} seed {}: {best:?}", run.master));
            }
        }
    }
    let pass = bad.is_empty() && checked == 2 * SEEDS;
    let detail = format!("{checked} evolutions, {} non-monotone {bad:?}", bad.len());
    report(4, "best separation never decreases", pass, &detail);
    assert!(pass, "{detail}");
}

fn rational_rank(rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&b| if b == 1 { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] / &m[rank][c];
                for k in c..cols {
                    let d = &f * &m[rank][k];
                    m[r][k] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn c5_rank_matches_oracle() {
    let mut rng = seed::rng(555, &[]);
    let mut mismatches = 0;
    for case in 0..200 {
        let rows = rng.gen_range(1..=20);
        let cols = rng.gen_range(1..=20);
        let density = [0.15, 0.35, 0.5, 0.75][case % 4];
        let m: Vec<Vec<u8>> = (0..rows)
            .map(|_| (0..cols).map(|_| u8::from(rng.gen_bool(density))).collect())
            .collect();
        let s = SpikeStateMatrix::from_rows(&m).unwrap();
        if separation_property(&s) != rational_rank(&m) {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    let detail = format!("200 matrices, {mismatches} mismatches");
    report(5, "rank oracle", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn c6_reversal_learning() {
    let a = ablation(TaskId::TMaze);
    let mut passing = 0;
    let mut per_seed = Vec::new();
    for run in &a.runs {
        let (mut events, mut ok) = (0, 0);
        for rec in &run.records[FULL] {
            let ends: Vec<(usize, EpisodeEnd, bool)> = rec
                .steps
                .iter()
                .enumerate()
                .filter_map(|(t, s)| s.end.map(|e| (t, e, s.reversed)))
                .collect();
            for (i, _) in ends.iter().enumerate().filter(|(_, e)| e.2) {
                events += 1;
                let poison = ends[i + 1..]
                    .iter()
                    .take(20)
                    .filter(|e| e.1 == EpisodeEnd::Poison)
                    .count();
                ok += usize::from(poison <= 3);
            }
        }
        // A seed with no reversal shows nothing about reversal learning.
        let seed_pass = events > 0 && ok == events;
        passing += usize::from(seed_pass);
        per_seed.push(format!("{ok}/{events}"));
    }
    let pass = passing * 10 >= a.runs.len() * 8;
    let detail = format!(
        "{passing}/{} seeds pass; events ok per seed {}",
        a.runs.len(),
        per_seed.join(" ")
    );
    report(6, "reversal learning", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn c7_plasticity_numerics() {
    let p = PlasticityParams::default();
    let mut rng = seed::rng(77, &[]);
    let mut worst_decay: f64 = 0.0;
    for _ in 0..1000 {
        let e0 = rng.gen_range(0.0..20.0);
        let k = rng.gen_range(0..60);
        let mut e = e0;
        for _ in 0..k {
            e = update_trace(e, false, p.tau_bcm);
        }
        worst_decay = worst_decay.max((e - e0 * p.tau_bcm.powi(k)).abs());
    }
    let mut worst_ema: f64 = 0.0;
    for c in [0.0, 0.3, 1.0, 1.7, 5.0, 10.0] {
        let mut theta = 0.0;
        for _ in 0..5000 {
            theta = update_theta(theta, c, p.theta_window);
        }
        worst_ema = worst_ema.max((theta - c * c).abs());
    }
    let mut worst_gate: f64 = 0.0;
    let mut sign_violations = 0u64;
    for _ in 0..1_000_000 {
        let m = rng.gen_range(0.0..8.0);
        let pre = rng.gen_range(1e-6..12.0);
        let post = rng.gen_range(1e-6..12.0);
        let theta = rng.gen_range(0.0..100.0);
        let da = rng.gen_range(-100.0..10.0);
        let plain = m + p.learning_rate * (bcm_phi(post, theta) * pre - p.epsilon * m);
        let gated = da_bcm_raw(m, pre, post, theta, da, &p);
        // Relative to the update's magnitude: both sides round at that scale.
        let scale = 1f64.max(gated.abs()).max((da * (plain - m)).abs());
        worst_gate = worst_gate.max((gated - (m + da * (plain - m))).abs() / scale);
        let hebbian = da_bcm_raw(m, pre, post, theta, 1.0, &p) - (m - p.learning_rate * p.epsilon * m);
        let expected = (post - theta).signum();
        if post != theta && hebbian.signum() != expected {
            sign_violations += 1;
        }
    }
    let pass = worst_decay <= 1e-6 && worst_ema <= 1e-6 && worst_gate <= 1e-12 && sign_violations == 0;
    let detail = format!(
        "decay err {worst_decay:.1e}, ema err {worst_ema:.1e}, gate rel err {worst_gate:.1e}, sign violations {sign_violations}/1000000"
    );
    report(7, "plasticity numerics", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn c8_parameter_accounting() {
    let a = ablation(TaskId::TMaze);
    let mut max_density: f64 = 0.0;
    let (mut lo, mut hi) = (usize::MAX, 0);
    for run in &a.runs {
        for s in &run.evolution.as_ref().expect("evolved").survivors {
            max_density = max_density.max(s.chromosome.density());
        }
        for rec in &run.records[FULL] {
            lo = lo.min(rec.parameters);
            hi = hi.max(rec.parameters);
        }
    }
    let pass = max_density <= 0.02 && lo >= 50 && hi <= 500;
    let detail = format!("max density {max_density:.4}, parameters in [{lo}, {hi}]");
    report(8, "parameter accounting", pass, &detail);
    assert!(pass, "{detail}");
}

fn cli(args: &[&str], out: &Path, threads: usize) -> bool {
    Command::new(env!("CARGO_BIN_EXE_evolsm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

#[test]
fn c9_cli_determinism() {
    let small = ["--generations", "6", "--gth", "3", "--pop", "16", "--nopt", "4"];
    let with = |head: &[&'static str]| -> Vec<&'static str> { head.iter().chain(&small).copied().collect() };
    let cases: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            with(&["evolve", "--task", "tmaze", "--seed", "21"]),
            vec!["fitness_per_generation.csv", "survivor_0.chrom", "survivor_3.chrom", "input_projection.weights"],
        ),
        (
            with(&["run", "--task", "flappy", "--seed", "8", "--horizon", "300"]),
            vec!["reward_timeseries.csv", "episode_trace.csv"],
        ),
        (
            with(&["run", "--task", "tmaze", "--seed", "8", "--horizon", "200", "--structure", "unevolved"]),
            vec!["reward_timeseries.csv", "episode_trace.csv"],
        ),
        (
            with(&["ablate", "--task", "tmaze", "--seed", "3", "--seeds", "2", "--horizon", "100"]),
            vec!["ablation_summary.csv", "ablation_runs.csv"],
        ),
        (
            vec!["baseline", "--task", "tmaze", "--seeds", "3"],
            vec!["baseline_runs.csv"],
        ),
    ];
    let mut failures = Vec::new();
    for (args, files) in &cases {
        let dirs: Vec<TempDir> = (0..3).map(|_| TempDir::new().unwrap()).collect();
        let ran = [1, 4, 4].iter().zip(&dirs).all(|(&t, d)| cli(args, d.path(), t));
        if !ran {
            failures.push(format!("{} failed to run", args[0]));
            continue;
        }
        for name in files {
            let first = std::fs::read(dirs[0].path().join(name)).unwrap_or_default();
            let same = !first.is_empty()
                && dirs[1..]
                    .iter()
                    .all(|d| std::fs::read(d.path().join(name)).unwrap_or_default() == first);
            if !same {
                failures.push(format!("{} {name}", args[0]));
            }
        }
    }
    let pass = failures.is_empty();
    let detail = format!("{} invocations x 3 (1 and 4 threads), differing: {failures:?}", cases.len());
    report(9, "CLI determinism", pass, &detail);
    assert!(pass, "{detail}");
}
