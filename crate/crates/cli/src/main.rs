use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use evolsm::config::{ExperimentConfig, Structure};
use evolsm::harness::{
    ablation_cells, ablation_runs_csv, ablation_summary_csv, baseline_reward, episode_trace_csv, evolve_task, master_seeds,
    mean_std, population_reward, reward_timeseries_csv, run_ablation, run_cell, task_setup,
};
use evolsm::textio::format_weights;

/// Evolved liquid state machines on T-maze and Flappy Bird.
#[derive(Parser)]
#[command(name = "evolsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve liquid structures and write the survivors.
    Evolve(Common),
    /// Run one ablation cell for one master seed.
    Run(Common),
    /// Run the full ablation matrix over several master seeds.
    Ablate(Common),
    /// Run the tabular Q-learning baseline over several master seeds.
    Baseline(Common),
}

#[derive(Args)]
struct Common {
    /// tmaze or flappy.
    #[arg(long)]
    task: Option<String>,
    /// Master seed; multi-seed commands use seed, seed + 1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Number of master seeds for `ablate` and `baseline`.
    #[arg(long)]
    seeds: Option<usize>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    gth: Option<usize>,
    #[arg(long)]
    rate: Option<f64>,
    /// Initial population size.
    #[arg(long)]
    pop: Option<usize>,
    /// Survivors kept for decision making.
    #[arg(long)]
    nopt: Option<usize>,
    #[arg(long)]
    structure: Option<String>,
    #[arg(long)]
    liquid_rule: Option<String>,
    #[arg(long)]
    readout_rule: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut text = match &self.config {
            Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            None => String::new(),
        };
        if let Some(task) = &self.task {
            text.push_str(&format!("\ntask = {task}\n"));
        }
        let mut cfg = ExperimentConfig::parse(&text)?;
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("seeds", self.seeds.map(|v| v.to_string())),
            ("generations", self.generations.map(|v| v.to_string())),
            ("g_th", self.gth.map(|v| v.to_string())),
            ("rate", self.rate.map(|v| v.to_string())),
            ("n_ini", self.pop.map(|v| v.to_string())),
            ("n_opt", self.nopt.map(|v| v.to_string())),
            ("structure", self.structure.clone()),
            ("liquid_rule", self.liquid_rule.clone()),
            ("readout_rule", self.readout_rule.clone()),
            ("horizon", self.horizon.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("override `{kv}` is not key=value");
            };
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        write(&self.out, "config.txt", &cfg.to_text())?;
        Ok(&self.out)
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn evolve(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let out = args.out_dir(&cfg)?;
    let setup = task_setup(&cfg, cfg.seed)?;
    let outcome = evolve_task(&cfg, &setup, cfg.seed)?;
    write(out, "fitness_per_generation.csv", &outcome.record.to_csv())?;
    write(out, "input_projection.weights", &format_weights(&setup.projection.w))?;
    for (k, ind) in outcome.survivors.iter().enumerate() {
        write(out, &format!("survivor_{k}.chrom"), &ind.chromosome.to_text())?;
    }
    let best = &outcome.survivors[0];
    println!(
        "{} generations, best separation {} at density {:.4}",
        outcome.record.generations.len() - 1,
        best.fitness.sp,
        best.chromosome.density()
    );
    Ok(())
}

fn run(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let out = args.out_dir(&cfg)?;
    let setup = task_setup(&cfg, cfg.seed)?;
    let outcome = match cfg.structure {
        Structure::Evolved => Some(evolve_task(&cfg, &setup, cfg.seed)?),
        Structure::Unevolved => None,
    };
    let survivors = outcome.as_ref().map(|o| o.survivors.as_slice());
    let records = run_cell(&cfg, &setup, survivors, cfg.seed)?;
    write(out, "reward_timeseries.csv", &reward_timeseries_csv(&records, cfg.smoothing_sigma)?)?;
    write(out, "episode_trace.csv", &episode_trace_csv(&records))?;
    println!(
        "{} {} {}+{}: R = {}",
        cfg.task,
        cfg.structure,
        cfg.liquid_rule,
        cfg.readout_rule,
        population_reward(&records)?
    );
    Ok(())
}

fn ablate(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let out = args.out_dir(&cfg)?;
    let (results, _) = run_ablation(&cfg, &ablation_cells(), &master_seeds(cfg.seed, cfg.seeds))?;
    write(out, "ablation_summary.csv", &ablation_summary_csv(&results))?;
    write(out, "ablation_runs.csv", &ablation_runs_csv(&results))?;
    for r in &results {
        let (mean, std) = r.mean_std();
        println!("{:28} {mean:10.2} +- {std:.2}", r.cell.label());
    }
    Ok(())
}

fn baseline(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let out = args.out_dir(&cfg)?;
    let seeds = master_seeds(cfg.seed, cfg.seeds);
    let values = seeds.iter().map(|&m| baseline_reward(&cfg, m)).collect::<evolsm::Result<Vec<f64>>>()?;
    let mut csv = String::from("seed,R\n");
    for (m, r) in seeds.iter().zip(&values) {
        csv.push_str(&format!("{m},{r:?}\n"));
    }
    write(out, "baseline_runs.csv", &csv)?;
    let (mean, std) = mean_std(&values);
    println!("{} q-learning: {mean:.2} +- {std:.2}", cfg.task);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Evolve(a) => evolve(&a),
        Command::Run(a) => run(&a),
        Command::Ablate(a) => ablate(&a),
        Command::Baseline(a) => baseline(&a),
    }
}
