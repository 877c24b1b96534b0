//! Experiment orchestration: building agents, running them, the ablation
//! matrix, the Q-learning baseline and CSV artifacts.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::agent::{lsm_policy, AgentParams, LsmAgent};
use crate::config::{ExperimentConfig, Structure};
use crate::env::{encode_observation, q_learning_baseline, EpisodeEnd, Environment, FlappyWorld, Observation, TMazeWorld, TaskId};
use crate::error::{Error, Result};
use crate::evolution::{evolve, Chromosome, EvolutionOutcome, FitnessContext, Individual};
use crate::plasticity::Rule;
use crate::seed::{self, stream};
use crate::topology::{init_input_projection, init_liquid, init_readout, InputProjection, LiquidWeights};

pub fn make_env(cfg: &ExperimentConfig, seed: u64) -> Result<Box<dyn Environment>> {
    Ok(match cfg.task {
        TaskId::TMaze => Box::new(TMazeWorld::new(cfg.tmaze, seed)?),
        TaskId::Flappy => Box::new(FlappyWorld::new(cfg.flappy, seed)?),
    })
}

/// Per-seed wiring shared by every agent of a task: input projection and the probe ensemble.
#[derive(Debug, Clone)]
pub struct TaskSetup {
    pub projection: InputProjection,
    pub context: FitnessContext,
    pub n_actions: usize,
}

pub fn task_setup(cfg: &ExperimentConfig, master: u64) -> Result<TaskSetup> {
    cfg.validate()?;
    let env = make_env(cfg, seed::derive(master, &[stream::ENV]))?;
    let ensemble = env
        .observation_set()
        .iter()
        .map(encode_observation)
        .collect::<Result<Vec<_>>>()?;
    let projection = init_input_projection(env.n_inputs(), cfg.grid.neurons(), &cfg.topology, master)?;
    let context = FitnessContext::new(
        &ensemble,
        &projection,
        cfg.input_gain,
        cfg.evolution.probe_window,
        cfg.topology,
        cfg.lif,
    )?;
    Ok(TaskSetup {
        projection,
        context,
        n_actions: env.n_actions(),
    })
}

pub fn evolve_task(cfg: &ExperimentConfig, setup: &TaskSetup, master: u64) -> Result<EvolutionOutcome> {
    evolve(&cfg.evolution, cfg.grid, &setup.context, seed::derive(master, &[stream::EVOLUTION]))
}

/// Liquid of individual `k`: the `k`-th survivor, or a fresh random liquid.
pub fn liquid_for(cfg: &ExperimentConfig, survivors: Option<&[Individual]>, k: usize, master: u64) -> Result<LiquidWeights> {
    match cfg.structure {
        Structure::Evolved => {
            let survivors = survivors.ok_or_else(|| Error::Config("evolved structure needs evolved chromosomes".into()))?;
            let ind = survivors
                .get(k)
                .ok_or_else(|| Error::Config(format!("no evolved chromosome for individual {k}")))?;
            Ok(ind.chromosome.to_weights(&cfg.topology))
        }
        Structure::Unevolved => init_liquid(&cfg.grid, &cfg.topology, seed::derive(master, &[stream::UNEVOLVED, k as u64])),
    }
}

/// Probes the liquid to wire its readout and wraps everything into an agent.
pub fn build_agent(cfg: &ExperimentConfig, setup: &TaskSetup, liquid: &LiquidWeights, k: usize, master: u64) -> Result<LsmAgent> {
    let chrom = Chromosome::from_weights(cfg.grid, cfg.topology.d_th, liquid)?;
    let probe = setup.context.probe(&chrom)?;
    let readout = init_readout(&probe, setup.n_actions, cfg.topology.beta, seed::derive(master, &[stream::READOUT, k as u64]))?;
    LsmAgent::new(
        liquid,
        &readout,
        setup.projection.clone(),
        AgentParams {
            lif: cfg.lif,
            plasticity: cfg.plasticity,
            input_gain: cfg.input_gain,
            liquid_rule: cfg.liquid_rule,
            readout_rule: cfg.readout_rule,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub observation: Observation,
    pub state: usize,
    pub action: usize,
    pub da: f64,
    pub end: Option<EpisodeEnd>,
    /// The world was reversed before the next episode began.
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub individual: usize,
    pub steps: Vec<StepLog>,
    /// Plastic parameter count of the network that produced the run.
    pub parameters: usize,
}

impl RunRecord {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.da).collect()
    }

    pub fn total(&self) -> f64 {
        self.steps.iter().map(|s| s.da).sum()
    }

    pub fn episode_ends(&self) -> Vec<EpisodeEnd> {
        self.steps.iter().filter_map(|s| s.end).collect()
    }

    /// Number of steps after which the world was reversed.
    pub fn reversals(&self) -> usize {
        self.steps.iter().filter(|s| s.reversed).count()
    }
}

/// Drives `agent` in `env` for `horizon` steps, learning after every step.
pub fn run_agent(agent: &mut LsmAgent, env: &mut dyn Environment, horizon: usize, rng: &mut seed::Rng) -> Result<Vec<StepLog>> {
    if env.n_actions() != agent.n_readout() {
        return Err(Error::Config(format!(
            "{} readout neurons for {} actions",
            agent.n_readout(),
            env.n_actions()
        )));
    }
    let mut steps = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let observation = env.observation();
        let state = env.state_index();
        let window = agent.present(&observation)?;
        let action = lsm_policy(&window.counts, rng);
        let t = env.step(action)?;
        agent.learn(t.da);
        let reversed = t.end.is_some() && env.begin_next_episode();
        steps.push(StepLog {
            observation,
            state,
            action,
            da: t.da,
            end: t.end,
            reversed,
        });
    }
    Ok(steps)
}

/// One agent's full run; every random stream depends only on `(master, k)`.
pub fn run_individual(cfg: &ExperimentConfig, setup: &TaskSetup, survivors: Option<&[Individual]>, k: usize, master: u64) -> Result<RunRecord> {
    let liquid = liquid_for(cfg, survivors, k, master)?;
    let mut agent = build_agent(cfg, setup, &liquid, k, master)?;
    let parameters = agent.count_parameters();
    let mut env = make_env(cfg, seed::derive(master, &[stream::ENV, k as u64]))?;
    let mut rng = seed::rng(master, &[stream::POLICY, k as u64]);
    let steps = run_agent(&mut agent, env.as_mut(), cfg.horizon, &mut rng)?;
    Ok(RunRecord {
        individual: k,
        steps,
        parameters,
    })
}

/// Runs `n_opt` individuals of one configuration in parallel.
pub fn run_cell(cfg: &ExperimentConfig, setup: &TaskSetup, survivors: Option<&[Individual]>, master: u64) -> Result<Vec<RunRecord>> {
    (0..cfg.evolution.n_opt)
        .into_par_iter()
        .map(|k| run_individual(cfg, setup, survivors, k, master))
        .collect()
}

/// `R = sum_i sum_t DA_t^i / N`.
pub fn population_reward(records: &[RunRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("run records"));
    }
    Ok(records.iter().map(RunRecord::total).sum::<f64>() / records.len() as f64)
}

/// One row of the ablation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub structure: Structure,
    pub liquid_rule: Rule,
    pub readout_rule: Rule,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{} {}+{}", self.structure, self.liquid_rule, self.readout_rule)
    }

    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            structure: self.structure,
            liquid_rule: self.liquid_rule,
            readout_rule: self.readout_rule,
            ..cfg.clone()
        }
    }
}

/// The ablation rows, from the unsupervised baseline to the full model.
pub fn ablation_cells() -> Vec<Cell> {
    let cell = |structure, liquid_rule, readout_rule| Cell {
        structure,
        liquid_rule,
        readout_rule,
    };
    vec![
        cell(Structure::Evolved, Rule::Stdp, Rule::Stdp),
        cell(Structure::Unevolved, Rule::DaBcm, Rule::DaBcm),
        cell(Structure::Evolved, Rule::None, Rule::DaBcm),
        cell(Structure::Evolved, Rule::Stdp, Rule::DaBcm),
        cell(Structure::Evolved, Rule::DaBcm, Rule::DaBcm),
    ]
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    /// `(master seed, R)` per seed.
    pub runs: Vec<(u64, f64)>,
}

impl CellResult {
    pub fn mean_std(&self) -> (f64, f64) {
        mean_std(&self.runs.iter().map(|r| r.1).collect::<Vec<_>>())
    }
}

/// Everything one master seed produces for the ablation.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub master: u64,
    pub evolution: Option<EvolutionOutcome>,
    /// Records per cell, in the order of the cells passed in.
    pub records: Vec<Vec<RunRecord>>,
}

pub fn run_seed(cfg: &ExperimentConfig, cells: &[Cell], master: u64) -> Result<SeedRun> {
    let setup = task_setup(cfg, master)?;
    let evolution = if cells.iter().any(|c| c.structure == Structure::Evolved) {
        Some(evolve_task(cfg, &setup, master)?)
    } else {
        None
    };
    let survivors = evolution.as_ref().map(|e| e.survivors.as_slice());
    let records = cells
        .iter()
        .map(|cell| run_cell(&cell.apply(cfg), &setup, survivors, master))
        .collect::<Result<_>>()?;
    Ok(SeedRun {
        master,
        evolution,
        records,
    })
}

/// Master seeds `base, base + 1, ...`.
pub fn master_seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| base.wrapping_add(i)).collect()
}

pub fn run_ablation(cfg: &ExperimentConfig, cells: &[Cell], seeds: &[u64]) -> Result<(Vec<CellResult>, Vec<SeedRun>)> {
    if cells.is_empty() {
        return Err(Error::Empty("ablation cells"));
    }
    let runs = seeds.iter().map(|&m| run_seed(cfg, cells, m)).collect::<Result<Vec<_>>>()?;
    Ok((summarize(cells, &runs)?, runs))
}

pub fn summarize(cells: &[Cell], runs: &[SeedRun]) -> Result<Vec<CellResult>> {
    cells
        .iter()
        .enumerate()
        .map(|(c, &cell)| {
            let runs = runs
                .iter()
                .map(|r| Ok((r.master, population_reward(&r.records[c])?)))
                .collect::<Result<_>>()?;
            Ok(CellResult { cell, runs })
        })
        .collect()
}

/// `structure,liquid_rule,readout_rule,seeds,mean_R,std_R`.
pub fn ablation_summary_csv(results: &[CellResult]) -> String {
    let mut out = String::from("structure,liquid_rule,readout_rule,seeds,mean_R,std_R\n");
    for r in results {
        let (mean, std) = r.mean_std();
        let c = r.cell;
        writeln!(out, "{},{},{},{},{:?},{:?}", c.structure, c.liquid_rule, c.readout_rule, r.runs.len(), mean, std).unwrap();
    }
    out
}

/// `structure,liquid_rule,readout_rule,seed,R`.
pub fn ablation_runs_csv(results: &[CellResult]) -> String {
    let mut out = String::from("structure,liquid_rule,readout_rule,seed,R\n");
    for r in results {
        let c = r.cell;
        for (seed, value) in &r.runs {
            writeln!(out, "{},{},{},{},{:?}", c.structure, c.liquid_rule, c.readout_rule, seed, value).unwrap();
        }
    }
    out
}

/// Gaussian smoothing with a kernel truncated at three widths and renormalized at the edges.
pub fn gaussian_smooth(xs: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return xs.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    (0..xs.len() as isize)
        .map(|t| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (k, d) in (-radius..=radius).enumerate() {
                let s = t + d;
                if s >= 0 && (s as usize) < xs.len() {
                    acc += kernel[k] * xs[s as usize];
                    norm += kernel[k];
                }
            }
            acc / norm
        })
        .collect()
}

/// `step,raw,smoothed,cumulative_R`: population-mean dopamine per step and the running R.
pub fn reward_timeseries_csv(records: &[RunRecord], sigma: f64) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Empty("run records"));
    }
    let len = records.iter().map(|r| r.steps.len()).min().unwrap_or(0);
    let n = records.len() as f64;
    let raw: Vec<f64> = (0..len)
        .map(|t| records.iter().map(|r| r.steps[t].da).sum::<f64>() / n)
        .collect();
    let smooth = gaussian_smooth(&raw, sigma);
    let mut out = String::from("step,raw,smoothed,cumulative_R\n");
    let mut cumulative = 0.0;
    for t in 0..len {
        cumulative += raw[t];
        writeln!(out, "{},{:?},{:?},{:?}", t, raw[t], smooth[t], cumulative).unwrap();
    }
    Ok(out)
}

/// `individual,step,state,observation,action,da,cumulative_R,end`.
pub fn episode_trace_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("individual,step,state,observation,action,da,cumulative_R,end\n");
    for r in records {
        let mut cumulative = 0.0;
        for (t, s) in r.steps.iter().enumerate() {
            cumulative += s.da;
            let end = s.end.map(|e| e.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{},{:?},{:?},{}", r.individual, t, s.state, s.observation, s.action, s.da, cumulative, end).unwrap();
        }
    }
    out
}

/// Q-learning population reward for one master seed, over `n_opt` independent learners.
pub fn baseline_reward(cfg: &ExperimentConfig, master: u64) -> Result<f64> {
    cfg.validate()?;
    let totals = (0..cfg.evolution.n_opt)
        .into_par_iter()
        .map(|k| {
            let mut env = make_env(cfg, seed::derive(master, &[stream::ENV, k as u64]))?;
            let mut rng = seed::rng(master, &[stream::BASELINE, k as u64]);
            let rewards = q_learning_baseline(env.as_mut(), cfg.horizon, &cfg.qlearning, &mut rng)?;
            Ok(rewards.iter().sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(totals.iter().sum::<f64>() / totals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(rewards: &[f64]) -> RunRecord {
        RunRecord {
            individual: 0,
            steps: rewards
                .iter()
                .map(|&da| StepLog {
                    observation: Observation::Flappy(0),
                    state: 0,
                    action: 0,
                    da,
                    end: None,
                    reversed: false,
                })
                .collect(),
            parameters: 0,
        }
    }

    #[test]
    fn population_reward_examples() {
        assert_eq!(population_reward(&[record(&[1.0, 2.0]), record(&[3.0, 4.0])]).unwrap(), 5.0);
        assert_eq!(population_reward(&[record(&[0.0, 0.0])]).unwrap(), 0.0);
        assert_eq!(population_reward(&[record(&[1.5, -4.0, 2.0])]).unwrap(), -0.5);
        assert!(population_reward(&[]).is_err());
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn smoothing_preserves_constants() {
        let xs = vec![2.0; 30];
        for v in gaussian_smooth(&xs, 3.0) {
            assert!((v - 2.0).abs() < 1e-12);
        }
        assert_eq!(gaussian_smooth(&[1.0, 5.0], 0.0), vec![1.0, 5.0]);
    }

    #[test]
    fn evolved_cell_needs_chromosomes() {
        let cfg = ExperimentConfig::for_task(TaskId::TMaze);
        assert!(matches!(liquid_for(&cfg, None, 0, 1), Err(Error::Config(_))));
    }
}
