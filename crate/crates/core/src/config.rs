//! Experiment configuration and its flat `key = value` file format.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors. Keys
//! not present keep their defaults, which depend on `task`.

use std::fmt;
use std::str::FromStr;

use crate::encoder::DEFAULT_INPUT_GAIN;
use crate::env::{FlappyParams, QLearningParams, TMazeParams, TaskId};
use crate::error::{Error, Result};
use crate::evolution::EvolutionParams;
use crate::plasticity::{PlasticityParams, Rule};
use crate::snn::LifParams;
use crate::topology::{LiquidGrid, TopologyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structure {
    Evolved,
    Unevolved,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Evolved => "evolved",
            Structure::Unevolved => "unevolved",
        })
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "evolved" => Ok(Structure::Evolved),
            "unevolved" => Ok(Structure::Unevolved),
            other => Err(Error::Config(format!("unknown structure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: TaskId,
    pub structure: Structure,
    pub liquid_rule: Rule,
    pub readout_rule: Rule,
    /// Environment decision steps per run, concatenated across episodes.
    pub horizon: usize,
    pub seed: u64,
    /// Master seeds per ablation cell.
    pub seeds: usize,
    /// Gaussian smoothing width, in steps, for the reward time series.
    pub smoothing_sigma: f64,
    pub input_gain: f64,
    pub lif: LifParams,
    pub grid: LiquidGrid,
    pub topology: TopologyParams,
    pub evolution: EvolutionParams,
    pub plasticity: PlasticityParams,
    pub tmaze: TMazeParams,
    pub flappy: FlappyParams,
    pub qlearning: QLearningParams,
}

impl ExperimentConfig {
    pub fn for_task(task: TaskId) -> Self {
        let (horizon, qlearning) = match task {
            TaskId::TMaze => (500, QLearningParams::tmaze()),
            TaskId::Flappy => (2000, QLearningParams::flappy()),
        };
        Self {
            task,
            structure: Structure::Evolved,
            liquid_rule: Rule::DaBcm,
            readout_rule: Rule::DaBcm,
            horizon,
            seed: 0,
            seeds: 10,
            smoothing_sigma: 5.0,
            input_gain: DEFAULT_INPUT_GAIN,
            lif: LifParams::default(),
            grid: LiquidGrid::default(),
            topology: TopologyParams::default(),
            evolution: EvolutionParams::default(),
            plasticity: PlasticityParams::default(),
            tmaze: TMazeParams::default(),
            flappy: FlappyParams::default(),
            qlearning,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be > 0".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be > 0".into()));
        }
        if !(self.input_gain > 0.0) {
            return Err(Error::Config("input_gain must be > 0".into()));
        }
        if !(self.smoothing_sigma >= 0.0) {
            return Err(Error::Config("smoothing_sigma must be >= 0".into()));
        }
        self.lif.validate()?;
        LiquidGrid::new(self.grid.width, self.grid.height)?;
        self.topology.validate()?;
        self.evolution.validate()?;
        self.plasticity.validate()?;
        self.tmaze.validate()?;
        self.flappy.validate()?;
        self.qlearning.validate()
    }

    /// Parses a config file. `task` is read first so that task-dependent
    /// defaults apply before the remaining keys override them.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            pairs.push((n + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let task = match pairs.iter().rev().find(|(_, k, _)| k == "task") {
            Some((_, _, v)) => v.parse()?,
            None => TaskId::TMaze,
        };
        let mut cfg = Self::for_task(task);
        for (line, k, v) in &pairs {
            cfg.set(k, v).map_err(|e| Error::Parse {
                line: *line,
                msg: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
        }
        let v = value;
        match key {
            // Task-dependent defaults are resolved by `parse`.
            "task" => self.task = v.parse()?,
            "structure" => self.structure = v.parse()?,
            "liquid_rule" => self.liquid_rule = v.parse()?,
            "readout_rule" => self.readout_rule = v.parse()?,
            "horizon" => self.horizon = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "seeds" => self.seeds = num(key, v)?,
            "smoothing_sigma" => self.smoothing_sigma = num(key, v)?,
            "input_gain" => self.input_gain = num(key, v)?,
            "tau_m" => self.lif.tau_m = num(key, v)?,
            "v_th" => self.lif.v_th = num(key, v)?,
            "v_reset" => self.lif.v_reset = num(key, v)?,
            "ticks_per_step" => self.lif.ticks_per_step = num(key, v)?,
            "grid_width" => self.grid.width = num(key, v)?,
            "grid_height" => self.grid.height = num(key, v)?,
            "lambda" => self.topology.lambda = num(key, v)?,
            "alpha" => self.topology.alpha = num(key, v)?,
            "d_th" => self.topology.d_th = num(key, v)?,
            "sparsity" => self.topology.sparsity = num(key, v)?,
            "beta" => self.topology.beta = num(key, v)?,
            "input_fan_out" => self.topology.input_fan_out = num(key, v)?,
            "n_ini" => self.evolution.n_ini = num(key, v)?,
            "n_opt" => self.evolution.n_opt = num(key, v)?,
            "offspring_per_individual" => self.evolution.offspring_per_individual = num(key, v)?,
            "g_th" => self.evolution.g_th = num(key, v)?,
            "generations" => self.evolution.generations = num(key, v)?,
            "rate" => self.evolution.rate = num(key, v)?,
            "probe_window" => self.evolution.probe_window = num(key, v)?,
            "density_cap" => self.evolution.density_cap = num(key, v)?,
            "epsilon" => self.plasticity.epsilon = num(key, v)?,
            "learning_rate" => self.plasticity.learning_rate = num(key, v)?,
            "w_min" => self.plasticity.w_min = num(key, v)?,
            "w_max" => self.plasticity.w_max = num(key, v)?,
            "tau_bcm" => self.plasticity.tau_bcm = num(key, v)?,
            "theta_window" => self.plasticity.theta_window = num(key, v)?,
            "stdp_a_plus" => self.plasticity.stdp.a_plus = num(key, v)?,
            "stdp_a_minus" => self.plasticity.stdp.a_minus = num(key, v)?,
            "stdp_tau_plus" => self.plasticity.stdp.tau_plus = num(key, v)?,
            "stdp_tau_minus" => self.plasticity.stdp.tau_minus = num(key, v)?,
            "corridor_len" => self.tmaze.corridor_len = num(key, v)?,
            "arm_len" => self.tmaze.arm_len = num(key, v)?,
            "energy" => self.tmaze.energy = num(key, v)?,
            "reversal_probability" => self.tmaze.reversal_probability = num(key, v)?,
            "reversal_streak" => self.tmaze.reversal_streak = num(key, v)?,
            "flappy_height" => self.flappy.height = num(key, v)?,
            "gap_half" => self.flappy.gap_half = num(key, v)?,
            "pipe_width" => self.flappy.pipe_width = num(key, v)?,
            "pipe_spacing" => self.flappy.pipe_spacing = num(key, v)?,
            "first_pipe" => self.flappy.first_pipe = num(key, v)?,
            "flap" => self.flappy.flap = num(key, v)?,
            "gravity" => self.flappy.gravity = num(key, v)?,
            "center_min" => self.flappy.center_min = num(key, v)?,
            "center_max" => self.flappy.center_max = num(key, v)?,
            "q_alpha" => self.qlearning.alpha = num(key, v)?,
            "q_gamma" => self.qlearning.gamma = num(key, v)?,
            "q_greedy" => self.qlearning.greedy = num(key, v)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a form [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let entries: Vec<(&str, String)> = vec![
            ("task", self.task.to_string()),
            ("structure", self.structure.to_string()),
            ("liquid_rule", self.liquid_rule.to_string()),
            ("readout_rule", self.readout_rule.to_string()),
            ("horizon", self.horizon.to_string()),
            ("seed", self.seed.to_string()),
            ("seeds", self.seeds.to_string()),
            ("smoothing_sigma", format!("{:?}", self.smoothing_sigma)),
            ("input_gain", format!("{:?}", self.input_gain)),
            ("tau_m", format!("{:?}", self.lif.tau_m)),
            ("v_th", format!("{:?}", self.lif.v_th)),
            ("v_reset", format!("{:?}", self.lif.v_reset)),
            ("ticks_per_step", self.lif.ticks_per_step.to_string()),
            ("grid_width", self.grid.width.to_string()),
            ("grid_height", self.grid.height.to_string()),
            ("lambda", format!("{:?}", self.topology.lambda)),
            ("alpha", format!("{:?}", self.topology.alpha)),
            ("d_th", format!("{:?}", self.topology.d_th)),
            ("sparsity", format!("{:?}", self.topology.sparsity)),
            ("beta", format!("{:?}", self.topology.beta)),
            ("input_fan_out", self.topology.input_fan_out.to_string()),
            ("n_ini", self.evolution.n_ini.to_string()),
            ("n_opt", self.evolution.n_opt.to_string()),
            ("offspring_per_individual", self.evolution.offspring_per_individual.to_string()),
            ("g_th", self.evolution.g_th.to_string()),
            ("generations", self.evolution.generations.to_string()),
            ("rate", format!("{:?}", self.evolution.rate)),
            ("probe_window", self.evolution.probe_window.to_string()),
            ("density_cap", format!("{:?}", self.evolution.density_cap)),
            ("epsilon", format!("{:?}", self.plasticity.epsilon)),
            ("learning_rate", format!("{:?}", self.plasticity.learning_rate)),
            ("w_min", format!("{:?}", self.plasticity.w_min)),
            ("w_max", format!("{:?}", self.plasticity.w_max)),
            ("tau_bcm", format!("{:?}", self.plasticity.tau_bcm)),
            ("theta_window", format!("{:?}", self.plasticity.theta_window)),
            ("stdp_a_plus", format!("{:?}", self.plasticity.stdp.a_plus)),
            ("stdp_a_minus", format!("{:?}", self.plasticity.stdp.a_minus)),
            ("stdp_tau_plus", format!("{:?}", self.plasticity.stdp.tau_plus)),
            ("stdp_tau_minus", format!("{:?}", self.plasticity.stdp.tau_minus)),
            ("corridor_len", self.tmaze.corridor_len.to_string()),
            ("arm_len", self.tmaze.arm_len.to_string()),
            ("energy", self.tmaze.energy.to_string()),
            ("reversal_probability", format!("{:?}", self.tmaze.reversal_probability)),
            ("reversal_streak", self.tmaze.reversal_streak.to_string()),
            ("flappy_height", self.flappy.height.to_string()),
            ("gap_half", self.flappy.gap_half.to_string()),
            ("pipe_width", self.flappy.pipe_width.to_string()),
            ("pipe_spacing", self.flappy.pipe_spacing.to_string()),
            ("first_pipe", self.flappy.first_pipe.to_string()),
            ("flap", self.flappy.flap.to_string()),
            ("gravity", self.flappy.gravity.to_string()),
            ("center_min", self.flappy.center_min.to_string()),
            ("center_max", self.flappy.center_max.to_string()),
            ("q_alpha", format!("{:?}", self.qlearning.alpha)),
            ("q_gamma", format!("{:?}", self.qlearning.gamma)),
            ("q_greedy", format!("{:?}", self.qlearning.greedy)),
        ];
        entries.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
