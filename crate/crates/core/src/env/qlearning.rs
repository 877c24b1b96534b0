//! Tabular Q-learning with epsilon-greedy exploration.

use rand::Rng as _;

use super::Environment;
use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLearningParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Probability of taking the greedy action.
    pub greedy: f64,
}

impl QLearningParams {
    pub fn tmaze() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            greedy: 0.8,
        }
    }

    pub fn flappy() -> Self {
        Self { gamma: 0.99, ..Self::tmaze() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.greedy) {
            return Err(Error::Parameter("Q-learning alpha, gamma and greedy must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    actions: usize,
    q: Vec<f64>,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Self {
        Self {
            states,
            actions,
            q: vec![0.0; states * actions],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.actions..(s + 1) * self.actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action; ties go to a uniformly random tied action.
    pub fn greedy(&self, s: usize, rng: &mut Rng) -> usize {
        let best = self.max(s);
        let tied: Vec<usize> = (0..self.actions).filter(|&a| self.get(s, a) == best).collect();
        tied[rng.gen_range(0..tied.len())]
    }

    pub fn update(&mut self, s: usize, a: usize, reward: f64, next_max: f64, params: &QLearningParams) {
        let i = s * self.actions + a;
        self.q[i] = q_update(self.q[i], reward, next_max, params.alpha, params.gamma);
    }
}

/// `q + alpha * (r + gamma * next_max - q)`.
pub fn q_update(q: f64, reward: f64, next_max: f64, alpha: f64, gamma: f64) -> f64 {
    q + alpha * (reward + gamma * next_max - q)
}

/// Run Q-learning for `horizon` environment steps and return the reward of each step.
///
/// Episodes are concatenated; the bootstrap target is zero on the step that
/// ends an episode.
pub fn q_learning_baseline(env: &mut dyn Environment, horizon: usize, params: &QLearningParams, rng: &mut Rng) -> Result<Vec<f64>> {
    params.validate()?;
    let mut table = QTable::new(env.n_states(), env.n_actions());
    let mut rewards = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let s = env.state_index();
        let a = if rng.gen::<f64>() < params.greedy {
            table.greedy(s, rng)
        } else {
            rng.gen_range(0..table.actions())
        };
        let t = env.step(a)?;
        let next_max = if t.end.is_some() { 0.0 } else { table.max(env.state_index()) };
        table.update(s, a, t.da, next_max, params);
        rewards.push(t.da);
        if t.end.is_some() {
            env.begin_next_episode();
        }
    }
    Ok(rewards)
}
