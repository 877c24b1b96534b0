//! Decision tasks, observation encoding and the tabular Q-learning baseline.

mod encoding;
mod flappy;
mod qlearning;
mod tmaze;

use std::fmt;
use std::str::FromStr;

pub use encoding::{encode_observation, FLAPPY_ACTIVE_CURRENT};
pub use flappy::{flappy_reward, FlappyAction, FlappyParams, FlappyStep, FlappyWorld, COLLISION_STATE, FLAPPY_STATES};
pub use qlearning::{q_learning_baseline, q_update, QLearningParams, QTable};
pub use tmaze::{Cell, Heading, TMazeAction, TMazeObservation, TMazeParams, TMazeStep, TMazeWorld};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskId {
    TMaze,
    Flappy,
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskId::TMaze => "tmaze",
            TaskId::Flappy => "flappy",
        })
    }
}

impl FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tmaze" | "t-maze" => Ok(TaskId::TMaze),
            "flappy" | "flappybird" | "flappy-bird" => Ok(TaskId::Flappy),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// What the agent perceives before choosing an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observation {
    TMaze(TMazeObservation),
    /// Discrete Flappy Bird state id.
    Flappy(u8),
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::TMaze(o) => write!(f, "{o}"),
            Observation::Flappy(s) => write!(f, "s{s}"),
        }
    }
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpisodeEnd {
    Food,
    Poison,
    Timeout,
    Collision,
}

impl fmt::Display for EpisodeEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpisodeEnd::Food => "food",
            EpisodeEnd::Poison => "poison",
            EpisodeEnd::Timeout => "timeout",
            EpisodeEnd::Collision => "collision",
        })
    }
}

/// Result of one environment step as seen by an agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Dopamine (reward) signal for the step.
    pub da: f64,
    pub end: Option<EpisodeEnd>,
}

/// Common interface the harness and the Q-learning baseline drive.
pub trait Environment: Send {
    fn task(&self) -> TaskId;
    fn n_inputs(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Size of the tabular state space used by Q-learning.
    fn n_states(&self) -> usize;
    fn state_index(&self) -> usize;
    fn observation(&self) -> Observation;
    fn step(&mut self, action: usize) -> Result<Transition>;
    /// Close the finished episode and start the next one. Returns true if the
    /// world was reversed in between.
    fn begin_next_episode(&mut self) -> bool;
    /// Distinct observations of the task, in a fixed order, used to probe liquids.
    fn observation_set(&self) -> Vec<Observation>;
}

/// The finite set of dopamine values a task can emit.
pub fn reward_codomain(task: TaskId) -> &'static [f64] {
    match task {
        TaskId::TMaze => &[3.0, -3.0, 1.0, -1.0],
        TaskId::Flappy => &[6.0, 3.0, -3.0, -5.0, -8.0, -100.0],
    }
}
