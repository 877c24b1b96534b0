//! Discretized Flappy Bird.
//!
//! The bird sits in a fixed column; pipes scroll toward it one column per
//! step. Each action moves the bird by a fixed amount: `up` by the flap
//! impulse, `down` by one unit of gravity. The agent only sees one of nine
//! discrete states derived from the bird's offset `dy` to the center of the
//! gap it is heading for (even ids above the center, odd ids below):
//!
//! | state | condition                          |
//! |-------|------------------------------------|
//! | 0, 1  | `|dy| <= 1`                        |
//! | 2, 3  | `1 < |dy| <= gap_half`             |
//! | 4, 5  | `gap_half < |dy| <= 2 * gap_half`  |
//! | 6, 7  | `|dy| > 2 * gap_half`              |
//! | 8     | collision with a pipe or the bounds |

use std::collections::VecDeque;

use rand::Rng as _;

use super::{EpisodeEnd, Environment, Observation, TaskId, Transition};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

pub const FLAPPY_STATES: usize = 9;
pub const COLLISION_STATE: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlappyParams {
    /// Playfield height; the bird must stay within `0..height`.
    pub height: i32,
    /// Half the gap opening; `|dy| <= gap_half` is safe inside a pipe.
    pub gap_half: i32,
    pub pipe_width: i32,
    /// Columns between consecutive pipes.
    pub pipe_spacing: i32,
    /// Column of the first pipe at episode start.
    pub first_pipe: i32,
    pub flap: i32,
    pub gravity: i32,
    /// Range of gap centers, inclusive.
    pub center_min: i32,
    pub center_max: i32,
}

impl Default for FlappyParams {
    fn default() -> Self {
        Self {
            height: 20,
            gap_half: 3,
            pipe_width: 2,
            pipe_spacing: 10,
            first_pipe: 8,
            flap: 1,
            gravity: 1,
            center_min: 6,
            center_max: 13,
        }
    }
}

impl FlappyParams {
    pub fn validate(&self) -> Result<()> {
        if self.height < 4 || self.gap_half < 1 || self.pipe_width < 1 {
            return Err(Error::Parameter("flappy geometry too small".into()));
        }
        if self.pipe_spacing <= self.pipe_width {
            return Err(Error::Parameter("pipe_spacing must exceed pipe_width".into()));
        }
        if self.flap < 1 || self.gravity < 1 {
            return Err(Error::Parameter("flap and gravity must be >= 1".into()));
        }
        if !(0 <= self.center_min && self.center_min <= self.center_max && self.center_max < self.height) {
            return Err(Error::Parameter("gap centers must lie inside the playfield".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlappyAction {
    Up,
    Down,
}

impl TryFrom<usize> for FlappyAction {
    type Error = Error;

    fn try_from(a: usize) -> Result<Self> {
        match a {
            0 => Ok(FlappyAction::Up),
            1 => Ok(FlappyAction::Down),
            other => Err(Error::Config(format!("invalid Flappy Bird action {other}"))),
        }
    }
}

/// Reward for entering `current` from `last` with distance change `dis_f`.
pub fn flappy_reward(current: u8, last: u8, dis_f: i32) -> f64 {
    let same = current == last;
    let closer = dis_f < 0;
    match current {
        0 | 1 => 6.0,
        2 | 3 => match (same, closer) {
            (true, true) => 3.0,
            (true, false) => -5.0,
            (false, _) => -3.0,
        },
        4 | 5 => match (same, closer) {
            (true, true) => 3.0,
            (true, false) => -8.0,
            (false, _) => -5.0,
        },
        6 | 7 => match (same, closer) {
            (true, true) => 3.0,
            _ => -3.0,
        },
        _ => -100.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pipe {
    x: i32,
    center: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlappyStep {
    pub state: u8,
    pub da: f64,
    pub end: Option<EpisodeEnd>,
    pub dis_f: i32,
}

#[derive(Debug, Clone)]
pub struct FlappyWorld {
    params: FlappyParams,
    y: i32,
    velocity: i32,
    pipes: VecDeque<Pipe>,
    state: u8,
    last_state: u8,
    active: bool,
    rng: Rng,
}

impl FlappyWorld {
    pub fn new(params: FlappyParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut world = Self {
            params,
            y: 0,
            velocity: 0,
            pipes: VecDeque::new(),
            state: 0,
            last_state: 0,
            active: true,
            rng: seed::rng(seed, &[seed::stream::ENV]),
        };
        world.start_episode();
        Ok(world)
    }

    fn random_center(&mut self) -> i32 {
        self.rng.gen_range(self.params.center_min..=self.params.center_max)
    }

    pub fn start_episode(&mut self) {
        self.y = self.params.height / 2;
        self.velocity = 0;
        self.pipes.clear();
        let mut x = self.params.first_pipe;
        while x < self.params.first_pipe + 3 * self.params.pipe_spacing {
            let center = self.random_center();
            self.pipes.push_back(Pipe { x, center });
            x += self.params.pipe_spacing;
        }
        self.state = self.classify();
        self.last_state = self.state;
        self.active = true;
    }

    fn target(&self) -> Pipe {
        *self.pipes.front().expect("pipes are replenished every step")
    }

    fn inside_pipe(&self, p: &Pipe) -> bool {
        p.x <= 0 && 0 < p.x + self.params.pipe_width
    }

    fn collided(&self) -> bool {
        if self.y < 0 || self.y >= self.params.height {
            return true;
        }
        self.pipes
            .iter()
            .any(|p| self.inside_pipe(p) && (self.y - p.center).abs() > self.params.gap_half)
    }

    fn classify(&self) -> u8 {
        if self.collided() {
            return COLLISION_STATE;
        }
        let dy = self.y - self.target().center;
        let side = u8::from(dy < 0);
        let a = dy.abs();
        let h = self.params.gap_half;
        let band = if a <= 1 {
            0
        } else if a <= h {
            2
        } else if a <= 2 * h {
            4
        } else {
            6
        };
        band + side
    }

    pub fn state(&self) -> u8 {
        self.state
    }

    pub fn last_state(&self) -> u8 {
        self.last_state
    }

    pub fn bird(&self) -> (i32, i32) {
        (self.y, self.velocity)
    }

    /// Gap center and horizontal distance of the pipe the bird is heading for.
    pub fn next_gap(&self) -> (i32, i32) {
        let p = self.target();
        (p.center, p.x)
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn flappy_step(&mut self, action: FlappyAction) -> Result<FlappyStep> {
        if !self.active {
            return Err(Error::Config("Flappy Bird episode already finished".into()));
        }
        let target = self.target();
        let before = (self.y - target.center).abs();
        self.velocity = match action {
            FlappyAction::Up => self.params.flap,
            FlappyAction::Down => -self.params.gravity,
        };
        self.y += self.velocity;
        for p in self.pipes.iter_mut() {
            p.x -= 1;
        }
        let collided = self.collided();
        while self.pipes.front().is_some_and(|p| p.x + self.params.pipe_width <= 0) {
            self.pipes.pop_front();
        }
        while self.pipes.len() < 3 {
            let x = self.pipes.back().map_or(self.params.first_pipe, |p| p.x + self.params.pipe_spacing);
            let center = self.random_center();
            self.pipes.push_back(Pipe { x, center });
        }
        let dis_f = (self.y - target.center).abs() - before;
        self.last_state = self.state;
        self.state = if collided { COLLISION_STATE } else { self.classify() };
        let da = flappy_reward(self.state, self.last_state, dis_f);
        let end = (self.state == COLLISION_STATE).then_some(EpisodeEnd::Collision);
        if end.is_some() {
            self.active = false;
        }
        Ok(FlappyStep {
            state: self.state,
            da,
            end,
            dis_f,
        })
    }
}

impl Environment for FlappyWorld {
    fn task(&self) -> TaskId {
        TaskId::Flappy
    }

    fn n_inputs(&self) -> usize {
        FLAPPY_STATES
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn n_states(&self) -> usize {
        FLAPPY_STATES
    }

    fn state_index(&self) -> usize {
        self.state as usize
    }

    fn observation(&self) -> Observation {
        Observation::Flappy(self.state)
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        let s = self.flappy_step(FlappyAction::try_from(action)?)?;
        Ok(Transition { da: s.da, end: s.end })
    }

    fn begin_next_episode(&mut self) -> bool {
        self.start_episode();
        false
    }

    fn observation_set(&self) -> Vec<Observation> {
        (0..FLAPPY_STATES as u8).map(Observation::Flappy).collect()
    }
}
