//! T-maze with food/poison reversal.
//!
//! Layout (`corridor_len = 5`, `arm_len = 3`, both counted including the
//! junction cell `J`):
//!
//! ```text
//!   E a J a E      E = arm end (food or poison)
//!       |
//!       |
//!       |
//!       S          S = start, agent faces north
//! ```
//!
//! Turning rotates the heading and then tries to step into the cell ahead.
//! A blocked move leaves the position unchanged. The distance used for
//! shaping is the shortest-path distance to the food.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use super::{EpisodeEnd, Environment, Observation, TaskId, Transition};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMazeParams {
    /// Cells from the start to the junction, inclusive.
    pub corridor_len: usize,
    /// Cells from the junction to an arm end, inclusive.
    pub arm_len: usize,
    /// Step budget per episode.
    pub energy: usize,
    /// Probability of swapping food and poison once the streak condition holds.
    pub reversal_probability: f64,
    /// Consecutive food episodes required before a swap may happen.
    pub reversal_streak: usize,
}

impl Default for TMazeParams {
    fn default() -> Self {
        Self {
            corridor_len: 5,
            arm_len: 3,
            energy: 30,
            reversal_probability: 0.25,
            reversal_streak: 3,
        }
    }
}

impl TMazeParams {
    pub fn validate(&self) -> Result<()> {
        if self.corridor_len < 2 || self.arm_len < 2 {
            return Err(Error::Parameter("corridor_len and arm_len must be >= 2".into()));
        }
        if self.energy == 0 {
            return Err(Error::Parameter("energy must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.reversal_probability) {
            return Err(Error::Parameter("reversal_probability must be in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Wall,
    Road,
    Food,
    Poison,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cell::Wall => "wall",
            Cell::Road => "road",
            Cell::Food => "food",
            Cell::Poison => "poison",
        })
    }
}

impl FromStr for Cell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(Cell::Wall),
            "road" => Ok(Cell::Road),
            "food" => Ok(Cell::Food),
            "poison" => Ok(Cell::Poison),
            other => Err(Error::Config(format!("unknown maze symbol `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    fn index(self) -> usize {
        self as usize
    }

    pub fn left(self) -> Self {
        Self::ALL[(self.index() + 3) % 4]
    }

    pub fn right(self) -> Self {
        Self::ALL[(self.index() + 1) % 4]
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TMazeAction {
    Forward,
    Left,
    Right,
}

impl TryFrom<usize> for TMazeAction {
    type Error = Error;

    fn try_from(a: usize) -> Result<Self> {
        match a {
            0 => Ok(TMazeAction::Forward),
            1 => Ok(TMazeAction::Left),
            2 => Ok(TMazeAction::Right),
            other => Err(Error::Config(format!("invalid T-maze action {other}"))),
        }
    }
}

/// Cells to the agent's left, front and right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TMazeObservation {
    pub left: Cell,
    pub front: Cell,
    pub right: Cell,
}

impl fmt::Display for TMazeObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}", self.left, self.front, self.right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMazeStep {
    pub observation: TMazeObservation,
    pub da: f64,
    pub end: Option<EpisodeEnd>,
    /// Shortest-path distance to food after minus before.
    pub dis_m: i64,
}

type Pos = (usize, usize);

#[derive(Debug, Clone)]
pub struct TMazeWorld {
    params: TMazeParams,
    width: usize,
    height: usize,
    walkable: Vec<bool>,
    start: Pos,
    food: Pos,
    poison: Pos,
    agent: Pos,
    heading: Heading,
    steps_in_episode: usize,
    streak: usize,
    active: bool,
    dist_to_food: Vec<Option<u32>>,
    /// Index into the Q table for each walkable, non-terminal cell.
    state_cells: Vec<Option<usize>>,
    n_state_cells: usize,
    reversals: usize,
    rng: Rng,
}

impl TMazeWorld {
    pub fn new(params: TMazeParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let arm = params.arm_len - 1;
        let width = 2 * arm + 1;
        let height = params.corridor_len;
        let mut walkable = vec![false; width * height];
        for x in 0..width {
            walkable[x] = true;
        }
        for y in 0..height {
            walkable[y * width + arm] = true;
        }
        let mut rng = seed::rng(seed, &[seed::stream::ENV]);
        let (left_end, right_end) = ((0, 0), (width - 1, 0));
        let (food, poison) = if rng.gen::<bool>() {
            (left_end, right_end)
        } else {
            (right_end, left_end)
        };
        let start = (arm, height - 1);
        let mut world = Self {
            params,
            width,
            height,
            walkable,
            start,
            food,
            poison,
            agent: start,
            heading: Heading::North,
            steps_in_episode: 0,
            streak: 0,
            active: true,
            dist_to_food: Vec::new(),
            state_cells: Vec::new(),
            n_state_cells: 0,
            reversals: 0,
            rng,
        };
        world.index_state_cells();
        world.recompute_distances();
        Ok(world)
    }

    fn idx(&self, (x, y): Pos) -> usize {
        y * self.width + x
    }

    fn neighbor(&self, (x, y): Pos, h: Heading) -> Option<Pos> {
        let (dx, dy) = h.delta();
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < self.width && ny < self.height).then_some((nx, ny))
    }

    fn is_walkable(&self, p: Pos) -> bool {
        self.walkable[self.idx(p)]
    }

    fn index_state_cells(&mut self) {
        let ends = [(0, 0), (self.width - 1, 0)];
        let mut cells = vec![None; self.walkable.len()];
        let mut k = 0;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.walkable[y * self.width + x] && !ends.contains(&(x, y)) {
                    cells[y * self.width + x] = Some(k);
                    k += 1;
                }
            }
        }
        self.state_cells = cells;
        self.n_state_cells = k;
    }

    fn recompute_distances(&mut self) {
        let mut dist = vec![None; self.walkable.len()];
        let mut queue = VecDeque::from([self.food]);
        dist[self.idx(self.food)] = Some(0);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.idx(p)].expect("queued cells have a distance");
            for h in Heading::ALL {
                if let Some(q) = self.neighbor(p, h) {
                    let qi = self.idx(q);
                    if self.walkable[qi] && dist[qi].is_none() {
                        dist[qi] = Some(d + 1);
                        queue.push_back(q);
                    }
                }
            }
        }
        self.dist_to_food = dist;
    }

    fn distance(&self, p: Pos) -> i64 {
        self.dist_to_food[self.idx(p)].expect("maze is connected") as i64
    }

    fn cell_at(&self, p: Option<Pos>) -> Cell {
        match p {
            Some(p) if p == self.food => Cell::Food,
            Some(p) if p == self.poison => Cell::Poison,
            Some(p) if self.is_walkable(p) => Cell::Road,
            _ => Cell::Wall,
        }
    }

    fn observe_from(&self, p: Pos, h: Heading) -> TMazeObservation {
        TMazeObservation {
            left: self.cell_at(self.neighbor(p, h.left())),
            front: self.cell_at(self.neighbor(p, h)),
            right: self.cell_at(self.neighbor(p, h.right())),
        }
    }

    pub fn observe(&self) -> TMazeObservation {
        self.observe_from(self.agent, self.heading)
    }

    pub fn agent(&self) -> (usize, usize, Heading) {
        (self.agent.0, self.agent.1, self.heading)
    }

    pub fn food(&self) -> (usize, usize) {
        self.food
    }

    pub fn poison(&self) -> (usize, usize) {
        self.poison
    }

    /// The two arm-end cells, left then right.
    pub fn arm_ends(&self) -> [(usize, usize); 2] {
        [(0, 0), (self.width - 1, 0)]
    }

    pub fn streak(&self) -> usize {
        self.streak
    }

    pub fn set_streak(&mut self, streak: usize) {
        self.streak = streak;
    }

    pub fn reversals(&self) -> usize {
        self.reversals
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn params(&self) -> &TMazeParams {
        &self.params
    }

    /// Number of `(cell, heading)` entries in the Q table.
    pub fn state_count(&self) -> usize {
        self.n_state_cells * 4
    }

    pub fn state_id(&self) -> usize {
        let cell = self.state_cells[self.idx(self.agent)].unwrap_or(0);
        cell * 4 + self.heading.index()
    }

    pub fn tmaze_step(&mut self, action: TMazeAction) -> Result<TMazeStep> {
        if !self.active {
            return Err(Error::Config("T-maze episode already finished".into()));
        }
        let before = self.distance(self.agent);
        self.heading = match action {
            TMazeAction::Forward => self.heading,
            TMazeAction::Left => self.heading.left(),
            TMazeAction::Right => self.heading.right(),
        };
        if let Some(next) = self.neighbor(self.agent, self.heading) {
            if self.is_walkable(next) {
                self.agent = next;
            }
        }
        self.steps_in_episode += 1;
        let dis_m = self.distance(self.agent) - before;
        let (da, end) = if self.agent == self.food {
            (3.0, Some(EpisodeEnd::Food))
        } else if self.agent == self.poison {
            (-3.0, Some(EpisodeEnd::Poison))
        } else {
            let da = if dis_m < 0 { 1.0 } else { -1.0 };
            let end = (self.steps_in_episode >= self.params.energy).then_some(EpisodeEnd::Timeout);
            (da, end)
        };
        if let Some(end) = end {
            self.active = false;
            self.streak = if end == EpisodeEnd::Food { self.streak + 1 } else { 0 };
        }
        Ok(TMazeStep {
            observation: self.observe(),
            da,
            end,
            dis_m,
        })
    }

    /// Swap food and poison with the configured probability once the agent
    /// has reached food on enough consecutive episodes.
    pub fn maybe_reverse(&mut self, rng: &mut impl rand::Rng) -> bool {
        if self.streak < self.params.reversal_streak {
            return false;
        }
        let roll = rng.gen::<f64>();
        self.reverse_if(roll)
    }

    fn reverse_if(&mut self, roll: f64) -> bool {
        if roll < self.params.reversal_probability {
            std::mem::swap(&mut self.food, &mut self.poison);
            self.recompute_distances();
            self.streak = 0;
            self.reversals += 1;
            true
        } else {
            false
        }
    }

    pub fn start_episode(&mut self) {
        self.agent = self.start;
        self.heading = Heading::North;
        self.steps_in_episode = 0;
        self.active = true;
    }

    fn reachable_observations(&self) -> Vec<TMazeObservation> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let p = (x, y);
                if !self.is_walkable(p) || self.arm_ends().contains(&p) {
                    continue;
                }
                for h in Heading::ALL {
                    for (food, poison) in [(self.food, self.poison), (self.poison, self.food)] {
                        let mut probe = self.clone();
                        probe.food = food;
                        probe.poison = poison;
                        out.push(probe.observe_from(p, h));
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Checks the structural invariants of the world.
    pub fn is_valid(&self) -> bool {
        let ends = self.arm_ends();
        self.food != self.poison
            && ends.contains(&self.food)
            && ends.contains(&self.poison)
            && self.is_walkable(self.agent)
            && self.dist_to_food.iter().zip(&self.walkable).all(|(d, &w)| d.is_some() == w)
    }
}

impl Environment for TMazeWorld {
    fn task(&self) -> TaskId {
        TaskId::TMaze
    }

    fn n_inputs(&self) -> usize {
        3
    }

    fn n_actions(&self) -> usize {
        3
    }

    fn n_states(&self) -> usize {
        self.state_count()
    }

    fn state_index(&self) -> usize {
        self.state_id()
    }

    fn observation(&self) -> Observation {
        Observation::TMaze(self.observe())
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        let s = self.tmaze_step(TMazeAction::try_from(action)?)?;
        Ok(Transition { da: s.da, end: s.end })
    }

    fn begin_next_episode(&mut self) -> bool {
        let reversed = self.streak >= self.params.reversal_streak && {
            let roll = self.rng.gen::<f64>();
            self.reverse_if(roll)
        };
        self.start_episode();
        reversed
    }

    fn observation_set(&self) -> Vec<Observation> {
        self.reachable_observations().into_iter().map(Observation::TMaze).collect()
    }
}
