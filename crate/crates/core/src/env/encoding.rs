//! Deterministic rate coding of observations into per-tick input currents.

use super::{Cell, Observation, FLAPPY_STATES};
use crate::error::{Error, Result};

/// Current delivered to the one active Flappy Bird input neuron.
pub const FLAPPY_ACTIVE_CURRENT: f64 = 2.0;

fn cell_current(c: Cell) -> f64 {
    match c {
        Cell::Wall => 0.5,
        Cell::Road => 1.0,
        Cell::Poison => 1.5,
        Cell::Food => 2.0,
    }
}

/// One current per input neuron, held constant over the decision window.
pub fn encode_observation(obs: &Observation) -> Result<Vec<f64>> {
    match *obs {
        Observation::TMaze(o) => Ok(vec![cell_current(o.left), cell_current(o.front), cell_current(o.right)]),
        Observation::Flappy(s) => {
            let s = s as usize;
            if s >= FLAPPY_STATES {
                return Err(Error::Config(format!("Flappy Bird state {s} out of range")));
            }
            let mut v = vec![0.0; FLAPPY_STATES];
            v[s] = FLAPPY_ACTIVE_CURRENT;
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TMazeObservation;

    #[test]
    fn tmaze_symbols() {
        let o = Observation::TMaze(TMazeObservation {
            left: Cell::Wall,
            front: Cell::Road,
            right: Cell::Food,
        });
        assert_eq!(encode_observation(&o).unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(encode_observation(&o).unwrap(), encode_observation(&o).unwrap());
    }

    #[test]
    fn flappy_one_hot() {
        let v = encode_observation(&Observation::Flappy(3)).unwrap();
        assert_eq!(v.len(), 9);
        for (i, x) in v.iter().enumerate() {
            assert_eq!(*x, if i == 3 { 2.0 } else { 0.0 });
        }
        assert!(encode_observation(&Observation::Flappy(9)).is_err());
    }
}
