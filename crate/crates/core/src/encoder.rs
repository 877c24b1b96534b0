//! Input layer: turns per-tick input currents into spikes and liquid drive.
//!
//! Each input neuron is a non-leaky accumulator. Every tick its phase grows by
//! `gain * current`; when the phase reaches 1 it spikes and drops by 1. The
//! spike count over a window is therefore proportional to the current, which
//! keeps the four T-maze symbols distinguishable downstream. Input spikes
//! reach their liquid targets as current within the same tick.

use crate::error::{Error, Result};
use crate::topology::InputProjection;

pub const DEFAULT_INPUT_GAIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RateEncoder {
    gain: f64,
    phase: Vec<f64>,
}

impl RateEncoder {
    pub fn new(n_inputs: usize, gain: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::Parameter(format!("input gain must be > 0, got {gain}")));
        }
        Ok(Self {
            gain,
            phase: vec![0.0; n_inputs],
        })
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn reset(&mut self) {
        self.phase.fill(0.0);
    }

    pub fn tick(&mut self, currents: &[f64], spikes: &mut [bool]) {
        for ((p, &c), s) in self.phase.iter_mut().zip(currents).zip(spikes.iter_mut()) {
            *p += self.gain * c;
            *s = *p >= 1.0;
            if *s {
                *p -= 1.0;
            }
        }
    }
}

/// `out[j] += sum_k projection[k][j]` over input neurons `k` that spiked.
pub fn project(projection: &InputProjection, spikes: &[bool], out: &mut [f64]) {
    let w = &projection.w;
    for (k, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
        for (o, &x) in out.iter_mut().zip(w.row(k)) {
            *o += x;
        }
    }
}

/// Liquid current for `ticks` ticks of a constant observation, starting from a fresh encoder.
pub fn liquid_drive(currents: &[f64], projection: &InputProjection, gain: f64, ticks: usize) -> Result<Vec<Vec<f64>>> {
    if currents.len() != projection.inputs() {
        return Err(Error::Dimension(format!(
            "{} input currents for {} input neurons",
            currents.len(),
            projection.inputs()
        )));
    }
    let mut enc = RateEncoder::new(currents.len(), gain)?;
    let mut spikes = vec![false; currents.len()];
    let mut train = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        enc.tick(currents, &mut spikes);
        let mut drive = vec![0.0; projection.liquid()];
        project(projection, &spikes, &mut drive);
        train.push(drive);
    }
    Ok(train)
}
