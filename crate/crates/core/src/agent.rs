//! A liquid state machine acting in an environment.
//!
//! The network holds the liquid neurons followed by one readout neuron per
//! action. Each decision step resets membrane potentials, presents the
//! encoded observation for `ticks_per_step` ticks, and picks the action whose
//! readout neuron spiked most. After the environment answers, each synapse
//! layer learns under its own rule.

use rand::Rng as _;

use crate::encoder::{project, RateEncoder};
use crate::env::{encode_observation, Observation};
use crate::error::{Error, Result};
use crate::plasticity::{da_bcm_update, stdp_update, PlasticityParams, Rule, TraceState};
use crate::seed::Rng;
use crate::snn::{lif_tick_in_place, LifParams, NeuronState, SparseSynapses, WeightMatrix};
use crate::topology::{InputProjection, LiquidWeights, ReadoutWeights};

/// Argmax of readout spike counts; ties are broken uniformly at random.
pub fn lsm_policy(counts: &[usize], rng: &mut Rng) -> usize {
    let best = counts.iter().copied().max().unwrap_or(0);
    let tied: Vec<usize> = (0..counts.len()).filter(|&a| counts[a] == best).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.gen_range(0..tied.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    pub lif: LifParams,
    pub plasticity: PlasticityParams,
    pub input_gain: f64,
    pub liquid_rule: Rule,
    pub readout_rule: Rule,
}

/// Spikes of one decision window.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// Readout spike count per action.
    pub counts: Vec<usize>,
    /// Liquid neurons that fired at least once.
    pub liquid_spikes: usize,
}

#[derive(Debug, Clone)]
pub struct LsmAgent {
    params: AgentParams,
    n_liquid: usize,
    n_readout: usize,
    synapses: SparseSynapses,
    projection: InputProjection,
    encoder: RateEncoder,
    state: NeuronState,
    traces: TraceState,
    /// `fired[t * n + i]` for the last window.
    fired: Vec<bool>,
    ticks_run: usize,
    drive: Vec<f64>,
    input_spikes: Vec<bool>,
    scratch: Vec<f64>,
}

impl LsmAgent {
    pub fn new(liquid: &LiquidWeights, readout: &ReadoutWeights, projection: InputProjection, params: AgentParams) -> Result<Self> {
        params.lif.validate()?;
        params.plasticity.validate()?;
        let n_liquid = liquid.w.rows();
        let n_readout = readout.w.cols();
        if liquid.w.cols() != n_liquid || readout.w.rows() != n_liquid || projection.liquid() != n_liquid {
            return Err(Error::Dimension("liquid, readout and input projection disagree on liquid size".into()));
        }
        let n = n_liquid + n_readout;
        let mut edges: Vec<(usize, usize, f64)> = liquid.w.nonzero_entries().collect();
        edges.extend(readout.w.nonzero_entries().map(|(i, a, w)| (i, n_liquid + a, w)));
        let synapses = SparseSynapses::from_edges(n, edges)?;
        let encoder = RateEncoder::new(projection.inputs(), params.input_gain)?;
        Ok(Self {
            params,
            n_liquid,
            n_readout,
            synapses,
            input_spikes: vec![false; projection.inputs()],
            projection,
            encoder,
            state: NeuronState::resting(n),
            traces: TraceState::new(n),
            fired: Vec::new(),
            ticks_run: 0,
            drive: vec![0.0; n],
            scratch: Vec::with_capacity(n),
        })
    }

    pub fn n_liquid(&self) -> usize {
        self.n_liquid
    }

    pub fn n_readout(&self) -> usize {
        self.n_readout
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn projection(&self) -> &InputProjection {
        &self.projection
    }

    pub fn traces(&self) -> &TraceState {
        &self.traces
    }

    /// Spike raster of the last window, `fired[t * n + i]`.
    pub fn last_raster(&self) -> &[bool] {
        &self.fired
    }

    fn is_readout_synapse(&self, k: usize) -> bool {
        self.synapses.post(k) >= self.n_liquid
    }

    /// Current liquid weights as a dense matrix.
    pub fn liquid_weights(&self) -> WeightMatrix {
        let mut w = WeightMatrix::zeros(self.n_liquid, self.n_liquid);
        for k in 0..self.synapses.len() {
            if !self.is_readout_synapse(k) {
                w.set(self.synapses.pre(k), self.synapses.post(k), self.synapses.weights()[k]);
            }
        }
        w
    }

    /// Current readout weights, `liquid x readout`.
    pub fn readout_weights(&self) -> WeightMatrix {
        let mut w = WeightMatrix::zeros(self.n_liquid, self.n_readout);
        for k in 0..self.synapses.len() {
            if self.is_readout_synapse(k) {
                w.set(self.synapses.pre(k), self.synapses.post(k) - self.n_liquid, self.synapses.weights()[k]);
            }
        }
        w
    }

    /// Plastic parameters: nonzero liquid, readout and input-projection weights.
    pub fn count_parameters(&self) -> usize {
        self.synapses.weights().iter().filter(|&&w| w != 0.0).count() + self.projection.edge_count()
    }

    /// Presents `obs` for one decision window.
    pub fn present(&mut self, obs: &Observation) -> Result<Window> {
        let currents = encode_observation(obs)?;
        if currents.len() != self.projection.inputs() {
            return Err(Error::Dimension(format!(
                "observation encodes {} inputs, agent has {}",
                currents.len(),
                self.projection.inputs()
            )));
        }
        let n = self.state.len();
        let ticks = self.params.lif.ticks_per_step;
        self.state.reset();
        self.encoder.reset();
        self.fired.clear();
        self.fired.reserve(ticks * n);
        let mut counts = vec![0; self.n_readout];
        let mut liquid_active = vec![false; self.n_liquid];
        for _ in 0..ticks {
            self.encoder.tick(&currents, &mut self.input_spikes);
            self.drive.fill(0.0);
            project(&self.projection, &self.input_spikes, &mut self.drive[..self.n_liquid]);
            lif_tick_in_place(&mut self.state, &self.drive, &self.synapses, &self.params.lif, &mut self.scratch)?;
            self.traces.tick(&self.state.fired, &self.params.plasticity);
            for (i, &f) in self.state.fired.iter().enumerate() {
                if f {
                    if i < self.n_liquid {
                        liquid_active[i] = true;
                    } else {
                        counts[i - self.n_liquid] += 1;
                    }
                }
            }
            self.fired.extend_from_slice(&self.state.fired);
        }
        self.ticks_run = ticks;
        Ok(Window {
            counts,
            liquid_spikes: liquid_active.iter().filter(|&&a| a).count(),
        })
    }

    /// Applies each layer's rule using the last window and the step's dopamine.
    ///
    /// DA-BCM makes one update from the traces and thresholds reached at the
    /// end of the window; STDP replays every spike pair inside it.
    pub fn learn(&mut self, da: f64) {
        let p = self.params.plasticity;
        let n = self.state.len();
        for k in 0..self.synapses.len() {
            let rule = if self.is_readout_synapse(k) {
                self.params.readout_rule
            } else {
                self.params.liquid_rule
            };
            let (pre, post) = (self.synapses.pre(k), self.synapses.post(k));
            let m = self.synapses.weights()[k];
            let next = match rule {
                Rule::None => continue,
                Rule::DaBcm => {
                    let e = &self.traces.e;
                    da_bcm_update(m, e[pre], e[post], self.traces.theta[post], da, &p)
                }
                Rule::Stdp => {
                    let mut m = m;
                    let mut last_pre = None;
                    let mut last_post = None;
                    for t in 0..self.ticks_run {
                        let pre_fired = self.fired[t * n + pre];
                        let post_fired = self.fired[t * n + post];
                        if post_fired {
                            if let Some(tp) = last_pre {
                                m = stdp_update(m, (t - tp) as f64, &p);
                            }
                        }
                        if pre_fired {
                            if let Some(tq) = last_post {
                                m = stdp_update(m, -((t - tq) as f64), &p);
                            }
                        }
                        if pre_fired {
                            last_pre = Some(t);
                        }
                        if post_fired {
                            last_post = Some(t);
                        }
                    }
                    m
                }
            };
            self.synapses.weights_mut()[k] = next;
        }
    }
}
