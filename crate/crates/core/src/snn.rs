//! Discrete-time leaky integrate-and-fire dynamics.
//!
//! Membrane update per tick (forward Euler, dt = 1 tick, no refractory period):
//!
//! ```text
//! v' = v + (I_total - v) / tau_m,   I_total = I_ext + W^T s(t-1)
//! ```
//!
//! A neuron with `v' >= v_th` spikes and is reset to `v_reset` in the same tick.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    /// Membrane time constant, in ticks.
    pub tau_m: f64,
    /// Firing threshold.
    pub v_th: f64,
    /// Potential after a spike.
    pub v_reset: f64,
    /// Simulation ticks per environment decision step.
    pub ticks_per_step: usize,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau_m: 2.0,
            v_th: 1.0,
            v_reset: 0.0,
            ticks_per_step: 20,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_m > 0.0) {
            return Err(Error::Parameter(format!("tau_m must be > 0, got {}", self.tau_m)));
        }
        if !(self.v_th > self.v_reset) {
            return Err(Error::Parameter(format!(
                "v_th ({}) must exceed v_reset ({})",
                self.v_th, self.v_reset
            )));
        }
        if self.ticks_per_step == 0 {
            return Err(Error::Parameter("ticks_per_step must be >= 1".into()));
        }
        Ok(())
    }
}

/// Anything that can deliver presynaptic spikes as postsynaptic current.
pub trait Synapses {
    /// Number of neurons on each side of the (square) connectivity.
    fn neurons(&self) -> usize;

    /// `out[j] += sum_i w[i][j] * spikes[i]`.
    fn accumulate(&self, spikes: &[bool], out: &mut [f64]);
}

/// Dense row-major matrix. Entry `(i, j)` is the weight from `i` to `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        self.data[i * self.cols + j] = w;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&w| w != 0.0).count()
    }

    /// Nonzero entries as `(row, col, weight)` in row-major order.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(move |(k, &w)| (k / self.cols, k % self.cols, w))
    }
}

impl Synapses for WeightMatrix {
    fn neurons(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    fn accumulate(&self, spikes: &[bool], out: &mut [f64]) {
        for (i, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += w;
            }
        }
    }
}

/// Edge-list connectivity grouped by presynaptic neuron, for sparse networks.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSynapses {
    neurons: usize,
    offsets: Vec<usize>,
    pre: Vec<usize>,
    post: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseSynapses {
    /// Builds from `(pre, post, weight)` triples. Synapse indices follow the
    /// order of the triples after a stable sort by presynaptic neuron.
    pub fn from_edges(neurons: usize, mut edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = edges.iter().find(|(i, j, _)| *i >= neurons || *j >= neurons) {
            return Err(Error::Dimension(format!(
                "edge {i}->{j} outside a {neurons}-neuron network"
            )));
        }
        edges.sort_by_key(|&(i, _, _)| i);
        let mut offsets = vec![0; neurons + 1];
        for &(i, _, _) in &edges {
            offsets[i + 1] += 1;
        }
        for k in 0..neurons {
            offsets[k + 1] += offsets[k];
        }
        Ok(Self {
            neurons,
            offsets,
            pre: edges.iter().map(|e| e.0).collect(),
            post: edges.iter().map(|e| e.1).collect(),
            weights: edges.iter().map(|e| e.2).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn pre(&self, k: usize) -> usize {
        self.pre[k]
    }

    pub fn post(&self, k: usize) -> usize {
        self.post[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Synapse index range leaving neuron `i`.
    pub fn outgoing(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

impl Synapses for SparseSynapses {
    fn neurons(&self) -> usize {
        self.neurons
    }

    fn accumulate(&self, spikes: &[bool], out: &mut [f64]) {
        for (i, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
            for k in self.outgoing(i) {
                out[self.post[k]] += self.weights[k];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    /// Membrane potential per neuron.
    pub v: Vec<f64>,
    /// Spike flags from the most recent tick.
    pub fired: Vec<bool>,
}

impl NeuronState {
    /// All neurons at rest (v = 0, no spikes).
    pub fn resting(n: usize) -> Self {
        Self {
            v: vec![0.0; n],
            fired: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn reset(&mut self) {
        self.v.iter_mut().for_each(|v| *v = 0.0);
        self.fired.iter_mut().for_each(|f| *f = false);
    }
}

/// One tick of the network. Returns the new state and its spike vector.
pub fn lif_tick<S: Synapses>(
    state: &NeuronState,
    input_current: &[f64],
    weights: &S,
    params: &LifParams,
) -> Result<(NeuronState, Vec<bool>)> {
    let mut next = state.clone();
    let mut scratch = Vec::new();
    lif_tick_in_place(&mut next, input_current, weights, params, &mut scratch)?;
    let spikes = next.fired.clone();
    Ok((next, spikes))
}

/// In-place variant of [`lif_tick`]; `scratch` is reused across calls.
pub fn lif_tick_in_place<S: Synapses>(
    state: &mut NeuronState,
    input_current: &[f64],
    weights: &S,
    params: &LifParams,
    scratch: &mut Vec<f64>,
) -> Result<()> {
    let n = state.v.len();
    if state.fired.len() != n {
        return Err(Error::Dimension("state spike vector length differs from potentials".into()));
    }
    if input_current.len() != n {
        return Err(Error::Dimension(format!(
            "input current has {} entries for {} neurons",
            input_current.len(),
            n
        )));
    }
    if weights.neurons() != n {
        return Err(Error::Dimension(format!(
            "weights span {} neurons, state has {}",
            weights.neurons(),
            n
        )));
    }
    scratch.clear();
    scratch.extend_from_slice(input_current);
    weights.accumulate(&state.fired, scratch);

    let inv_tau = 1.0 / params.tau_m;
    for ((v, fired), &i_total) in state.v.iter_mut().zip(state.fired.iter_mut()).zip(scratch.iter()) {
        let next = *v + (i_total - *v) * inv_tau;
        if next >= params.v_th {
            *v = params.v_reset;
            *fired = true;
        } else {
            *v = next;
            *fired = false;
        }
    }
    Ok(())
}

/// Binary firing record: row `i`, column `t` is 1 iff neuron `i` fired at tick `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeStateMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl SpikeStateMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![0; rows * cols],
        }
    }

    /// Builds from row vectors of 0/1 entries.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension("ragged spike rows".into()));
            }
            for (t, &b) in r.iter().enumerate() {
                if b > 1 {
                    return Err(Error::Parameter(format!("spike entry {b} is not binary")));
                }
                m.bits[i * cols + t] = b;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize) -> u8 {
        self.bits[i * self.cols + t]
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: usize, fired: bool) {
        self.bits[i * self.cols + t] = fired as u8;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn spike_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Per-neuron flag: fired at least once in the window.
    pub fn activity(&self) -> Vec<bool> {
        (0..self.rows).map(|i| self.row(i).contains(&1)).collect()
    }

    /// Column-wise concatenation of windows recorded on the same neurons.
    pub fn hstack(parts: &[SpikeStateMatrix]) -> Result<Self> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::Dimension("row counts differ across stacked windows".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut bits = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                bits.extend_from_slice(p.row(i));
            }
        }
        Ok(Self { rows, cols, bits })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowStart {
    /// Reset potentials and spike flags before the first tick.
    Fresh,
    /// Continue from the state as given.
    Carry,
}

/// Drives the network for `window` ticks; `inputs[t]` is the external current at tick `t`.
pub fn run_window<S: Synapses>(
    weights: &S,
    inputs: &[Vec<f64>],
    params: &LifParams,
    window: usize,
    state: &mut NeuronState,
    start: WindowStart,
) -> Result<SpikeStateMatrix> {
    if window == 0 {
        return Err(Error::EmptyWindow);
    }
    if inputs.len() < window {
        return Err(Error::Dimension(format!(
            "input covers {} ticks of a {}-tick window",
            inputs.len(),
            window
        )));
    }
    if start == WindowStart::Fresh {
        state.reset();
    }
    let mut out = SpikeStateMatrix::zeros(state.len(), window);
    let mut scratch = Vec::with_capacity(state.len());
    for (t, input) in inputs.iter().take(window).enumerate() {
        lif_tick_in_place(state, input, weights, params, &mut scratch)?;
        for (i, _) in state.fired.iter().enumerate().filter(|(_, &f)| f) {
            out.set(i, t, true);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(current: f64, v0: f64) -> (NeuronState, Vec<bool>) {
        let state = NeuronState {
            v: vec![v0],
            fired: vec![false],
        };
        lif_tick(&state, &[current], &WeightMatrix::zeros(1, 1), &LifParams::default()).unwrap()
    }

    #[test]
    fn half_step_toward_input() {
        let (s, spikes) = single(1.0, 0.0);
        assert_eq!(s.v[0], 0.5);
        assert_eq!(spikes, vec![false]);
    }

    #[test]
    fn rest_is_fixed_point() {
        let (s, spikes) = single(0.0, 0.0);
        assert_eq!(s.v[0], 0.0);
        assert_eq!(spikes, vec![false]);
    }

    #[test]
    fn crossing_threshold_spikes_and_resets() {
        // 0.9 + (2.2 - 0.9) / 2 = 1.55
        let (s, spikes) = single(2.2, 0.9);
        assert_eq!(spikes, vec![true]);
        assert_eq!(s.v[0], 0.0);
    }

    #[test]
    fn recurrent_input_uses_previous_spikes() {
        let mut w = WeightMatrix::zeros(2, 2);
        w.set(0, 1, 3.0);
        let state = NeuronState {
            v: vec![0.0, 0.0],
            fired: vec![true, false],
        };
        let (s, spikes) = lif_tick(&state, &[0.0, 0.0], &w, &LifParams::default()).unwrap();
        assert_eq!(spikes, vec![false, true]);
        assert_eq!(s.v, vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected_without_update() {
        let state = NeuronState::resting(3);
        let err = lif_tick(&state, &[1.0, 1.0], &WeightMatrix::zeros(3, 3), &LifParams::default());
        assert!(matches!(err, Err(Error::Dimension(_))));
        let err = lif_tick(&state, &[1.0; 3], &WeightMatrix::zeros(2, 2), &LifParams::default());
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn params_validation() {
        assert!(LifParams::default().validate().is_ok());
        let bad = LifParams { tau_m: 0.0, ..LifParams::default() };
        assert!(bad.validate().is_err());
        let bad = LifParams { v_reset: 1.0, ..LifParams::default() };
        assert!(bad.validate().is_err());
        let bad = LifParams { ticks_per_step: 0, ..LifParams::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_window_is_an_error() {
        let mut state = NeuronState::resting(2);
        let r = run_window(&WeightMatrix::zeros(2, 2), &[], &LifParams::default(), 0, &mut state, WindowStart::Fresh);
        assert!(matches!(r, Err(Error::EmptyWindow)));
    }

    #[test]
    fn silent_input_gives_silent_window() {
        let mut state = NeuronState::resting(4);
        let inputs = vec![vec![0.0; 4]; 10];
        let s = run_window(&WeightMatrix::zeros(4, 4), &inputs, &LifParams::default(), 10, &mut state, WindowStart::Fresh)
            .unwrap();
        assert_eq!((s.rows(), s.cols()), (4, 10));
        assert_eq!(s.spike_count(), 0);
    }

    /// Smallest n with I * (1 - (1 - 1/tau)^n) >= v_th, starting from v = 0.
    fn closed_form_period(current: f64, p: &LifParams) -> usize {
        let decay = 1.0 - 1.0 / p.tau_m;
        ((1.0 - p.v_th / current).ln() / decay.ln()).ceil() as usize
    }

    #[test]
    fn constant_drive_is_periodic() {
        let p = LifParams::default();
        for &current in &[1.2, 1.5, 2.0, 3.0, 1.05] {
            let period = closed_form_period(current, &p);
            let mut state = NeuronState::resting(1);
            let inputs = vec![vec![current]; 60];
            let s = run_window(&WeightMatrix::zeros(1, 1), &inputs, &p, 60, &mut state, WindowStart::Fresh).unwrap();
            for t in 0..60 {
                assert_eq!(s.get(0, t) == 1, (t + 1) % period == 0, "I={current} t={t} period={period}");
            }
        }
        // Where leak is negligible the period reduces to ceil(v_th / (I / tau_m)).
        assert_eq!(closed_form_period(2.0, &p), 1);
        assert_eq!(closed_form_period(1.5, &p), 2);
    }

    #[test]
    fn carry_keeps_state_between_windows() {
        let p = LifParams::default();
        let w = WeightMatrix::zeros(1, 1);
        let inputs = vec![vec![1.5]; 1];
        let mut state = NeuronState::resting(1);
        let a = run_window(&w, &inputs, &p, 1, &mut state, WindowStart::Fresh).unwrap();
        let b = run_window(&w, &inputs, &p, 1, &mut state, WindowStart::Carry).unwrap();
        let c = run_window(&w, &inputs, &p, 1, &mut state, WindowStart::Fresh).unwrap();
        assert_eq!((a.get(0, 0), b.get(0, 0), c.get(0, 0)), (0, 1, 0));
    }

    #[test]
    fn sparse_and_dense_agree() {
        let mut dense = WeightMatrix::zeros(3, 3);
        dense.set(0, 1, 1.5);
        dense.set(2, 0, 0.7);
        dense.set(1, 2, 2.5);
        let sparse = SparseSynapses::from_edges(3, dense.nonzero_entries().collect()).unwrap();
        let spikes = [true, true, true];
        let (mut a, mut b) = (vec![0.0; 3], vec![0.0; 3]);
        dense.accumulate(&spikes, &mut a);
        sparse.accumulate(&spikes, &mut b);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn subthreshold_follows_geometric_solution(v0 in 0.0f64..0.5, current in 0.0f64..0.99, ticks in 1usize..40) {
            // v_t = I + (v0 - I) (1 - 1/tau)^t while below threshold.
            let p = LifParams::default();
            let mut state = NeuronState { v: vec![v0], fired: vec![false] };
            let mut scratch = Vec::new();
            for _ in 0..ticks {
                lif_tick_in_place(&mut state, &[current], &WeightMatrix::zeros(1, 1), &p, &mut scratch).unwrap();
                prop_assert!(!state.fired[0]);
            }
            let exact = current + (v0 - current) * (1.0 - 1.0 / p.tau_m).powi(ticks as i32);
            prop_assert!((state.v[0] - exact).abs() < 1e-9);
        }

        #[test]
        fn reset_law_and_floor(weights in proptest::collection::vec(0.0f64..3.0, 16), drive in proptest::collection::vec(0.0f64..3.0, 4), ticks in 1usize..30) {
            let p = LifParams::default();
            let w = WeightMatrix::from_vec(4, 4, weights).unwrap();
            let mut state = NeuronState::resting(4);
            let mut scratch = Vec::new();
            for _ in 0..ticks {
                lif_tick_in_place(&mut state, &drive, &w, &p, &mut scratch).unwrap();
                for &v in &state.v {
                    prop_assert!(v < p.v_th);
                    prop_assert!(v >= p.v_reset.min(0.0));
                }
            }
        }

        #[test]
        fn deterministic_windows(weights in proptest::collection::vec(0.0f64..3.0, 9), drive in proptest::collection::vec(0.0f64..3.0, 3)) {
            let p = LifParams::default();
            let w = WeightMatrix::from_vec(3, 3, weights).unwrap();
            let inputs = vec![drive; 25];
            let a = run_window(&w, &inputs, &p, 25, &mut NeuronState::resting(3), WindowStart::Fresh).unwrap();
            let b = run_window(&w, &inputs, &p, 25, &mut NeuronState::resting(3), WindowStart::Fresh).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn monotone_drive(lo in 0.0f64..3.0, extra in 0.0f64..3.0, ticks in 1usize..60) {
            let p = LifParams::default();
            let w = WeightMatrix::zeros(1, 1);
            let run = |i: f64| {
                run_window(&w, &vec![vec![i]; ticks], &p, ticks, &mut NeuronState::resting(1), WindowStart::Fresh)
                    .unwrap()
                    .spike_count()
            };
            prop_assert!(run(lo + extra) >= run(lo));
        }
    }
}
