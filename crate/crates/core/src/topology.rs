//! Liquid layer and readout construction.
//!
//! Liquid neurons sit on a 2-D grid. A candidate edge `i -> j` survives if the
//! pair is within the distance cutoff, is not a self-loop, and is kept by a
//! random sparse mask; its weight is `alpha * p(d)` with
//! `p(d) = (exp(-1/lambda^2))^(d^2)`.
//!
//! The readout is wired from a probe run: liquid neurons are split at random
//! into one class per readout neuron, and only neurons that fired during the
//! probe get a (random, positive) weight to their class.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed;
use crate::snn::{SpikeStateMatrix, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiquidGrid {
    pub width: usize,
    pub height: usize,
}

impl Default for LiquidGrid {
    fn default() -> Self {
        Self { width: 10, height: 10 }
    }
}

impl LiquidGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter("grid dimensions must be positive".into()));
        }
        Ok(Self { width, height })
    }

    pub fn neurons(&self) -> usize {
        self.width * self.height
    }

    /// Integer grid coordinate `(x, y)` of neuron `i` (row-major).
    pub fn position(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    /// Euclidean distance between two neurons in grid units.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = self.position(i);
        let (xj, yj) = self.position(j);
        let dx = xi as f64 - xj as f64;
        let dy = yi as f64 - yj as f64;
        (dx * dx + dy * dy).sqrt()
    }

    /// True when an edge between `i` and `j` is allowed by the distance mask.
    pub fn eligible(&self, i: usize, j: usize, d_th: f64) -> bool {
        i != j && self.distance(i, j) <= d_th
    }

    /// Number of ordered pairs allowed by the distance mask.
    pub fn eligible_pairs(&self, d_th: f64) -> usize {
        let n = self.neurons();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.eligible(i, j, d_th)).count())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyParams {
    /// Connection-locality constant.
    pub lambda: f64,
    /// Liquid weight scale.
    pub alpha: f64,
    /// Distance cutoff in grid units.
    pub d_th: f64,
    /// Fraction of candidate connections kept at initialization.
    pub sparsity: f64,
    /// Readout (and input projection) weight scale.
    pub beta: f64,
    /// Liquid neurons driven by each input neuron.
    pub input_fan_out: usize,
}

impl Default for TopologyParams {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            alpha: 4.0,
            d_th: 3.0,
            sparsity: 0.01,
            beta: 4.0,
            input_fan_out: 4,
        }
    }
}

impl TopologyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Parameter(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Parameter(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::Parameter(format!("sparsity must be in (0, 1], got {}", self.sparsity)));
        }
        if !(self.d_th > 0.0) {
            return Err(Error::Parameter(format!("d_th must be > 0, got {}", self.d_th)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Parameter(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.input_fan_out == 0 {
            return Err(Error::Parameter("input_fan_out must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(e^(-1/lambda^2))^(d^2)`.
pub fn connection_probability(d: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be > 0, got {lambda}")));
    }
    if !(d >= 0.0) {
        return Err(Error::Parameter(format!("distance must be >= 0, got {d}")));
    }
    Ok((-1.0 / (lambda * lambda)).exp().powf(d * d))
}

/// Weight carried by an edge between `i` and `j`: `alpha * p(d(i, j))`.
pub fn edge_weight(grid: &LiquidGrid, params: &TopologyParams, i: usize, j: usize) -> f64 {
    params.alpha
        * connection_probability(grid.distance(i, j), params.lambda)
            .expect("validated lambda")
}

/// Liquid-to-liquid weights; entry `(i, j)` is the synapse `i -> j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidWeights {
    pub w: WeightMatrix,
}

impl LiquidWeights {
    pub fn density(&self) -> f64 {
        let n = self.w.rows();
        self.w.nonzero_count() as f64 / (n * n) as f64
    }
}

pub fn init_liquid(grid: &LiquidGrid, params: &TopologyParams, seed: u64) -> Result<LiquidWeights> {
    params.validate()?;
    let n = grid.neurons();
    let mut rng = seed::rng(seed, &[seed::stream::LIQUID]);
    let mut w = WeightMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // One draw per entry keeps the mask independent of the distance cutoff.
            let keep = rng.gen::<f64>() < params.sparsity;
            if keep && grid.eligible(i, j, params.d_th) {
                w.set(i, j, edge_weight(grid, params, i, j));
            }
        }
    }
    Ok(LiquidWeights { w })
}

/// Liquid-to-readout weights plus the class each liquid neuron belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights {
    /// `liquid x readout`.
    pub w: WeightMatrix,
    pub assignment: Vec<usize>,
}

pub fn init_readout(probe: &SpikeStateMatrix, n_readout: usize, beta: f64, seed: u64) -> Result<ReadoutWeights> {
    let n_liquid = probe.rows();
    if n_readout == 0 {
        return Err(Error::Parameter("readout needs at least one neuron".into()));
    }
    if n_readout > n_liquid {
        return Err(Error::Parameter(format!(
            "{n_readout} readout classes for {n_liquid} liquid neurons"
        )));
    }
    let mut rng = seed::rng(seed, &[seed::stream::READOUT]);
    let mut order: Vec<usize> = (0..n_liquid).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0; n_liquid];
    for (slot, &neuron) in order.iter().enumerate() {
        assignment[neuron] = slot % n_readout;
    }
    let active = probe.activity();
    let mut w = WeightMatrix::zeros(n_liquid, n_readout);
    for i in 0..n_liquid {
        // Uniform on (0, 1]; drawn for every neuron so wiring is stable under activity changes.
        let rand_weight = 1.0 - rng.gen::<f64>();
        if active[i] {
            w.set(i, assignment[i], beta * rand_weight);
        }
    }
    Ok(ReadoutWeights { w, assignment })
}

/// Fixed input wiring: each input neuron drives `fan_out` distinct liquid neurons with weight `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputProjection {
    /// `inputs x liquid`.
    pub w: WeightMatrix,
}

impl InputProjection {
    pub fn inputs(&self) -> usize {
        self.w.rows()
    }

    pub fn liquid(&self) -> usize {
        self.w.cols()
    }

    pub fn edge_count(&self) -> usize {
        self.w.nonzero_count()
    }
}

pub fn init_input_projection(
    n_inputs: usize,
    n_liquid: usize,
    params: &TopologyParams,
    seed: u64,
) -> Result<InputProjection> {
    if params.input_fan_out > n_liquid {
        return Err(Error::Parameter(format!(
            "input fan-out {} exceeds liquid size {n_liquid}",
            params.input_fan_out
        )));
    }
    let mut rng = seed::rng(seed, &[seed::stream::INPUT]);
    let mut w = WeightMatrix::zeros(n_inputs, n_liquid);
    let all: Vec<usize> = (0..n_liquid).collect();
    for k in 0..n_inputs {
        for &j in all.choose_multiple(&mut rng, params.input_fan_out) {
            w.set(k, j, params.beta);
        }
    }
    Ok(InputProjection { w })
}
