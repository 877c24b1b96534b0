//! Synaptic learning rules.
//!
//! Each neuron carries a spike trace `e' = tau_bcm * e + o` and a sliding
//! threshold `theta` (moving average of `e^2`). The BCM weight change is
//!
//! ```text
//! dm/dt = phi(e_post) * e_pre - eps * m,    phi(e) = e * (e - theta)
//! ```
//!
//! DA-BCM multiplies the whole right-hand side by the dopamine signal. A
//! pair-based STDP rule is provided as an unsupervised baseline.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self {
            a_plus: 0.01,
            a_minus: 0.012,
            tau_plus: 5.0,
            tau_minus: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticityParams {
    /// Weight decay coefficient.
    pub epsilon: f64,
    /// Scale applied to dm/dt per update.
    pub learning_rate: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Trace decay per tick.
    pub tau_bcm: f64,
    /// Averaging horizon of the sliding threshold, in ticks.
    pub theta_window: f64,
    pub stdp: StdpParams,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        Self {
            epsilon: 0.001,
            learning_rate: 0.01,
            w_min: 0.0,
            w_max: 8.0,
            tau_bcm: 0.9,
            theta_window: 50.0,
            stdp: StdpParams::default(),
        }
    }
}

impl PlasticityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::Parameter(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.w_min < self.w_max) {
            return Err(Error::Parameter(format!(
                "w_min ({}) must be below w_max ({})",
                self.w_min, self.w_max
            )));
        }
        if !(0.0..1.0).contains(&self.tau_bcm) {
            return Err(Error::Parameter(format!("tau_bcm must be in [0, 1), got {}", self.tau_bcm)));
        }
        if !(self.theta_window >= 1.0) {
            return Err(Error::Parameter(format!("theta_window must be >= 1, got {}", self.theta_window)));
        }
        if !(self.stdp.tau_plus > 0.0 && self.stdp.tau_minus > 0.0) {
            return Err(Error::Parameter("STDP time constants must be > 0".into()));
        }
        Ok(())
    }
}

/// Learning rule applied to one layer of synapses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Weights frozen.
    None,
    Stdp,
    DaBcm,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::None => "none",
            Rule::Stdp => "stdp",
            Rule::DaBcm => "da-bcm",
        })
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Rule::None),
            "stdp" => Ok(Rule::Stdp),
            "da-bcm" | "dabcm" | "da_bcm" => Ok(Rule::DaBcm),
            other => Err(Error::Config(format!("unknown learning rule `{other}`"))),
        }
    }
}

#[inline]
pub fn update_trace(e: f64, spiked: bool, tau_bcm: f64) -> f64 {
    tau_bcm * e + if spiked { 1.0 } else { 0.0 }
}

/// BCM modification function; negative iff `0 < e_post < theta`.
#[inline]
pub fn bcm_phi(e_post: f64, theta_m: f64) -> f64 {
    e_post * (e_post - theta_m)
}

#[inline]
pub fn update_theta(theta_m: f64, e_post: f64, window: f64) -> f64 {
    let k = 1.0 / window;
    (1.0 - k) * theta_m + k * e_post * e_post
}

#[inline]
fn bcm_drift(m: f64, e_pre: f64, e_post: f64, theta_m: f64, params: &PlasticityParams) -> f64 {
    bcm_phi(e_post, theta_m) * e_pre - params.epsilon * m
}

#[inline]
pub fn bcm_update(m: f64, e_pre: f64, e_post: f64, theta_m: f64, params: &PlasticityParams) -> f64 {
    (m + params.learning_rate * bcm_drift(m, e_pre, e_post, theta_m, params)).clamp(params.w_min, params.w_max)
}

/// Unclamped DA-BCM step, `m + lr * da * (phi(e_post) e_pre - eps m)`.
#[inline]
pub fn da_bcm_raw(m: f64, e_pre: f64, e_post: f64, theta_m: f64, da: f64, params: &PlasticityParams) -> f64 {
    m + params.learning_rate * da * bcm_drift(m, e_pre, e_post, theta_m, params)
}

#[inline]
pub fn da_bcm_update(m: f64, e_pre: f64, e_post: f64, theta_m: f64, da: f64, params: &PlasticityParams) -> f64 {
    da_bcm_raw(m, e_pre, e_post, theta_m, da, params).clamp(params.w_min, params.w_max)
}

/// Pair-based exponential STDP; `lag` is post spike time minus pre spike time.
#[inline]
pub fn stdp_update(m: f64, lag: f64, params: &PlasticityParams) -> f64 {
    let s = &params.stdp;
    let dm = if lag > 0.0 {
        s.a_plus * (-lag / s.tau_plus).exp()
    } else if lag < 0.0 {
        -s.a_minus * (lag / s.tau_minus).exp()
    } else {
        0.0
    };
    (m + dm).clamp(params.w_min, params.w_max)
}

/// Trace and sliding threshold for a population of neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    pub e: Vec<f64>,
    pub theta: Vec<f64>,
}

impl TraceState {
    pub fn new(n: usize) -> Self {
        Self {
            e: vec![0.0; n],
            theta: vec![0.0; n],
        }
    }

    /// Advance traces by one tick, then slide the thresholds.
    pub fn tick(&mut self, spikes: &[bool], params: &PlasticityParams) {
        for ((e, theta), &s) in self.e.iter_mut().zip(self.theta.iter_mut()).zip(spikes) {
            *e = update_trace(*e, s, params.tau_bcm);
            *theta = update_theta(*theta, *e, params.theta_window);
        }
    }
}
