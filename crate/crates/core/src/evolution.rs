//! Structure search over liquid connectivity.
//!
//! A population of binary connectivity matrices is improved by mutation only.
//! Each generation, every individual spawns offspring with one added edge
//! each; the best offspring replaces its parent unless it is worse. Early
//! generations then keep the fittest part of the population and refill the
//! rest with fresh random liquids; late generations shrink the population to
//! the survivors that are returned.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::encoder::liquid_drive;
use crate::error::{Error, Result};
use crate::rank::separation_property;
use crate::seed::{self, stream};
use crate::snn::{run_window, LifParams, NeuronState, SparseSynapses, SpikeStateMatrix, WeightMatrix, WindowStart};
use crate::textio;
use crate::topology::{edge_weight, init_liquid, InputProjection, LiquidGrid, LiquidWeights, TopologyParams};

/// Binary liquid connectivity; bit `(i, j)` set means a synapse `i -> j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    grid: LiquidGrid,
    d_th: f64,
    bits: Vec<u8>,
}

impl Chromosome {
    pub fn empty(grid: LiquidGrid, d_th: f64) -> Self {
        let n = grid.neurons();
        Self {
            grid,
            d_th,
            bits: vec![0; n * n],
        }
    }

    /// Checks that only distance-eligible, off-diagonal bits are set.
    pub fn from_bits(grid: LiquidGrid, d_th: f64, bits: Vec<u8>) -> Result<Self> {
        let n = grid.neurons();
        if bits.len() != n * n {
            return Err(Error::Dimension(format!("{} bits for {n} neurons", bits.len())));
        }
        for (k, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::Config(format!("chromosome entry {b} is not binary")));
            }
            if b == 1 && !grid.eligible(k / n, k % n, d_th) {
                return Err(Error::Config(format!("edge {} -> {} violates the distance mask", k / n, k % n)));
            }
        }
        Ok(Self {
            grid,
            d_th,
            bits,
        })
    }

    pub fn from_weights(grid: LiquidGrid, d_th: f64, weights: &LiquidWeights) -> Result<Self> {
        let bits = weights.w.as_slice().iter().map(|&w| u8::from(w != 0.0)).collect();
        Self::from_bits(grid, d_th, bits)
    }

    /// A freshly initialized random liquid.
    pub fn random(grid: LiquidGrid, topology: &TopologyParams, seed: u64) -> Result<Self> {
        Self::from_weights(grid, topology.d_th, &init_liquid(&grid, topology, seed)?)
    }

    pub fn grid(&self) -> &LiquidGrid {
        &self.grid
    }

    pub fn d_th(&self) -> f64 {
        self.d_th
    }

    pub fn neurons(&self) -> usize {
        self.grid.neurons()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.neurons() + j] == 1
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn density(&self) -> f64 {
        self.edge_count() as f64 / self.bits.len() as f64
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.neurons();
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(move |(k, _)| (k / n, k % n))
    }

    /// `alpha * p(d)` on every set bit.
    pub fn to_weights(&self, topology: &TopologyParams) -> LiquidWeights {
        let n = self.neurons();
        let mut w = WeightMatrix::zeros(n, n);
        for (i, j) in self.edges() {
            w.set(i, j, edge_weight(&self.grid, topology, i, j));
        }
        LiquidWeights { w }
    }

    pub fn to_synapses(&self, topology: &TopologyParams) -> SparseSynapses {
        let edges = self
            .edges()
            .map(|(i, j)| (i, j, edge_weight(&self.grid, topology, i, j)))
            .collect();
        SparseSynapses::from_edges(self.neurons(), edges).expect("edges index valid neurons")
    }

    pub fn to_text(&self) -> String {
        let n = self.neurons();
        textio::format_bits(n, n, &self.bits)
    }

    pub fn from_text(text: &str, grid: LiquidGrid, d_th: f64) -> Result<Self> {
        let (rows, cols, bits) = textio::parse_bits(text)?;
        if rows != grid.neurons() || cols != grid.neurons() {
            return Err(Error::Dimension(format!(
                "chromosome is {rows}x{cols}, grid has {} neurons",
                grid.neurons()
            )));
        }
        Self::from_bits(grid, d_th, bits)
    }

    fn set(&mut self, i: usize, j: usize) {
        let n = self.neurons();
        self.bits[i * n + j] = 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    pub n_ini: usize,
    pub n_opt: usize,
    pub offspring_per_individual: usize,
    pub g_th: usize,
    pub generations: usize,
    /// Fraction of the population replaced by fresh random individuals before `g_th`.
    pub rate: f64,
    pub probe_window: usize,
    /// Mutations that would push edge density above this are skipped.
    pub density_cap: f64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            n_ini: 100,
            n_opt: 20,
            offspring_per_individual: 10,
            g_th: 20,
            generations: 30,
            rate: 0.2,
            probe_window: 100,
            density_cap: 0.02,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_opt == 0 || self.n_opt > self.n_ini {
            return Err(Error::Parameter(format!(
                "need 1 <= n_opt ({}) <= n_ini ({})",
                self.n_opt, self.n_ini
            )));
        }
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::Parameter(format!("rate must be in [0, 1), got {}", self.rate)));
        }
        if self.generations < self.g_th {
            return Err(Error::Parameter(format!(
                "generations ({}) must be >= g_th ({})",
                self.generations, self.g_th
            )));
        }
        if self.offspring_per_individual == 0 {
            return Err(Error::Parameter("offspring_per_individual must be >= 1".into()));
        }
        if self.probe_window == 0 {
            return Err(Error::EmptyWindow);
        }
        if !(self.density_cap > 0.0 && self.density_cap <= 1.0) {
            return Err(Error::Parameter(format!("density_cap must be in (0, 1], got {}", self.density_cap)));
        }
        Ok(())
    }
}

/// Everything needed to score a chromosome on a task.
#[derive(Debug, Clone)]
pub struct FitnessContext {
    pub topology: TopologyParams,
    pub lif: LifParams,
    /// Liquid current per tick, one train per ensemble member.
    trains: Vec<Vec<Vec<f64>>>,
}

impl FitnessContext {
    /// Each encoded observation in `ensemble` is presented for
    /// `probe_window / ensemble.len()` ticks (at least one) from a fresh state.
    pub fn new(
        ensemble: &[Vec<f64>],
        projection: &InputProjection,
        input_gain: f64,
        probe_window: usize,
        topology: TopologyParams,
        lif: LifParams,
    ) -> Result<Self> {
        if ensemble.is_empty() {
            return Err(Error::Empty("input ensemble"));
        }
        if probe_window == 0 {
            return Err(Error::EmptyWindow);
        }
        let ticks = (probe_window / ensemble.len()).max(1);
        let trains = ensemble
            .iter()
            .map(|currents| liquid_drive(currents, projection, input_gain, ticks))
            .collect::<Result<_>>()?;
        Ok(Self { topology, lif, trains })
    }

    /// Builds a context from raw liquid current trains.
    pub fn from_trains(trains: Vec<Vec<Vec<f64>>>, topology: TopologyParams, lif: LifParams) -> Result<Self> {
        if trains.is_empty() || trains.iter().any(Vec::is_empty) {
            return Err(Error::Empty("input ensemble"));
        }
        Ok(Self { topology, lif, trains })
    }

    pub fn ensemble_len(&self) -> usize {
        self.trains.len()
    }

    /// Concatenated spike-state matrix of the liquid over the whole ensemble.
    pub fn probe(&self, chrom: &Chromosome) -> Result<SpikeStateMatrix> {
        let syn = chrom.to_synapses(&self.topology);
        let mut state = NeuronState::resting(chrom.neurons());
        let parts = self
            .trains
            .iter()
            .map(|train| run_window(&syn, train, &self.lif, train.len(), &mut state, WindowStart::Fresh))
            .collect::<Result<Vec<_>>>()?;
        SpikeStateMatrix::hstack(&parts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fitness {
    pub sp: usize,
    /// Whether each liquid neuron fired anywhere in the probe.
    pub activity: Vec<bool>,
}

pub fn evaluate_fitness(chrom: &Chromosome, ctx: &FitnessContext) -> Result<Fitness> {
    let s = ctx.probe(chrom)?;
    Ok(Fitness {
        sp: separation_property(&s),
        activity: s.activity(),
    })
}

/// Adds one edge from an active neuron to a nearby inactive one.
///
/// Returns the mutated chromosome and whether an edge was added. The target
/// is drawn uniformly from inactive neurons that still have an unused edge
/// from an active neighbour within the distance cutoff; the source is drawn
/// uniformly from those neighbours.
pub fn mutate(chrom: &Chromosome, activity: &[bool], density_cap: f64, rng: &mut seed::Rng) -> (Chromosome, bool) {
    let n = chrom.neurons();
    let max_edges = (density_cap * (n * n) as f64).floor() as usize;
    if activity.len() != n || chrom.edge_count() + 1 > max_edges {
        return (chrom.clone(), false);
    }
    let sources = |j: usize| -> Vec<usize> {
        (0..n)
            .filter(|&i| activity[i] && !chrom.get(i, j) && chrom.grid.eligible(i, j, chrom.d_th()))
            .collect()
    };
    let candidates: Vec<usize> = (0..n).filter(|&j| !activity[j] && !sources(j).is_empty()).collect();
    let Some(&target) = candidates.choose(rng) else {
        return (chrom.clone(), false);
    };
    let from = sources(target);
    let source = from[rng.gen_range(0..from.len())];
    let mut child = chrom.clone();
    child.set(source, target);
    (child, true)
}

/// Per-generation fitness of every individual. Generation 0 is the initial population.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitnessRecord {
    pub generations: Vec<Vec<usize>>,
}

impl FitnessRecord {
    pub fn best(&self) -> Vec<usize> {
        self.generations.iter().map(|g| g.iter().copied().max().unwrap_or(0)).collect()
    }

    pub fn min(&self) -> Vec<usize> {
        self.generations.iter().map(|g| g.iter().copied().min().unwrap_or(0)).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.generations
            .iter()
            .map(|g| g.iter().sum::<usize>() as f64 / g.len().max(1) as f64)
            .collect()
    }

    /// `generation,best,mean,min` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best,mean,min\n");
        for (g, ((b, m), lo)) in self.best().iter().zip(self.mean()).zip(self.min()).enumerate() {
            out.push_str(&format!("{g},{b},{m},{lo}\n"));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub fitness: Fitness,
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    /// `n_opt` individuals by descending fitness.
    pub survivors: Vec<Individual>,
    pub record: FitnessRecord,
}

fn fresh_individual(ctx: &FitnessContext, grid: LiquidGrid, seed: u64) -> Result<Individual> {
    let chromosome = Chromosome::random(grid, &ctx.topology, seed)?;
    let fitness = evaluate_fitness(&chromosome, ctx)?;
    Ok(Individual { chromosome, fitness })
}

fn best_offspring(
    parent: &Individual,
    ctx: &FitnessContext,
    params: &EvolutionParams,
    master: u64,
    generation: usize,
    index: usize,
) -> Result<Individual> {
    let mut best: Option<Individual> = None;
    for o in 0..params.offspring_per_individual {
        let mut rng = seed::rng(master, &[stream::MUTATION, generation as u64, index as u64, o as u64]);
        let (chromosome, changed) = mutate(&parent.chromosome, &parent.fitness.activity, params.density_cap, &mut rng);
        let fitness = if changed {
            evaluate_fitness(&chromosome, ctx)?
        } else {
            parent.fitness.clone()
        };
        if best.as_ref().is_none_or(|b| fitness.sp > b.fitness.sp) {
            best = Some(Individual { chromosome, fitness });
        }
    }
    let best = best.expect("at least one offspring");
    Ok(if best.fitness.sp >= parent.fitness.sp {
        best
    } else {
        parent.clone()
    })
}

/// Stable ordering by descending fitness; ties keep population order.
fn rank_population(pop: &mut Vec<Individual>) {
    let mut indexed: Vec<(usize, Individual)> = pop.drain(..).enumerate().collect();
    indexed.sort_by(|(ia, a), (ib, b)| b.fitness.sp.cmp(&a.fitness.sp).then(ia.cmp(ib)));
    pop.extend(indexed.into_iter().map(|(_, ind)| ind));
}

pub fn evolve(params: &EvolutionParams, grid: LiquidGrid, ctx: &FitnessContext, master: u64) -> Result<EvolutionOutcome> {
    params.validate()?;
    ctx.topology.validate()?;
    let mut pop: Vec<Individual> = (0..params.n_ini)
        .into_par_iter()
        .map(|k| fresh_individual(ctx, grid, seed::derive(master, &[stream::INITIAL, k as u64])))
        .collect::<Result<_>>()?;
    let mut record = FitnessRecord::default();
    record.generations.push(pop.iter().map(|ind| ind.fitness.sp).collect());

    for g in 1..=params.generations {
        pop = pop
            .par_iter()
            .enumerate()
            .map(|(i, parent)| best_offspring(parent, ctx, params, master, g, i))
            .collect::<Result<_>>()?;
        record.generations.push(pop.iter().map(|ind| ind.fitness.sp).collect());

        rank_population(&mut pop);
        if g < params.g_th {
            let keep = ((1.0 - params.rate) * params.n_ini as f64).round() as usize;
            pop.truncate(keep.max(params.n_opt));
            let missing = params.n_ini - pop.len();
            let fresh: Vec<Individual> = (0..missing)
                .into_par_iter()
                .map(|k| fresh_individual(ctx, grid, seed::derive(master, &[stream::FRESH, g as u64, k as u64])))
                .collect::<Result<_>>()?;
            pop.extend(fresh);
        } else {
            pop.truncate(params.n_opt);
        }
    }
    rank_population(&mut pop);
    pop.truncate(params.n_opt);
    Ok(EvolutionOutcome { survivors: pop, record })
}
