//! Coarsen, solve, lift and refine.
//!
//! The quantum strategy screens spectral coarsenings, solves the winning
//! coarse graph with iterative QAOA, lifts the best feasible coarse
//! bipartition and refines it with FM on the fine graph. The classical
//! strategy skips the QAOA step and lifts the screening's own best coarse
//! partition instead.

use serde::{Deserialize, Serialize};

use crate::coarsen::{default_dimension, lift, screen_coarsenings, CoarseMap, RoundStats, ScreenConfig};
use crate::coarsen::{DEFAULT_SCREEN_ROUNDS, DEFAULT_SCREEN_TRIALS};
use crate::encoding::{GppObjective, DEFAULT_LAMBDA, DEFAULT_NU};
use crate::error::{Error, Result};
use crate::fm::{fm_refine, FmConfig};
use crate::graph::{Assignment, WeightedGraph};
use crate::iterative::{run_iterative_qaoa, IterationConfig, IterativeOutcome};
use crate::rng::SeedStream;

pub const DEFAULT_COARSE_SIZE: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Coarse graph size, i.e. the qubit count of the QAOA step.
    pub k: usize,
    /// Embedding dimension; `None` picks `min(6, k − 1, n − 1)`.
    pub d: Option<usize>,
    pub nu: f64,
    pub lambda: f64,
    pub n_screen: usize,
    pub n_trials: usize,
    pub iteration: IterationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_COARSE_SIZE,
            d: None,
            nu: DEFAULT_NU,
            lambda: DEFAULT_LAMBDA,
            n_screen: DEFAULT_SCREEN_ROUNDS,
            n_trials: DEFAULT_SCREEN_TRIALS,
            iteration: IterationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument("coarse size k must be at least 2".into()));
        }
        if self.k > self.iteration.qubit_cap {
            return Err(Error::CapExceeded {
                what: "coarse graph qubit count",
                requested: self.k,
                cap: self.iteration.qubit_cap,
            });
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(Error::InvalidArgument(format!("nu must lie in [0, 0.5), got {}", self.nu)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.d == Some(0) {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        if self.n_screen == 0 || self.n_trials == 0 {
            return Err(Error::InvalidArgument("screening needs at least one round and one trial".into()));
        }
        self.iteration.validate()
    }

    fn screen_config(&self, n: usize) -> ScreenConfig {
        let k = self.k.min(n);
        ScreenConfig {
            k,
            d: self.d.unwrap_or_else(|| default_dimension(k, n)).min(n - 1),
            n_screen: self.n_screen,
            n_trials: self.n_trials,
            nu: self.nu,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoarseSource {
    /// Best feasible entry of the QAOA pool.
    Qaoa,
    /// The pool held no feasible entry; the screening partition was used.
    ScreenFallback,
    /// Classical strategy.
    Screen,
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub assignment: Assignment,
    pub map: CoarseMap,
    /// Coarse bipartition that was lifted.
    pub coarse_bits: Vec<u8>,
    pub source: CoarseSource,
    pub screen_rounds: Vec<RoundStats>,
    pub screen_round: usize,
    pub proxy_cost: f64,
    pub iterative: Option<IterativeOutcome>,
}

fn check_input(g: &WeightedGraph) -> Result<()> {
    if g.n_vertices() < 2 {
        return Err(Error::InvalidArgument("partitioning needs at least two vertices".into()));
    }
    if g.total_weight() <= 0.0 {
        return Err(Error::InvalidGraph("total vertex weight must be positive".into()));
    }
    Ok(())
}

fn finish(g: &WeightedGraph, cm: &CoarseMap, coarse_bits: &[u8], nu: f64) -> Result<Assignment> {
    let fine = Assignment::from_bits(g, lift(coarse_bits, cm)?)?;
    Ok(fm_refine(g, &fine, &FmConfig::with_nu(nu)))
}

/// Screening, iterative QAOA on the coarse graph, lift, FM.
pub fn solve_quantum(g: &WeightedGraph, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutcome> {
    cfg.validate()?;
    check_input(g)?;
    let streams = SeedStream::new(seed);
    let screen = screen_coarsenings(g, &cfg.screen_config(g.n_vertices()), &streams)?;
    let coarse = screen.map.coarse.normalize_weights()?;
    let obj = GppObjective::new(coarse, cfg.lambda, cfg.nu)?;
    let iteration = IterationConfig {
        seed,
        ..cfg.iteration.clone()
    };
    let outcome = run_iterative_qaoa(&obj, &iteration)?;
    let (coarse_bits, source) = match outcome.pool.best_feasible(&obj) {
        Some((_, a)) => (a.bits, CoarseSource::Qaoa),
        None => (screen.coarse_assignment.bits.clone(), CoarseSource::ScreenFallback),
    };
    let assignment = finish(g, &screen.map, &coarse_bits, cfg.nu)?;
    Ok(PipelineOutcome {
        assignment,
        map: screen.map,
        coarse_bits,
        source,
        screen_rounds: screen.rounds,
        screen_round: screen.round,
        proxy_cost: screen.proxy_cost,
        iterative: Some(outcome),
    })
}

/// Screening followed by lift and FM of the screening's best partition.
pub fn solve_classical(g: &WeightedGraph, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutcome> {
    cfg.validate()?;
    check_input(g)?;
    let streams = SeedStream::new(seed);
    let screen = screen_coarsenings(g, &cfg.screen_config(g.n_vertices()), &streams)?;
    let coarse_bits = screen.coarse_assignment.bits.clone();
    let assignment = finish(g, &screen.map, &coarse_bits, cfg.nu)?;
    Ok(PipelineOutcome {
        assignment,
        map: screen.map,
        coarse_bits,
        source: CoarseSource::Screen,
        screen_rounds: screen.rounds,
        screen_round: screen.round,
        proxy_cost: screen.proxy_cost,
        iterative: None,
    })
}
