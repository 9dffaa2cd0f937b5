//! Iterative, non-variational QAOA driver.
//!
//! Each iteration runs the linear-ramp circuit from the current product
//! state, samples it, optionally refines every distinct sample with one FM
//! pass, scores all candidates with the exact objective and merges them into
//! a cumulative pool. The `top_k` lowest-energy pool entries are weighted by
//! a Boltzmann distribution at inverse temperature `β_T = 9x² + 1`, reduced
//! to a signed per-qubit bias, and turned into the next warm start.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{index_to_bits, index_to_string, bits_to_index, to_ising, truncate_terms, GppObjective};
use crate::error::{Error, Result};
use crate::fm::{fm_pass, FmConfig};
use crate::graph::Assignment;
use crate::qaoa::{build_schedule, sample_with, ProductState, Simulator, DEFAULT_QUBIT_CAP};
use crate::rng::{SeedStream, SAMPLE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub p: usize,
    pub delta: f64,
    pub shots: u64,
    pub n_iter: usize,
    pub top_k: usize,
    pub eta: i8,
    pub c_factor: usize,
    pub fm_on_samples: bool,
    /// Stop once the top-k set is unchanged for two consecutive iterations.
    pub early_stop: bool,
    pub qubit_cap: usize,
    pub seed: u64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            p: 5,
            delta: 1.0,
            shots: 5000,
            n_iter: 10,
            top_k: 50,
            eta: 1,
            c_factor: 55,
            fm_on_samples: true,
            early_stop: false,
            qubit_cap: DEFAULT_QUBIT_CAP,
            seed: 0,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.p == 0 {
            return bad("p must be at least 1");
        }
        if self.n_iter == 0 {
            return bad("n_iter must be at least 1");
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1");
        }
        if self.eta != 1 && self.eta != -1 {
            return bad("eta must be +1 or -1");
        }
        if self.shots == 0 {
            return bad("shots must be at least 1");
        }
        if self.c_factor == 0 {
            return bad("c_factor must be at least 1");
        }
        if !self.delta.is_finite() {
            return bad("delta must be finite");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Raw,
    Refined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    /// Packed bitstring, qubit `j` = bit `j`.
    pub index: u64,
    pub energy: f64,
    pub iteration: usize,
    pub source: Source,
}

/// Deduplicated record of every candidate scored during a run.
#[derive(Clone, Debug, Default)]
pub struct SolutionPool {
    n: usize,
    entries: Vec<PoolEntry>,
    position: HashMap<u64, usize>,
    best: Option<usize>,
}

impl SolutionPool {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn contains(&self, index: u64) -> bool {
        self.position.contains_key(&index)
    }

    /// Insert unless already present; the first sighting keeps its provenance.
    pub fn insert(&mut self, entry: PoolEntry) -> bool {
        if self.position.contains_key(&entry.index) {
            return false;
        }
        let pos = self.entries.len();
        self.position.insert(entry.index, pos);
        let better = match self.best {
            None => true,
            Some(b) => rank(&entry, &self.entries[b]).is_lt(),
        };
        self.entries.push(entry);
        if better {
            self.best = Some(pos);
        }
        true
    }

    /// Minimum-energy entry (ties: smallest bitstring).
    pub fn best(&self) -> Option<&PoolEntry> {
        self.best.map(|b| &self.entries[b])
    }

    /// The `k` lowest-energy entries, ordered by energy then bitstring.
    pub fn top_k(&self, k: usize) -> Vec<&PoolEntry> {
        let mut all: Vec<&PoolEntry> = self.entries.iter().collect();
        all.sort_by(|a, b| rank(a, b));
        all.truncate(k);
        all
    }

    /// Lowest-cut entry that satisfies the hard balance constraint, with
    /// ties broken by energy and then bitstring.
    pub fn best_feasible(&self, obj: &GppObjective) -> Option<(PoolEntry, Assignment)> {
        self.entries
            .iter()
            .filter(|e| obj.is_feasible_index(e.index))
            .map(|e| (e.clone(), obj.assignment_of_index(e.index)))
            .min_by(|a, b| {
                a.1.cut
                    .total_cmp(&b.1.cut)
                    .then(a.0.energy.total_cmp(&b.0.energy))
                    .then(a.0.index.cmp(&b.0.index))
            })
    }

    /// Re-score every entry and compare with the stored energy.
    pub fn verify(&self, obj: &GppObjective) -> Result<()> {
        for e in &self.entries {
            let fresh = obj.energy_of_index(e.index);
            if (fresh - e.energy).abs() > 1e-9 * fresh.abs().max(1.0) {
                return Err(Error::Invariant(format!(
                    "pool entry {} stored energy {} but re-scores to {fresh}",
                    index_to_string(e.index, self.n),
                    e.energy
                )));
            }
        }
        if let Some(b) = self.best() {
            if self.entries.iter().any(|e| e.energy < b.energy) {
                return Err(Error::Invariant("pool best is not the minimum".into()));
            }
        }
        Ok(())
    }
}

fn rank(a: &PoolEntry, b: &PoolEntry) -> std::cmp::Ordering {
    a.energy.total_cmp(&b.energy).then(a.index.cmp(&b.index))
}

/// `β_T = 9x² + 1` with `x = i / (n_iter − 1)` (and `x = 1` when `n_iter = 1`).
pub fn beta_schedule(iteration: usize, n_iter: usize) -> Result<f64> {
    if n_iter == 0 || iteration >= n_iter {
        return Err(Error::InvalidArgument(format!(
            "iteration {iteration} out of range for {n_iter} iterations"
        )));
    }
    let x = if n_iter == 1 {
        1.0
    } else {
        iteration as f64 / (n_iter - 1) as f64
    };
    Ok(9.0 * x * x + 1.0)
}

/// Normalized `exp(−β_T (E_j − min E))`.
pub fn boltzmann_weights(energies: &[f64], beta_t: f64) -> Result<Vec<f64>> {
    if energies.is_empty() {
        return Err(Error::InvalidArgument("Boltzmann weights of an empty list".into()));
    }
    if beta_t.is_nan() || beta_t < 0.0 {
        return Err(Error::InvalidArgument(format!("inverse temperature must be non-negative, got {beta_t}")));
    }
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|e| (-beta_t * (e - min)).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// `m_q = Σ_j P_j (−1)^{x_{q,j}}`.
pub fn qubit_bias(weighted: &[(Vec<u8>, f64)]) -> Result<Vec<f64>> {
    let Some(first) = weighted.first() else {
        return Err(Error::InvalidArgument("bias of an empty set".into()));
    };
    let n = first.0.len();
    let total: f64 = weighted.iter().map(|w| w.1).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
    }
    let mut m = vec![0.0; n];
    for (bits, p) in weighted {
        if bits.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: bits.len(),
            });
        }
        for (mq, &b) in m.iter_mut().zip(bits) {
            *mq += if b == 0 { *p } else { -*p };
        }
    }
    Ok(m.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}

/// Representative of `{x, x̄}` with qubit 0 cleared.
///
/// The objective is invariant under complementing every bit, so a ranked set
/// holding both members of a pair would cancel in the bias. The bias is taken
/// over representatives instead.
pub fn canonical_index(index: u64, n: usize) -> u64 {
    if index & 1 == 1 {
        !index & ((1u64 << n) - 1)
    } else {
        index
    }
}

/// `ρ_q = (1 − η m_q) / 2`, clamped to `[0, 1]`.
pub fn next_init(m: &[f64], eta: i8) -> Result<ProductState> {
    if eta != 1 && eta != -1 {
        return Err(Error::InvalidArgument("eta must be +1 or -1".into()));
    }
    let e = f64::from(eta);
    ProductState::new(m.iter().map(|&mq| (0.5 * (1.0 - e * mq)).clamp(0.0, 1.0)).collect())
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub beta_t: f64,
    pub best_energy: f64,
    pub pool_size: usize,
    pub mean_sampled_energy: f64,
    pub distinct_samples: usize,
    pub refined_new: usize,
    /// Where the top-k ranking was drawn from.
    pub ranking: String,
}

#[derive(Clone, Debug)]
pub struct IterativeOutcome {
    pub pool: SolutionPool,
    pub log: Vec<IterationRecord>,
    /// Warm start used at each iteration (`ρ` per qubit).
    pub inits: Vec<Vec<f64>>,
}

impl IterativeOutcome {
    /// Run log as JSON lines.
    pub fn log_jsonl(&self) -> Result<String> {
        let mut s = String::new();
        for r in &self.log {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        Ok(s)
    }
}

pub fn run_iterative_qaoa(obj: &GppObjective, cfg: &IterationConfig) -> Result<IterativeOutcome> {
    cfg.validate()?;
    let n = obj.n();
    let sim = Simulator::new(cfg.qubit_cap);
    sim.check_cap(n)?;
    let circuit_h = truncate_terms(&to_ising(obj), cfg.c_factor)?;
    let energies = circuit_h.diagonal();
    let sched = build_schedule(cfg.delta, cfg.p)?;
    let fm_cfg = FmConfig {
        nu: obj.nu(),
        single_pass: true,
        ..FmConfig::default()
    };
    let streams = SeedStream::new(cfg.seed);

    let mut pool = SolutionPool::new(n);
    let mut log = Vec::with_capacity(cfg.n_iter);
    let mut inits = Vec::with_capacity(cfg.n_iter);
    let mut init = ProductState::uniform(n);
    let mut prev_top: Option<Vec<u64>> = None;
    let mut unchanged = 0usize;
    let mut prev_best = f64::INFINITY;

    for it in 0..cfg.n_iter {
        inits.push(init.rho().to_vec());
        let sv = sim.run_with_diagonal(&energies, &sched, &init)?;
        let mut rng = streams.rng(SAMPLE, it as u64);
        let counts = sample_with(&sv, cfg.shots, &mut rng)?;

        let raw: Vec<(u64, u64, f64)> = counts
            .iter()
            .map(|(&idx, &c)| (idx, c, obj.energy_of_index(idx)))
            .collect();
        let mean_sampled = raw.iter().map(|&(_, c, e)| c as f64 * e).sum::<f64>() / cfg.shots as f64;

        let refined: Vec<u64> = if cfg.fm_on_samples {
            raw.par_iter()
                .map(|&(idx, _, _)| {
                    let a = obj.assignment_of_index(idx);
                    bits_to_index(&fm_pass(obj.graph(), &a, &fm_cfg).bits)
                })
                .collect()
        } else {
            Vec::new()
        };

        for &(idx, _, e) in &raw {
            pool.insert(PoolEntry {
                index: idx,
                energy: e,
                iteration: it,
                source: Source::Raw,
            });
        }
        let mut refined_sorted = refined;
        refined_sorted.sort_unstable();
        refined_sorted.dedup();
        let mut refined_new = 0;
        for idx in refined_sorted {
            if pool.insert(PoolEntry {
                index: idx,
                energy: obj.energy_of_index(idx),
                iteration: it,
                source: Source::Refined,
            }) {
                refined_new += 1;
            }
        }

        let best = pool.best().expect("pool is non-empty after sampling").energy;
        if best > prev_best {
            return Err(Error::Invariant(format!("best energy rose from {prev_best} to {best}")));
        }
        prev_best = best;

        let beta_t = beta_schedule(it, cfg.n_iter)?;
        let top = pool.top_k(cfg.top_k);
        let top_energies: Vec<f64> = top.iter().map(|e| e.energy).collect();
        let weights = boltzmann_weights(&top_energies, beta_t)?;
        let weighted: Vec<(Vec<u8>, f64)> = top
            .iter()
            .zip(&weights)
            .map(|(e, &w)| (index_to_bits(canonical_index(e.index, n), n), w))
            .collect();
        let top_ids: Vec<u64> = top.iter().map(|e| e.index).collect();
        let bias = qubit_bias(&weighted)?;
        init = next_init(&bias, cfg.eta)?;

        log.push(IterationRecord {
            iteration: it,
            beta_t,
            best_energy: best,
            pool_size: pool.len(),
            mean_sampled_energy: mean_sampled,
            distinct_samples: raw.len(),
            refined_new,
            ranking: "cumulative-pool".into(),
        });

        if cfg.early_stop {
            if prev_top.as_ref() == Some(&top_ids) {
                unchanged += 1;
            } else {
                unchanged = 0;
            }
            prev_top = Some(top_ids);
            if unchanged >= 2 {
                break;
            }
        }
    }
    Ok(IterativeOutcome { pool, log, inits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;

    #[test]
    fn complement_pairs_share_a_representative() {
        for x in 0..1u64 << 5 {
            let c = canonical_index(x, 5);
            assert_eq!(c & 1, 0);
            assert_eq!(c, canonical_index(!x & 0b11111, 5));
        }
        let pair = [(index_to_bits(canonical_index(0b0101, 4), 4), 0.5), (index_to_bits(canonical_index(0b1010, 4), 4), 0.5)];
        let m = qubit_bias(&pair).unwrap();
        assert!(m.iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn beta_schedule_examples() {
        assert_eq!(beta_schedule(0, 10).unwrap(), 1.0);
        assert_eq!(beta_schedule(9, 10).unwrap(), 10.0);
        assert_eq!(beta_schedule(4, 9).unwrap(), 3.25);
        assert_eq!(beta_schedule(0, 1).unwrap(), 10.0);
        assert!(beta_schedule(10, 10).is_err());
    }

    #[test]
    fn boltzmann_examples() {
        let w = boltzmann_weights(&[3.0, 1.0, 7.0, 2.0], 0.0).unwrap();
        assert!(w.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let w = boltzmann_weights(&[0.0, 1000.0], 10.0).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15 && w[1] < 1e-300);
        let w = boltzmann_weights(&[1.0, 2.0, 3.0], 1.0).unwrap();
        let z = 1.0 + (-1f64).exp() + (-2f64).exp();
        let want = [1.0 / z, (-1f64).exp() / z, (-2f64).exp() / z];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(boltzmann_weights(&[], 1.0).is_err());
    }

    #[test]
    fn bias_examples() {
        assert_eq!(qubit_bias(&[(vec![0, 0], 1.0)]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(qubit_bias(&[(vec![0], 0.5), (vec![1], 0.5)]).unwrap(), vec![0.0]);
        assert!(qubit_bias(&[(vec![0], 0.5), (vec![1, 0], 0.5)]).is_err());
        assert!(qubit_bias(&[(vec![0], 0.7)]).is_err());
    }

    #[test]
    fn init_examples() {
        assert_eq!(next_init(&[0.0], 1).unwrap().rho(), &[0.5]);
        assert_eq!(next_init(&[1.0], 1).unwrap().rho(), &[0.0]);
        let r = next_init(&[0.4, -0.6], -1).unwrap();
        assert!((r.rho()[0] - 0.7).abs() < 1e-15 && (r.rho()[1] - 0.2).abs() < 1e-15);
        assert!(next_init(&[0.0], 0).is_err());
    }

    #[test]
    fn two_vertex_edge() {
        let obj = GppObjective::new(generators::path(2), 1.0, 0.05).unwrap();
        let cfg = IterationConfig {
            n_iter: 1,
            seed: 3,
            ..IterationConfig::default()
        };
        let out = run_iterative_qaoa(&obj, &cfg).unwrap();
        assert_eq!(out.pool.best().unwrap().energy, 1.0);
        for idx in [1u64, 2] {
            let e = out.pool.entries().iter().find(|e| e.index == idx).unwrap();
            assert_eq!(e.energy, 1.0);
        }
        out.pool.verify(&obj).unwrap();
    }

    #[test]
    fn config_validation() {
        let obj = GppObjective::new(generators::path(3), 1.0, 0.05).unwrap();
        for cfg in [
            IterationConfig { p: 0, ..Default::default() },
            IterationConfig { top_k: 0, ..Default::default() },
            IterationConfig { n_iter: 0, ..Default::default() },
            IterationConfig { eta: 0, ..Default::default() },
        ] {
            assert!(run_iterative_qaoa(&obj, &cfg).is_err());
        }
        let cfg = IterationConfig { qubit_cap: 2, ..Default::default() };
        assert!(run_iterative_qaoa(&obj, &cfg).unwrap_err().is_resource());
    }
}
