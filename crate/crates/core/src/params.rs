//! Ramp-parameter sweeps, power-law extrapolation and brute-force oracles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{index_to_string, to_ising, GppObjective};
use crate::error::{Error, Result};
use crate::graph::Assignment;
use crate::ordering::symbolic::{check_sizes, permuted_rows, FactorStats};
use crate::ordering::{Permutation, SymPattern};
use crate::qaoa::{build_schedule, expectation_with_diagonal, sample_with, ProductState, Simulator};
use crate::rng::{SeedStream, SAMPLE};

pub const BRUTE_FORCE_CAP: usize = 24;
pub const ELIMINATION_CAP: usize = 200;
pub const GRID_STEP: f64 = 0.05;

/// `Δ ∈ {0.05, 0.10, …, 2.00}`.
pub fn default_delta_grid() -> Vec<f64> {
    (1..=40).map(|i| i as f64 / 20.0).collect()
}

pub fn default_depths() -> Vec<usize> {
    (1..=6).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub p: usize,
    pub expectation: f64,
    /// `expectation / normalization`.
    pub normalized: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestDelta {
    pub p: usize,
    pub delta: f64,
    pub expectation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Depth-major, then ascending grid order.
    pub grid: Vec<SweepPoint>,
    /// Per depth, the first grid point attaining the row minimum.
    pub best: Vec<BestDelta>,
    /// Largest expectation over the grid.
    pub normalization: f64,
    pub deltas: Vec<f64>,
    pub depths: Vec<usize>,
    pub shots: u64,
}

impl SweepResult {
    pub fn best_for(&self, p: usize) -> Option<&BestDelta> {
        self.best.iter().find(|b| b.p == p)
    }

    /// CSV with a comment line echoing the grid.
    pub fn to_csv(&self) -> String {
        let fmt_list = |v: Vec<String>| v.join(" ");
        let mut s = format!(
            "# deltas: {}\n# depths: {}\n",
            fmt_list(self.deltas.iter().map(|d| d.to_string()).collect()),
            fmt_list(self.depths.iter().map(|p| p.to_string()).collect())
        );
        s.push_str("delta,p,expectation,normalized\n");
        for g in &self.grid {
            let _ = writeln!(s, "{},{},{},{}", g.delta, g.p, g.expectation, g.normalized);
        }
        s
    }
}

/// Expectation of the exact objective after the ramp circuit from the
/// uniform state, for every `(Δ, p)` pair. `shots = 0` is exact; otherwise
/// the sample mean over `shots` measurements.
pub fn sweep_delta(
    obj: &GppObjective,
    deltas: &[f64],
    depths: &[usize],
    shots: u64,
    seed: u64,
    qubit_cap: usize,
) -> Result<SweepResult> {
    let sim = Simulator::new(qubit_cap);
    sim.check_cap(obj.n())?;
    if deltas.is_empty() || depths.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let diag = to_ising(obj).diagonal();
    let init = ProductState::uniform(obj.n());
    let streams = SeedStream::new(seed);
    let cells: Vec<(usize, f64)> = depths.iter().flat_map(|&p| deltas.iter().map(move |&d| (p, d))).collect();
    let values = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(p, delta))| {
            let sv = sim.run_with_diagonal(&diag, &build_schedule(delta, p)?, &init)?;
            if shots == 0 {
                return Ok(expectation_with_diagonal(&diag, &sv));
            }
            let counts = sample_with(&sv, shots, &mut streams.rng(SAMPLE, idx as u64))?;
            Ok(counts.iter().map(|(&x, &c)| diag[x as usize] * c as f64).sum::<f64>() / shots as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let normalization = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid: Vec<SweepPoint> = cells
        .iter()
        .zip(&values)
        .map(|(&(p, delta), &e)| SweepPoint {
            delta,
            p,
            expectation: e,
            normalized: if normalization > 0.0 { e / normalization } else { 0.0 },
        })
        .collect();
    let mut best: Vec<BestDelta> = Vec::new();
    for &p in depths {
        if best.iter().any(|b| b.p == p) {
            continue;
        }
        let row = grid.iter().filter(|g| g.p == p);
        let m = row
            .fold(None::<&SweepPoint>, |acc, g| match acc {
                Some(a) if a.expectation <= g.expectation => Some(a),
                _ => Some(g),
            })
            .expect("non-empty row");
        best.push(BestDelta {
            p,
            delta: m.delta,
            expectation: m.expectation,
        });
    }
    Ok(SweepResult {
        grid,
        best,
        normalization,
        deltas: deltas.to_vec(),
        depths: depths.to_vec(),
        shots,
    })
}

/// Mean over several sweeps of the optimal `Δ` at depth `p`.
pub fn mean_of_optima(results: &[SweepResult], p: usize) -> Result<f64> {
    let optima = results
        .iter()
        .map(|r| r.best_for(p).map(|b| b.delta))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::InvalidArgument(format!("depth {p} is missing from a sweep")))?;
    if optima.is_empty() {
        return Err(Error::InvalidArgument("no sweeps given".into()));
    }
    Ok(optima.iter().sum::<f64>() / optima.len() as f64)
}

/// `Δ(n) = a · n^b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    /// Euclidean norm of the log-space residuals.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.a * n.powf(self.b)
    }

    /// Whether `(n, Δ)` lies within the fit's log-space residual band.
    pub fn within_band(&self, n: f64, delta: f64) -> bool {
        (delta.ln() - self.predict(n).ln()).abs() <= self.residual * (1.0 + 1e-12) + 1e-15
    }
}

/// Least squares on `(ln n, ln Δ)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("a power-law fit needs at least two points".into()));
    }
    if let Some(&(n, d)) = points.iter().find(|&&(n, d)| !(n > 0.0 && d > 0.0 && n.is_finite() && d.is_finite())) {
        return Err(Error::InvalidArgument(format!("power-law points must be positive, got ({n}, {d})")));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("power-law fit needs at least two distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - ln_a - b * x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(PowerLawFit {
        a: ln_a.exp(),
        b,
        residual,
    })
}

/// Model name → instance size → optimal `Δ`.
pub type Presets = BTreeMap<String, BTreeMap<usize, f64>>;

const BUILTIN_PRESETS: &str = include_str!("presets.json");

pub fn builtin_presets() -> Presets {
    parse_presets(BUILTIN_PRESETS).expect("bundled presets parse")
}

pub fn parse_presets(text: &str) -> Result<Presets> {
    let raw: BTreeMap<String, BTreeMap<String, f64>> = serde_json::from_str(text)?;
    raw.into_iter()
        .map(|(model, sizes)| {
            let sizes = sizes
                .into_iter()
                .map(|(s, d)| {
                    let n = s
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidArgument(format!("preset '{model}': bad size '{s}'")))?;
                    Ok((n, d))
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok((model, sizes))
        })
        .collect()
}

/// `Δ` for `model` at `size`: the tabulated value when present, otherwise
/// the power-law fit over the model's entries (a lone entry is used as is).
pub fn preset_delta(presets: &Presets, model: &str, size: usize) -> Result<f64> {
    let table = presets
        .get(model)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{model}'")))?;
    if let Some(&d) = table.get(&size) {
        return Ok(d);
    }
    match table.len() {
        0 => Err(Error::InvalidArgument(format!("preset '{model}' is empty"))),
        1 => Ok(*table.values().next().unwrap()),
        _ => {
            let pts: Vec<(f64, f64)> = table.iter().map(|(&n, &d)| (n as f64, d)).collect();
            Ok(fit_power_law(&pts)?.predict(size as f64))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceOptimum {
    /// Balanced optimum; the smallest index among equal cuts.
    pub index: u64,
    pub bitstring: String,
    pub assignment: Assignment,
    /// Minimum of the penalized objective over all bitstrings.
    pub unconstrained_index: u64,
    pub unconstrained_energy: f64,
}

/// Exhaustive minimum cut under the balance constraint.
pub fn brute_force_gpp(obj: &GppObjective) -> Result<BruteForceOptimum> {
    let n = obj.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::CapExceeded {
            what: "exhaustive enumeration",
            requested: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let g = obj.graph();
    let edges = g.edges();
    let pick = |a: (f64, u64), b: (f64, u64)| if b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).is_lt() { b } else { a };
    let none = (f64::INFINITY, u64::MAX);
    let (feasible, unconstrained) = (0..1u64 << n)
        .into_par_iter()
        .fold(
            || (none, none),
            |(f, u), x| {
                let cut: f64 = edges
                    .iter()
                    .filter(|&&(i, j, _)| ((x >> i) ^ (x >> j)) & 1 == 1)
                    .map(|e| e.2)
                    .sum();
                let f = if obj.is_feasible_index(x) { pick(f, (cut, x)) } else { f };
                (f, pick(u, (obj.energy_of_index(x), x)))
            },
        )
        .reduce(|| (none, none), |a, b| (pick(a.0, b.0), pick(a.1, b.1)));
    if feasible.1 == u64::MAX {
        return Err(Error::Infeasible);
    }
    Ok(BruteForceOptimum {
        index: feasible.1,
        bitstring: index_to_string(feasible.1, n),
        assignment: obj.assignment_of_index(feasible.1),
        unconstrained_index: unconstrained.1,
        unconstrained_energy: unconstrained.0,
    })
}

/// Elimination-graph simulation: each pivot's later neighbors become a
/// clique. Exact but `O(n³)`.
pub fn brute_force_eliminate(pattern: &SymPattern, p: &Permutation) -> Result<FactorStats> {
    check_sizes(pattern, p)?;
    let n = pattern.n();
    if n > ELIMINATION_CAP {
        return Err(Error::CapExceeded {
            what: "naive elimination",
            requested: n,
            cap: ELIMINATION_CAP,
        });
    }
    let mut adj: Vec<BTreeSet<usize>> = permuted_rows(pattern, p).into_iter().map(|r| r.into_iter().collect()).collect();
    let mut counts = vec![0usize; n];
    for k in 0..n {
        let later: Vec<usize> = adj[k].range(k + 1..).copied().collect();
        counts[k] = later.len();
        for (a, &u) in later.iter().enumerate() {
            for &v in &later[a + 1..] {
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
    }
    Ok(FactorStats::from_counts(&counts, pattern.nnz_lower()))
}
