//! Layered run configuration: defaults < preset < config file < flags.

use std::path::{Path, PathBuf};

use clap::Args;
use qpart::iterative::IterationConfig;
use qpart::params::{builtin_presets, parse_presets, preset_delta};
use qpart::pipeline::PipelineConfig;
use qpart::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Every tunable, all optional. Used both for the JSON config file and for
/// the command-line layer.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub preset: Option<String>,
    pub p: Option<usize>,
    pub shots: Option<u64>,
    pub n_iter: Option<usize>,
    pub top_k: Option<usize>,
    pub eta: Option<i8>,
    pub c_factor: Option<usize>,
    pub fm_on_samples: Option<bool>,
    pub early_stop: Option<bool>,
    pub n_screen: Option<usize>,
    pub n_trials: Option<usize>,
    pub qubit_cap: Option<usize>,
    pub levels: Option<usize>,
    pub quantum_levels: Option<Vec<usize>>,
    pub min_size: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub depths: Option<Vec<usize>>,
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Layer { $($f: $top.$f.or($base.$f),)* }
    };
}

impl Layer {
    /// Fields set in `top` win.
    pub fn overlay(self, top: Layer) -> Layer {
        let base = self;
        overlay!(base, top; k, d, nu, lambda, delta, preset, p, shots, n_iter, top_k, eta, c_factor,
            fm_on_samples, early_stop, n_screen, n_trials, qubit_cap, levels, quantum_levels, min_size,
            deltas, depths, seed)
    }

    pub fn load(path: &Path) -> Result<Layer> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config file {}: {e}", path.display())))
    }
}

fn parse_levels(s: &str) -> std::result::Result<Vec<usize>, String> {
    if s.eq_ignore_ascii_case("none") || s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad level '{t}'")))
        .collect()
}

fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'"))).collect()
}

fn parse_usize_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad integer '{t}'"))).collect()
}

/// Flags shared by the stochastic solver commands.
#[derive(Args, Debug, Default, Clone)]
pub struct SolverFlags {
    /// Coarse graph size (qubits in the QAOA step)
    #[arg(long)]
    pub k: Option<usize>,
    /// Spectral embedding dimension [default: min(6, k-1, n-1)]
    #[arg(long)]
    pub d: Option<usize>,
    /// Balance tolerance: heavier part ≤ (1/2 + nu)·total weight
    #[arg(long)]
    pub nu: Option<f64>,
    /// Penalty weight of the balance term
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Ramp parameter of the angle schedule
    #[arg(long, conflicts_with = "preset")]
    pub delta: Option<f64>,
    /// Named ramp-parameter preset (Drill, Impeller, JetEngine, SedanCar)
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON preset table replacing the built-in one
    #[arg(long)]
    pub preset_file: Option<PathBuf>,
    /// Circuit depth
    #[arg(long)]
    pub p: Option<usize>,
    /// Measurement shots per iteration
    #[arg(long)]
    pub shots: Option<u64>,
    /// Warm-start iterations
    #[arg(long)]
    pub n_iter: Option<usize>,
    /// Candidates feeding the next warm start
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Warm-start polarization (+1 or -1)
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<i8>,
    /// Keep c_factor·k Hamiltonian terms in the circuit
    #[arg(long)]
    pub c_factor: Option<usize>,
    /// Screening rounds
    #[arg(long)]
    pub n_screen: Option<usize>,
    /// Random starts per screening round
    #[arg(long)]
    pub n_trials: Option<usize>,
    /// Largest simulated register
    #[arg(long)]
    pub qubit_cap: Option<usize>,
    /// Run seed (required)
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl SolverFlags {
    pub fn layer(&self) -> Layer {
        Layer {
            k: self.k,
            d: self.d,
            nu: self.nu,
            lambda: self.lambda,
            delta: self.delta,
            preset: self.preset.clone(),
            p: self.p,
            shots: self.shots,
            n_iter: self.n_iter,
            top_k: self.top_k,
            eta: self.eta,
            c_factor: self.c_factor,
            n_screen: self.n_screen,
            n_trials: self.n_trials,
            qubit_cap: self.qubit_cap,
            seed: self.seed,
            ..Layer::default()
        }
    }
}

/// Ordering-specific flags.
#[derive(Args, Debug, Default, Clone)]
pub struct OrderFlags {
    /// Dissection levels
    #[arg(long)]
    pub levels: Option<usize>,
    /// Levels using the quantum strategy, comma separated, or "none"
    #[arg(long, value_parser = parse_levels)]
    pub quantum_levels: Option<std::vec::Vec<usize>>,
    /// Blocks below this size use the local fallback order
    #[arg(long)]
    pub min_size: Option<usize>,
}

/// Sweep-specific flags.
#[derive(Args, Debug, Default, Clone)]
pub struct SweepFlags {
    /// Comma-separated ramp values [default: 0.05, 0.10, ..., 2.00]
    #[arg(long, value_parser = parse_f64_list)]
    pub deltas: Option<std::vec::Vec<f64>>,
    /// Comma-separated circuit depths [default: 1..6]
    #[arg(long, value_parser = parse_usize_list)]
    pub depths: Option<std::vec::Vec<usize>>,
}

/// Fully resolved configuration, embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: String,
    pub input: String,
    pub seed: Option<u64>,
    pub delta_source: String,
    pub pipeline: PipelineConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantum_levels: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<usize>>,
}

/// Merge the config file (if any) under the flags and resolve `Δ` for a
/// problem of `size` qubits.
pub fn resolve(
    command: &str,
    input: &Path,
    flags: Layer,
    config_file: Option<&Path>,
    preset_file: Option<&Path>,
    defaults: &PipelineConfig,
    size_hint: impl FnOnce(&Layer) -> usize,
) -> Result<RunConfig> {
    let file = match config_file {
        Some(p) => Layer::load(p)?,
        None => Layer::default(),
    };
    let m = file.overlay(flags);
    let it = &defaults.iteration;

    let (delta, delta_source) = match (m.delta, &m.preset) {
        (Some(d), _) => (d, "explicit".to_string()),
        (None, Some(name)) => {
            let presets = match preset_file {
                Some(p) => parse_presets(&std::fs::read_to_string(p)?)?,
                None => builtin_presets(),
            };
            let size = size_hint(&m);
            (preset_delta(&presets, name, size)?, format!("preset:{name}@{size}"))
        }
        (None, None) => (it.delta, "default".to_string()),
    };

    let pipeline = PipelineConfig {
        k: m.k.unwrap_or(defaults.k),
        d: m.d,
        nu: m.nu.unwrap_or(defaults.nu),
        lambda: m.lambda.unwrap_or(defaults.lambda),
        n_screen: m.n_screen.unwrap_or(defaults.n_screen),
        n_trials: m.n_trials.unwrap_or(defaults.n_trials),
        iteration: IterationConfig {
            p: m.p.unwrap_or(it.p),
            delta,
            shots: m.shots.unwrap_or(it.shots),
            n_iter: m.n_iter.unwrap_or(it.n_iter),
            top_k: m.top_k.unwrap_or(it.top_k),
            eta: m.eta.unwrap_or(it.eta),
            c_factor: m.c_factor.unwrap_or(it.c_factor),
            fm_on_samples: m.fm_on_samples.unwrap_or(it.fm_on_samples),
            early_stop: m.early_stop.unwrap_or(it.early_stop),
            qubit_cap: m.qubit_cap.unwrap_or(it.qubit_cap),
            seed: m.seed.unwrap_or(0),
        },
    };
    Ok(RunConfig {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        input: input.display().to_string(),
        seed: m.seed,
        delta_source,
        pipeline,
        levels: m.levels,
        quantum_levels: m.quantum_levels,
        min_size: m.min_size,
        deltas: m.deltas,
        depths: m.depths,
    })
}

impl RunConfig {
    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidArgument(format!("{} is stochastic: pass --seed (or set \"seed\" in the config file)", self.command))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(delta: Option<f64>, preset: Option<&str>, k: Option<usize>) -> Layer {
        Layer {
            delta,
            preset: preset.map(str::to_string),
            k,
            ..Layer::default()
        }
    }

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"k": 8, "p": 3, "delta": 0.7}"#).unwrap();
        let r = resolve("partition", Path::new("g"), flags(None, Some("Drill"), Some(24)), Some(&cfg), None, &PipelineConfig::default(), |m| m.k.unwrap()).unwrap();
        // config beats preset, flag beats config
        assert_eq!(r.pipeline.iteration.delta, 0.7);
        assert_eq!(r.pipeline.k, 24);
        assert_eq!(r.pipeline.iteration.p, 3);
        let r = resolve("partition", Path::new("g"), flags(None, Some("Drill"), Some(24)), None, None, &PipelineConfig::default(), |m| m.k.unwrap()).unwrap();
        assert_eq!(r.pipeline.iteration.delta, 1.0);
        assert_eq!(r.delta_source, "preset:Drill@24");
        let r = resolve("partition", Path::new("g"), flags(Some(0.3), None, None), Some(&cfg), None, &PipelineConfig::default(), |_| 0).unwrap();
        assert_eq!(r.pipeline.iteration.delta, 0.3);
        assert!(r.require_seed().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"kk": 8}"#).unwrap();
        assert!(resolve("partition", Path::new("g"), Layer::default(), Some(&cfg), None, &PipelineConfig::default(), |_| 0).is_err());
    }

    #[test]
    fn level_lists() {
        assert_eq!(parse_levels("none").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_levels("1,3").unwrap(), vec![1, 3]);
        assert!(parse_levels("x").is_err());
    }
}
