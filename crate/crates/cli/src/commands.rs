//! The four subcommands.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use qpart::coarsen::RoundStats;
use qpart::encoding::{index_to_string, GppObjective};
use qpart::graph::{parse_metis_graph, write_metis_graph, write_partition};
use qpart::iterative::{IterationRecord, Source};
use qpart::ordering::{
    graph_to_pattern, merit_report, nested_dissection, parse_matrix_market, DissectionConfig, DissectionNode,
    MeritEntry, Permutation, SymPattern, DEFAULT_LEVELS, DEFAULT_MIN_SIZE,
};
use qpart::params::{
    brute_force_eliminate, brute_force_gpp, default_delta_grid, default_depths, sweep_delta, BestDelta,
};
use qpart::pipeline::{solve_quantum, CoarseSource, PipelineConfig, DEFAULT_COARSE_SIZE};
use qpart::{Error, Result, WeightedGraph};
use serde::Serialize;

use crate::config::{resolve, Layer, OrderFlags, RunConfig, SolverFlags, SweepFlags};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// Input graph (METIS format)
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Partition output, one 0/1 label per vertex [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run report
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Cluster map dump (`vertex cluster` per line)
    #[arg(long)]
    pub coarse_map: Option<PathBuf>,
    /// Coarse graph in METIS format
    #[arg(long)]
    pub coarse_graph: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["graph", "matrix"])))]
pub struct OrderArgs {
    /// Input graph (METIS format)
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Input sparsity pattern (Matrix Market coordinate format)
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[command(flatten)]
    pub order: OrderFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Permutation output, new index of each old vertex per line [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON merit report
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Input graph (METIS format); weights are normalized before the sweep
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub sweep: SweepFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// CSV output [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON with the best ramp value per depth
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["graph", "matrix"])))]
pub struct OracleArgs {
    /// Graph for the exhaustive balanced minimum cut
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Pattern for naive elimination
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Permutation file for --matrix [default: identity]
    #[arg(long, requires = "matrix")]
    pub perm: Option<PathBuf>,
    /// Balance tolerance
    #[arg(long)]
    pub nu: Option<f64>,
    /// Penalty weight of the balance term
    #[arg(long)]
    pub lambda: Option<f64>,
    /// JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON output [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_graph(path: &Path) -> Result<WeightedGraph> {
    parse_metis_graph(&read_text(path)?)
}

fn emit(path: Option<&Path>, content: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => std::io::stdout().lock().write_all(content)?,
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Serialize)]
struct Partition {
    cut: f64,
    part_weights: [f64; 2],
    imbalance: f64,
    feasible: bool,
}

#[derive(Serialize)]
struct Coarse<'a> {
    k: usize,
    source: CoarseSource,
    bitstring: String,
    screen_round: usize,
    proxy_cost: f64,
    rounds: &'a [RoundStats],
}

#[derive(Serialize)]
struct PoolItem {
    bitstring: String,
    energy: f64,
    iteration: usize,
    source: Source,
}

#[derive(Serialize)]
struct PoolSummary {
    size: usize,
    top: Vec<PoolItem>,
}

#[derive(Serialize)]
struct PartitionReport<'a> {
    version: &'static str,
    config: &'a RunConfig,
    partition: Partition,
    coarse: Coarse<'a>,
    pool: Option<PoolSummary>,
    iterations: &'a [IterationRecord],
}

pub fn partition(args: &PartitionArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let n = g.n_vertices();
    let cfg = resolve(
        "partition",
        &args.graph,
        args.solver.layer(),
        args.solver.config.as_deref(),
        args.solver.preset_file.as_deref(),
        &PipelineConfig::default(),
        |m| m.k.unwrap_or(DEFAULT_COARSE_SIZE).min(n),
    )?;
    let seed = cfg.require_seed()?;
    let out = solve_quantum(&g, &cfg.pipeline, seed)?;

    let mut part = Vec::new();
    write_partition(&mut part, &out.assignment.bits)?;
    emit(args.out.as_deref(), &part)?;
    if let Some(p) = &args.coarse_map {
        std::fs::write(p, out.map.dump())?;
    }
    if let Some(p) = &args.coarse_graph {
        std::fs::write(p, write_metis_graph(&out.map.coarse))?;
    }
    if let Some(p) = &args.report {
        let k = out.map.k();
        let coarse_index = out.coarse_bits.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        let pool = out.iterative.as_ref().map(|it| PoolSummary {
            size: it.pool.len(),
            top: it
                .pool
                .top_k(10)
                .into_iter()
                .map(|e| PoolItem {
                    bitstring: index_to_string(e.index, k),
                    energy: e.energy,
                    iteration: e.iteration,
                    source: e.source,
                })
                .collect(),
        });
        let report = PartitionReport {
            version: VERSION,
            config: &cfg,
            partition: Partition {
                cut: out.assignment.cut,
                part_weights: out.assignment.part_weights,
                imbalance: out.assignment.imbalance,
                feasible: out.assignment.is_feasible(cfg.pipeline.nu),
            },
            coarse: Coarse {
                k,
                source: out.source,
                bitstring: index_to_string(coarse_index, k),
                screen_round: out.screen_round,
                proxy_cost: out.proxy_cost,
                rounds: &out.screen_rounds,
            },
            pool,
            iterations: out.iterative.as_ref().map(|i| i.log.as_slice()).unwrap_or(&[]),
        };
        std::fs::write(p, json(&report)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OrderReport<'a> {
    version: &'static str,
    config: &'a RunConfig,
    /// Every ordering against the natural order.
    vs_identity: Vec<MeritEntry>,
    /// Every ordering against classical-only dissection.
    vs_classical: Vec<MeritEntry>,
    dissection: Vec<DissectionNode>,
    classical_dissection: Vec<DissectionNode>,
}

pub fn order(args: &OrderArgs) -> Result<()> {
    let (input, pattern, g): (&Path, SymPattern, WeightedGraph) = match (&args.graph, &args.matrix) {
        (Some(p), _) => {
            let g = read_graph(p)?;
            (p, graph_to_pattern(&g), g)
        }
        (None, Some(p)) => {
            let pat = parse_matrix_market(&read_text(p)?)?;
            let g = pat.to_graph();
            (p, pat, g)
        }
        (None, None) => return Err(Error::InvalidArgument("pass --graph or --matrix".into())),
    };
    let n = g.n_vertices();
    let mut flags = args.solver.layer();
    flags.levels = args.order.levels;
    flags.quantum_levels = args.order.quantum_levels.clone();
    flags.min_size = args.order.min_size;
    let mut cfg = resolve(
        "order",
        input,
        flags,
        args.solver.config.as_deref(),
        args.solver.preset_file.as_deref(),
        &PipelineConfig::default(),
        |m| m.k.unwrap_or(DEFAULT_COARSE_SIZE).min(n),
    )?;
    let seed = cfg.require_seed()?;
    let levels = *cfg.levels.get_or_insert(DEFAULT_LEVELS);
    let quantum: BTreeSet<usize> = cfg.quantum_levels.get_or_insert_with(|| vec![1]).iter().copied().collect();
    let min_size = *cfg.min_size.get_or_insert(DEFAULT_MIN_SIZE);
    if levels == 0 {
        return Err(Error::InvalidArgument("--levels must be at least 1".into()));
    }
    let nd_cfg = DissectionConfig {
        levels,
        quantum_levels: quantum,
        min_size,
        pipeline: cfg.pipeline.clone(),
        seed,
    };
    let nd = nested_dissection(&g, &nd_cfg)?;
    let classical = nested_dissection(
        &g,
        &DissectionConfig {
            quantum_levels: BTreeSet::new(),
            ..nd_cfg
        },
    )?;

    let mut perm = Vec::new();
    nd.permutation.write(&mut perm)?;
    emit(args.out.as_deref(), &perm)?;
    if let Some(p) = &args.report {
        let orderings = vec![
            ("identity".to_string(), Permutation::identity(n)),
            ("classical".to_string(), classical.permutation.clone()),
            ("dissection".to_string(), nd.permutation.clone()),
        ];
        let report = OrderReport {
            version: VERSION,
            config: &cfg,
            vs_identity: merit_report(&pattern, &orderings, "identity")?,
            vs_classical: merit_report(&pattern, &orderings, "classical")?,
            dissection: nd.nodes,
            classical_dissection: classical.nodes,
        };
        std::fs::write(p, json(&report)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    version: &'static str,
    config: &'a RunConfig,
    normalization: f64,
    best: &'a [BestDelta],
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let g = read_graph(&args.graph)?.normalize_weights()?;
    let mut flags = args.solver.layer();
    flags.deltas = args.sweep.deltas.clone();
    flags.depths = args.sweep.depths.clone();
    let mut defaults = PipelineConfig::default();
    defaults.iteration.shots = 0;
    let n = g.n_vertices();
    let mut cfg = resolve(
        "sweep",
        &args.graph,
        flags,
        args.solver.config.as_deref(),
        args.solver.preset_file.as_deref(),
        &defaults,
        |_| n,
    )?;
    let deltas = cfg.deltas.get_or_insert_with(default_delta_grid).clone();
    let depths = cfg.depths.get_or_insert_with(default_depths).clone();
    let shots = cfg.pipeline.iteration.shots;
    let seed = if shots > 0 { cfg.require_seed()? } else { cfg.seed.unwrap_or(0) };
    if let Some(&p) = depths.iter().find(|&&p| p == 0) {
        return Err(Error::InvalidArgument(format!("depth {p} is not allowed")));
    }
    let obj = GppObjective::new(g, cfg.pipeline.lambda, cfg.pipeline.nu)?;
    let res = sweep_delta(&obj, &deltas, &depths, shots, seed, cfg.pipeline.iteration.qubit_cap)?;
    emit(args.out.as_deref(), res.to_csv().as_bytes())?;
    if let Some(p) = &args.report {
        let report = SweepReport {
            version: VERSION,
            config: &cfg,
            normalization: res.normalization,
            best: &res.best,
        };
        std::fs::write(p, json(&report)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum OracleResult {
    Gpp {
        bitstring: String,
        cut: f64,
        part_weights: [f64; 2],
        imbalance: f64,
        unconstrained_bitstring: String,
        unconstrained_energy: f64,
    },
    Elimination {
        nnz_factor: usize,
        fill_in: usize,
        op_count: f64,
    },
}

#[derive(Serialize)]
struct OracleReport<'a> {
    version: &'static str,
    config: &'a RunConfig,
    result: OracleResult,
}

pub fn oracle(args: &OracleArgs) -> Result<()> {
    let flags = Layer {
        nu: args.nu,
        lambda: args.lambda,
        ..Layer::default()
    };
    let input = args.graph.as_deref().or(args.matrix.as_deref()).expect("clap enforces one input");
    let cfg = resolve("oracle", input, flags, args.config.as_deref(), None, &PipelineConfig::default(), |_| 0)?;
    let result = match (&args.graph, &args.matrix) {
        (Some(p), _) => {
            let g = read_graph(p)?;
            let n = g.n_vertices();
            let obj = GppObjective::new(g, cfg.pipeline.lambda, cfg.pipeline.nu)?;
            let b = brute_force_gpp(&obj)?;
            OracleResult::Gpp {
                bitstring: b.bitstring,
                cut: b.assignment.cut,
                part_weights: b.assignment.part_weights,
                imbalance: b.assignment.imbalance,
                unconstrained_bitstring: index_to_string(b.unconstrained_index, n),
                unconstrained_energy: b.unconstrained_energy,
            }
        }
        (None, Some(p)) => {
            let pat = parse_matrix_market(&read_text(p)?)?;
            let perm = match &args.perm {
                Some(pp) => Permutation::read(read_text(pp)?.as_bytes())?,
                None => Permutation::identity(pat.n()),
            };
            let s = brute_force_eliminate(&pat, &perm)?;
            OracleResult::Elimination {
                nnz_factor: s.nnz_factor,
                fill_in: s.fill_in,
                op_count: s.op_count,
            }
        }
        (None, None) => unreachable!("clap enforces one input"),
    };
    emit(
        args.out.as_deref(),
        &json(&OracleReport {
            version: VERSION,
            config: &cfg,
            result,
        })?,
    )
}
