//! Nested dissection ordering and symbolic merit figures.
//!
//! Each dissection level bisects the current subgraph, turns the edge cut
//! into a vertex separator and recurses on the two remainders. Blocks are
//! numbered left, right, then separator, so separators always come after
//! both of their subtrees.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Assignment, WeightedGraph};
use crate::pipeline::{solve_classical, solve_quantum, PipelineConfig};
use crate::rng::SeedStream;

pub mod pattern;
pub mod symbolic;

pub use pattern::{graph_to_pattern, parse_matrix_market, SymPattern};
pub use symbolic::{elimination_tree, symbolic_factor, FactorStats, Permutation};

pub const DEFAULT_MIN_SIZE: usize = 32;
pub const DEFAULT_LEVELS: usize = 4;

/// Greedy vertex cover of the cut edges of `bits`.
///
/// Repeatedly takes the vertex covering the most uncovered cut edges; ties
/// go to the smaller vertex weight, then the lower index. Returned ascending.
pub fn extract_separator(g: &WeightedGraph, bits: &[u8]) -> Result<Vec<usize>> {
    let n = g.n_vertices();
    if bits.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: bits.len() });
    }
    let cut: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|&&(i, j, _)| bits[i] != bits[j])
        .map(|&(i, j, _)| (i, j))
        .collect();
    let mut incident = vec![Vec::new(); n];
    for (e, &(i, j)) in cut.iter().enumerate() {
        incident[i].push(e);
        incident[j].push(e);
    }
    let mut uncovered: Vec<usize> = incident.iter().map(Vec::len).collect();
    let mut covered = vec![false; cut.len()];
    let mut remaining = cut.len();
    let mut sep = Vec::new();
    while remaining > 0 {
        let mut best = usize::MAX;
        for v in 0..n {
            if uncovered[v] == 0 {
                continue;
            }
            if best == usize::MAX
                || uncovered[v] > uncovered[best]
                || (uncovered[v] == uncovered[best] && g.vertex_weight(v) < g.vertex_weight(best))
            {
                best = v;
            }
        }
        sep.push(best);
        for &e in &incident[best] {
            if !covered[e] {
                covered[e] = true;
                remaining -= 1;
                let (i, j) = cut[e];
                uncovered[i] -= 1;
                uncovered[j] -= 1;
            }
        }
    }
    sep.sort_unstable();
    Ok(sep)
}

/// Reverse Cuthill–McKee order of `g`: per component, breadth-first from a
/// pseudo-peripheral vertex visiting neighbors by ascending degree, then the
/// whole sequence reversed.
pub fn fallback_order(g: &WeightedGraph) -> Vec<usize> {
    let n = g.n_vertices();
    let adj = g.adjacency();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut dist = vec![usize::MAX; n];
    for s in 0..n {
        if placed[s] {
            continue;
        }
        let root = pseudo_peripheral(g, s, &mut dist);
        let mut queue = VecDeque::from([root]);
        placed[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj.neighbors(u).map(|(v, _)| v).filter(|&v| !placed[v]).collect();
            next.sort_by_key(|&v| (adj.degree(v), v));
            for v in next {
                placed[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// BFS levels from `s`; returns the visited vertices in BFS order.
fn bfs(g: &WeightedGraph, s: usize, dist: &mut [usize]) -> Vec<usize> {
    let adj = g.adjacency();
    let mut seen = vec![s];
    dist[s] = 0;
    let mut head = 0;
    while head < seen.len() {
        let u = seen[head];
        head += 1;
        for (v, _) in adj.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                seen.push(v);
            }
        }
    }
    seen
}

fn pseudo_peripheral(g: &WeightedGraph, start: usize, dist: &mut [usize]) -> usize {
    let adj = g.adjacency();
    let mut root = start;
    let mut ecc = None;
    loop {
        let comp = bfs(g, root, dist);
        let far = comp.iter().map(|&v| dist[v]).max().unwrap_or(0);
        let cand = comp
            .iter()
            .copied()
            .filter(|&v| dist[v] == far)
            .min_by_key(|&v| (adj.degree(v), v))
            .unwrap_or(root);
        for &v in &comp {
            dist[v] = usize::MAX;
        }
        if ecc.is_some_and(|e| far <= e) {
            return root;
        }
        ecc = Some(far);
        if cand == root {
            return root;
        }
        root = cand;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Quantum,
    Classical,
    /// Quantum was configured but failed or returned an infeasible split.
    ClassicalFallback,
    /// Caller-supplied bisector.
    Custom,
}

/// One dissected block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissectionNode {
    /// Heap numbering: root 1, children `2i` and `2i + 1`.
    pub id: u64,
    pub level: usize,
    pub size: usize,
    pub cut: f64,
    pub separator_size: usize,
    pub strategy: Strategy,
}

#[derive(Clone, Debug)]
pub struct Dissection {
    pub permutation: Permutation,
    pub nodes: Vec<DissectionNode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissectionConfig {
    pub levels: usize,
    /// Levels (1-based) that use the quantum strategy.
    pub quantum_levels: BTreeSet<usize>,
    pub min_size: usize,
    pub pipeline: PipelineConfig,
    pub seed: u64,
}

impl Default for DissectionConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS,
            quantum_levels: BTreeSet::from([1]),
            min_size: DEFAULT_MIN_SIZE,
            pipeline: PipelineConfig::default(),
            seed: 0,
        }
    }
}

/// Nested dissection with the configured per-level strategies.
pub fn nested_dissection(g: &WeightedGraph, cfg: &DissectionConfig) -> Result<Dissection> {
    if cfg.levels == 0 {
        return Err(Error::InvalidArgument("nested dissection needs at least one level".into()));
    }
    cfg.pipeline.validate()?;
    let streams = SeedStream::new(cfg.seed);
    nested_dissection_with(g, cfg.levels, cfg.min_size, |sub, level, id| {
        let seed = streams.child("ordering.dissect", id).seed();
        if cfg.quantum_levels.contains(&level) {
            match solve_quantum(sub, &cfg.pipeline, seed) {
                Ok(out) if out.assignment.is_feasible(cfg.pipeline.nu) => return Ok((out.assignment, Strategy::Quantum)),
                Err(e) if e.is_resource() || e.is_internal() => return Err(e),
                _ => {
                    let out = solve_classical(sub, &cfg.pipeline, seed)?;
                    return Ok((out.assignment, Strategy::ClassicalFallback));
                }
            }
        }
        Ok((solve_classical(sub, &cfg.pipeline, seed)?.assignment, Strategy::Classical))
    })
}

/// Nested dissection driven by an arbitrary bisector.
///
/// `bisect(subgraph, level, node_id)` must return a bipartition of the
/// subgraph. Blocks deeper than `levels` or smaller than `min_size` (and
/// never fewer than two vertices) use [`fallback_order`].
pub fn nested_dissection_with<F>(g: &WeightedGraph, levels: usize, min_size: usize, bisect: F) -> Result<Dissection>
where
    F: Fn(&WeightedGraph, usize, u64) -> Result<(Assignment, Strategy)> + Sync,
{
    if levels == 0 {
        return Err(Error::InvalidArgument("nested dissection needs at least one level".into()));
    }
    let all: Vec<usize> = (0..g.n_vertices()).collect();
    let (order, mut nodes) = dissect(g, &all, 1, 1, levels, min_size.max(2), &bisect)?;
    nodes.sort_by_key(|n| n.id);
    Ok(Dissection {
        permutation: Permutation::from_order(order)?,
        nodes,
    })
}

type Block = (Vec<usize>, Vec<DissectionNode>);

fn dissect<F>(
    sub: &WeightedGraph,
    labels: &[usize],
    level: usize,
    id: u64,
    levels: usize,
    min_size: usize,
    bisect: &F,
) -> Result<Block>
where
    F: Fn(&WeightedGraph, usize, u64) -> Result<(Assignment, Strategy)> + Sync,
{
    let n = sub.n_vertices();
    if level > levels || n < min_size {
        return Ok((fallback_order(sub).into_iter().map(|v| labels[v]).collect(), Vec::new()));
    }
    let (a, strategy) = bisect(sub, level, id)?;
    if a.bits.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: a.bits.len() });
    }
    let sep = extract_separator(sub, &a.bits)?;
    let mut in_sep = vec![false; n];
    sep.iter().for_each(|&v| in_sep[v] = true);
    let side = |b: u8| -> Vec<usize> { (0..n).filter(|&v| !in_sep[v] && a.bits[v] == b).collect() };
    let (left, right) = (side(0), side(1));

    let recurse = |keep: &[usize], child: u64| -> Result<Block> {
        if keep.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        let (g2, map) = sub.induced_subgraph(keep)?;
        let l2: Vec<usize> = map.to_old.iter().map(|&v| labels[v]).collect();
        dissect(&g2, &l2, level + 1, child, levels, min_size, bisect)
    };
    let (lo, ro) = rayon::join(|| recurse(&left, 2 * id), || recurse(&right, 2 * id + 1));
    let (mut order, mut nodes) = lo?;
    let (r_order, r_nodes) = ro?;
    order.extend(r_order);
    order.extend(sep.iter().map(|&v| labels[v]));
    nodes.extend(r_nodes);
    nodes.push(DissectionNode {
        id,
        level,
        size: n,
        cut: a.cut,
        separator_size: sep.len(),
        strategy,
    });
    Ok((order, nodes))
}

/// One row of a merit report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritEntry {
    pub ordering_name: String,
    pub nnz_factor: usize,
    pub fill_in: usize,
    /// `Σ_j c_j (c_j + 3) / 2` over the column counts of `L`.
    pub op_count: f64,
    /// `fill_in / baseline fill_in`; 1 when both are zero, absent when only
    /// the baseline is zero.
    pub ratio_fill: Option<f64>,
    pub ratio_ops: Option<f64>,
    pub baseline: String,
}

fn ratio(x: f64, base: f64) -> Option<f64> {
    if base > 0.0 {
        Some(x / base)
    } else if x == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

/// Symbolic statistics of every named ordering, with ratios against
/// `baseline` (which must be one of the names).
pub fn merit_report(pattern: &SymPattern, orderings: &[(String, Permutation)], baseline: &str) -> Result<Vec<MeritEntry>> {
    let mut names = BTreeSet::new();
    for (name, _) in orderings {
        if !names.insert(name.as_str()) {
            return Err(Error::InvalidArgument(format!("ordering name '{name}' is used twice")));
        }
    }
    let stats = orderings
        .iter()
        .map(|(_, p)| symbolic_factor(pattern, p))
        .collect::<Result<Vec<_>>>()?;
    let b = orderings
        .iter()
        .position(|(n, _)| n == baseline)
        .map(|i| stats[i])
        .ok_or_else(|| Error::InvalidArgument(format!("baseline ordering '{baseline}' is not in the report")))?;
    Ok(orderings
        .iter()
        .zip(&stats)
        .map(|((name, _), s)| MeritEntry {
            ordering_name: name.clone(),
            nnz_factor: s.nnz_factor,
            fill_in: s.fill_in,
            op_count: s.op_count,
            ratio_fill: ratio(s.fill_in as f64, b.fill_in as f64),
            ratio_ops: ratio(s.op_count, b.op_count),
            baseline: baseline.to_string(),
        })
        .collect())
}
