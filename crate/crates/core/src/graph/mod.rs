//! Weighted undirected graphs, bipartition assignments and the structural
//! utilities shared by every stage of the pipeline.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub mod generators;
mod metis;

pub use metis::{parse_metis_graph, read_partition, write_metis_graph, write_partition};

/// Compressed neighbor index: for vertex `u`, `targets[offsets[u]..offsets[u+1]]`
/// are its neighbors (ascending) and `weights` the matching edge weights.
#[derive(Clone, Debug)]
pub struct Adjacency {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Adjacency {
    #[inline]
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }
}

/// Vertex- and edge-weighted undirected graph.
///
/// Edges are stored once as `(i, j, w)` with `i < j`, sorted. The neighbor
/// index is built lazily and cached; the graph is immutable after
/// construction.
#[derive(Debug)]
pub struct WeightedGraph {
    vertex_weights: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    total_weight: f64,
    adjacency: OnceLock<Adjacency>,
}

impl Clone for WeightedGraph {
    fn clone(&self) -> Self {
        Self {
            vertex_weights: self.vertex_weights.clone(),
            edges: self.edges.clone(),
            total_weight: self.total_weight,
            adjacency: OnceLock::new(),
        }
    }
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_weights == other.vertex_weights && self.edges == other.edges
    }
}

fn check_weight(w: f64, what: &str) -> Result<()> {
    if !w.is_finite() || w < 0.0 {
        return Err(Error::InvalidGraph(format!("{what} weight {w} is not finite and non-negative")));
    }
    Ok(())
}

impl WeightedGraph {
    /// Build a graph from vertex weights and an edge list. Edges may be given
    /// in either orientation; self-loops, duplicates and out-of-range indices
    /// are rejected.
    pub fn new(vertex_weights: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let n = vertex_weights.len();
        for &v in &vertex_weights {
            check_weight(v, "vertex")?;
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            check_weight(w, "edge")?;
            list.push((a.min(b), a.max(b), w));
        }
        list.sort_by_key(|e| (e.0, e.1));
        if let Some(dup) = list.windows(2).find(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", dup[0].0, dup[0].1)));
        }
        let total_weight = vertex_weights.iter().sum();
        Ok(Self {
            vertex_weights,
            edges: list,
            total_weight,
            adjacency: OnceLock::new(),
        })
    }

    /// Unit vertex weights.
    pub fn unweighted(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::new(vec![1.0; n], edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_weights.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    pub fn vertex_weight(&self, v: usize) -> f64 {
        self.vertex_weights[v]
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Ω, the total vertex weight.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| {
            let n = self.n_vertices();
            let mut deg = vec![0usize; n + 1];
            for &(i, j, _) in &self.edges {
                deg[i + 1] += 1;
                deg[j + 1] += 1;
            }
            for u in 0..n {
                deg[u + 1] += deg[u];
            }
            let offsets = deg;
            let mut fill = offsets.clone();
            let m2 = offsets[n];
            let mut targets = vec![0usize; m2];
            let mut weights = vec![0.0; m2];
            // edges are sorted by (i, j), so each row is written in ascending order
            // for the j > i half; the i < j half is appended in order of i, also ascending.
            let mut lower: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            for &(i, j, w) in &self.edges {
                lower[j].push((i, w));
            }
            for u in 0..n {
                for &(i, w) in &lower[u] {
                    targets[fill[u]] = i;
                    weights[fill[u]] = w;
                    fill[u] += 1;
                }
            }
            for &(i, j, w) in &self.edges {
                targets[fill[i]] = j;
                weights[fill[i]] = w;
                fill[i] += 1;
            }
            Adjacency {
                offsets,
                targets,
                weights,
            }
        })
    }

    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.adjacency().neighbors(u).map(|(_, w)| w).sum()
    }

    /// All edge weights are integers (enables bucketed FM gains).
    pub fn has_integer_edge_weights(&self) -> bool {
        self.edges.iter().all(|e| e.2.fract() == 0.0 && e.2 < 1e15)
    }

    /// Label each vertex with its connected component; labels are `0..c`
    /// numbered in order of their smallest vertex.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        let n = self.n_vertices();
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for (v, _) in adj.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Subgraph induced by `keep`. New indices follow ascending old index.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<(WeightedGraph, SubgraphMap)> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("induced subgraph of an empty vertex set".into()));
        }
        let n = self.n_vertices();
        let mut to_new = vec![None; n];
        let mut sorted: Vec<usize> = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&bad) = sorted.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidArgument(format!("vertex {bad} out of range")));
        }
        for (new, &old) in sorted.iter().enumerate() {
            to_new[old] = Some(new);
        }
        let vw = sorted.iter().map(|&v| self.vertex_weights[v]).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|&(i, j, w)| Some((to_new[i]?, to_new[j]?, w)));
        let sub = WeightedGraph::new(vw, edges)?;
        Ok((sub, SubgraphMap { to_new, to_old: sorted }))
    }

    /// Divide vertex weights by the largest vertex weight and edge weights by
    /// the largest edge weight.
    pub fn normalize_weights(&self) -> Result<WeightedGraph> {
        let vmax = self.vertex_weights.iter().copied().fold(0.0, f64::max);
        if self.vertex_weights.is_empty() || vmax <= 0.0 {
            return Err(Error::InvalidGraph("cannot normalize: all vertex weights are zero".into()));
        }
        let emax = self.edges.iter().map(|e| e.2).fold(0.0, f64::max);
        let vw = self.vertex_weights.iter().map(|v| v / vmax).collect();
        let edges = self.edges.iter().map(|&(i, j, w)| (i, j, if emax > 0.0 { w / emax } else { w }));
        WeightedGraph::new(vw, edges)
    }

    /// Graph Laplacian `L = D - W`.
    pub fn laplacian(&self) -> SparseSymmetric {
        let n = self.n_vertices();
        let adj = self.adjacency();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(adj.targets.len() + n);
        let mut vals = Vec::with_capacity(adj.targets.len() + n);
        offsets.push(0);
        for u in 0..n {
            let mut diag_done = false;
            let d = self.weighted_degree(u);
            for (v, w) in adj.neighbors(u) {
                if !diag_done && v > u {
                    cols.push(u);
                    vals.push(d);
                    diag_done = true;
                }
                cols.push(v);
                vals.push(-w);
            }
            if !diag_done {
                cols.push(u);
                vals.push(d);
            }
            offsets.push(cols.len());
        }
        SparseSymmetric {
            n,
            offsets,
            cols,
            vals,
        }
    }

    /// Sum of `w_ij` over edges whose endpoints lie in different parts.
    pub fn cut_of(&self, bits: &[u8]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(i, j, _)| bits[i] != bits[j])
            .map(|e| e.2)
            .sum()
    }
}

/// Index maps produced by [`WeightedGraph::induced_subgraph`].
#[derive(Clone, Debug)]
pub struct SubgraphMap {
    pub to_new: Vec<Option<usize>>,
    pub to_old: Vec<usize>,
}

/// Symmetric sparse matrix in CSR layout (both triangles stored).
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    pub n: usize,
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseSymmetric {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            let range = self.offsets[r]..self.offsets[r + 1];
            *yr = self.cols[range.clone()]
                .iter()
                .zip(&self.vals[range])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.offsets[r]..self.offsets[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Max absolute row sum; an upper bound on the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|r| self.vals[self.offsets[r]..self.offsets[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// A bipartition `x ∈ {0,1}^n` together with its cut and part weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub bits: Vec<u8>,
    pub cut: f64,
    pub part_weights: [f64; 2],
    /// `max(part_weight) / Ω - 1/2`
    pub imbalance: f64,
}

impl Assignment {
    pub fn from_bits(g: &WeightedGraph, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != g.n_vertices() {
            return Err(Error::LengthMismatch {
                expected: g.n_vertices(),
                got: bits.len(),
            });
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("assignment bit {b} is not 0 or 1")));
        }
        let mut pw = [0.0, 0.0];
        for (v, &b) in bits.iter().enumerate() {
            pw[b as usize] += g.vertex_weight(v);
        }
        let cut = g.cut_of(&bits);
        Ok(Self::with_parts(bits, cut, pw, g.total_weight()))
    }

    pub(crate) fn with_parts(bits: Vec<u8>, cut: f64, part_weights: [f64; 2], omega: f64) -> Self {
        let imbalance = if omega > 0.0 {
            part_weights[0].max(part_weights[1]) / omega - 0.5
        } else {
            0.0
        };
        Self {
            bits,
            cut,
            part_weights,
            imbalance,
        }
    }

    pub fn is_feasible(&self, nu: f64) -> bool {
        let omega = self.part_weights[0] + self.part_weights[1];
        within_balance(self.part_weights[0].max(self.part_weights[1]), omega, nu)
    }
}

/// `heavier ≤ (1/2 + ν)Ω`, with a relative slack of 1e-12 for rounding.
#[inline]
pub fn within_balance(heavier: f64, omega: f64, nu: f64) -> bool {
    heavier <= (0.5 + nu) * omega * (1.0 + 1e-12) + 1e-300
}
