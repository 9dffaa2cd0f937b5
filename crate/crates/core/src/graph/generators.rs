//! Small graph families used by tests, benchmarks and the CLI examples.

use rand::Rng;

use super::WeightedGraph;

pub fn path(n: usize) -> WeightedGraph {
    WeightedGraph::unweighted(n, (1..n).map(|i| (i - 1, i, 1.0))).expect("valid path")
}

pub fn cycle(n: usize) -> WeightedGraph {
    assert!(n >= 3);
    WeightedGraph::unweighted(n, (0..n).map(|i| (i, (i + 1) % n, 1.0))).expect("valid cycle")
}

pub fn complete(n: usize) -> WeightedGraph {
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)));
    WeightedGraph::unweighted(n, edges).expect("valid clique")
}

/// `rows × cols` grid with 4-neighbor connectivity; vertex `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> WeightedGraph {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1, 1.0));
            }
            if r + 1 < rows {
                edges.push((v, v + cols, 1.0));
            }
        }
    }
    WeightedGraph::unweighted(rows * cols, edges).expect("valid grid")
}

/// Two cliques of `half` vertices joined by a single unit edge between
/// vertex `half - 1` and vertex `half`.
pub fn two_cliques(half: usize) -> WeightedGraph {
    let mut edges = Vec::new();
    for base in [0, half] {
        for i in 0..half {
            for j in i + 1..half {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((half - 1, half, 1.0));
    WeightedGraph::unweighted(2 * half, edges).expect("valid two-clique graph")
}

/// Random connected graph: a random spanning tree plus each remaining pair
/// with probability `density`. Edge weights are integers in
/// `1..=max_edge_weight`, vertex weights integers in `1..=max_vertex_weight`.
pub fn random_connected<R: Rng>(
    n: usize,
    density: f64,
    max_edge_weight: u32,
    max_vertex_weight: u32,
    rng: &mut R,
) -> WeightedGraph {
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    for k in 1..n {
        let a = order[k];
        let b = order[rng.random_range(0..k)];
        present[a * n + b] = true;
        present[b * n + a] = true;
        edges.push((a, b, f64::from(rng.random_range(1..=max_edge_weight))));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !present[i * n + j] && rng.random_bool(density.clamp(0.0, 1.0)) {
                edges.push((i, j, f64::from(rng.random_range(1..=max_edge_weight))));
            }
        }
    }
    let vw = (0..n).map(|_| f64::from(rng.random_range(1..=max_vertex_weight))).collect();
    WeightedGraph::new(vw, edges).expect("valid random graph")
}

/// Random graph that may be disconnected (each pair with probability `density`).
pub fn random_gnp<R: Rng>(n: usize, density: f64, rng: &mut R) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                edges.push((i, j, f64::from(rng.random_range(1..=4u32))));
            }
        }
    }
    WeightedGraph::unweighted(n, edges).expect("valid gnp graph")
}
