//! QUBO encoding of balanced bipartitioning and its Ising (Pauli-Z) form.
//!
//! The objective is `C(x) = Σ w_ij (x_i + x_j − 2 x_i x_j) + λ (Σ v_i x_i − Ω/2)²`.
//! Substituting `x_j = (1 − z_j)/2` gives an Ising Hamiltonian with
//!
//! ```text
//! constant = Σ w_ij / 2 + λ/4 · Σ v_i²
//! J_ij     = −w_ij / 2 + λ/2 · v_i v_j
//! h_j      = 0
//! ```
//!
//! The linear field vanishes because the penalty is centred at Ω/2.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{within_balance, Assignment, WeightedGraph};

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_NU: f64 = 0.05;

/// A balanced-bipartition objective over a (normally max-normalized) graph.
#[derive(Clone, Debug)]
pub struct GppObjective {
    graph: WeightedGraph,
    lambda: f64,
    nu: f64,
}

impl GppObjective {
    pub fn new(graph: WeightedGraph, lambda: f64, nu: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        if !(0.0..0.5).contains(&nu) {
            return Err(Error::InvalidArgument(format!("nu must lie in [0, 0.5), got {nu}")));
        }
        Ok(Self { graph, lambda, nu })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn n(&self) -> usize {
        self.graph.n_vertices()
    }

    /// `C(x)` for bits packed into a basis index (qubit `j` = bit `j`).
    pub fn energy_of_index(&self, index: u64) -> f64 {
        let g = &self.graph;
        let bit = |v: usize| (index >> v) & 1;
        let cut: f64 = g
            .edges()
            .iter()
            .filter(|&&(i, j, _)| bit(i) != bit(j))
            .map(|e| e.2)
            .sum();
        let ones: f64 = (0..g.n_vertices())
            .filter(|&v| bit(v) == 1)
            .map(|v| g.vertex_weight(v))
            .sum();
        let d = ones - g.total_weight() / 2.0;
        cut + self.lambda * d * d
    }

    /// Hard balance check `max part ≤ (1/2 + ν) Ω` for a packed bitstring.
    pub fn is_feasible_index(&self, index: u64) -> bool {
        let g = &self.graph;
        let ones: f64 = (0..g.n_vertices())
            .filter(|&v| (index >> v) & 1 == 1)
            .map(|v| g.vertex_weight(v))
            .sum();
        let omega = g.total_weight();
        within_balance(ones.max(omega - ones), omega, self.nu)
    }

    pub fn assignment_of_index(&self, index: u64) -> Assignment {
        Assignment::from_bits(&self.graph, index_to_bits(index, self.n())).expect("length matches")
    }
}

/// Unpack a basis index into one bit per vertex (bit `j` → vertex `j`).
pub fn index_to_bits(index: u64, n: usize) -> Vec<u8> {
    (0..n).map(|v| ((index >> v) & 1) as u8).collect()
}

pub fn bits_to_index(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (v, &b)| acc | (u64::from(b & 1) << v))
}

/// Render most-significant qubit first, so qubit 0 is the last character.
pub fn index_to_string(index: u64, n: usize) -> String {
    (0..n).rev().map(|v| if (index >> v) & 1 == 1 { '1' } else { '0' }).collect()
}

fn check_len(g: &WeightedGraph, x: &[u8]) -> Result<()> {
    if x.len() != g.n_vertices() {
        return Err(Error::LengthMismatch {
            expected: g.n_vertices(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Total weight of edges crossing the bipartition.
pub fn cut_cost(g: &WeightedGraph, x: &[u8]) -> Result<f64> {
    check_len(g, x)?;
    Ok(g.cut_of(x))
}

/// `(Σ v_i x_i − Ω/2)²`
pub fn balance_penalty(g: &WeightedGraph, x: &[u8]) -> Result<f64> {
    check_len(g, x)?;
    let ones: f64 = x
        .iter()
        .zip(g.vertex_weights())
        .filter(|(&b, _)| b == 1)
        .map(|(_, &w)| w)
        .sum();
    let d = ones - g.total_weight() / 2.0;
    Ok(d * d)
}

pub fn qubo_objective(obj: &GppObjective, x: &[u8]) -> Result<f64> {
    Ok(cut_cost(&obj.graph, x)? + obj.lambda * balance_penalty(&obj.graph, x)?)
}

/// One non-constant Hamiltonian term. Linear terms sort as `(j, j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Term {
    Z { j: usize, h: f64 },
    ZZ { i: usize, j: usize, coupling: f64 },
}

impl Term {
    pub fn key(&self) -> (usize, usize) {
        match *self {
            Term::Z { j, .. } => (j, j),
            Term::ZZ { i, j, .. } => (i, j),
        }
    }

    pub fn coefficient(&self) -> f64 {
        match *self {
            Term::Z { h, .. } => h,
            Term::ZZ { coupling, .. } => coupling,
        }
    }
}

/// Diagonal cost Hamiltonian `const + Σ h_j Z_j + Σ J_ij Z_i Z_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingHamiltonian {
    pub n_qubits: usize,
    pub constant: f64,
    /// One coefficient per qubit; zero means the term is absent.
    pub linear: Vec<f64>,
    /// `(i, j, J_ij)` with `i < j`, sorted, no duplicates.
    pub quadratic: Vec<(usize, usize, f64)>,
}

impl IsingHamiltonian {
    /// All non-constant terms in ascending `(i, j)` key order.
    pub fn terms(&self) -> Vec<Term> {
        let mut terms: Vec<Term> = self
            .linear
            .iter()
            .enumerate()
            .filter(|(_, &h)| h != 0.0)
            .map(|(j, &h)| Term::Z { j, h })
            .chain(self.quadratic.iter().map(|&(i, j, c)| Term::ZZ { i, j, coupling: c }))
            .collect();
        terms.sort_by_key(|t| t.key());
        terms
    }

    pub fn n_terms(&self) -> usize {
        self.terms().len()
    }

    /// Energy of the computational basis state `index`, `z_j = 1 − 2 x_j`.
    pub fn energy(&self, index: u64) -> f64 {
        let z = |v: usize| if (index >> v) & 1 == 1 { -1.0 } else { 1.0 };
        let lin: f64 = self.linear.iter().enumerate().map(|(j, &h)| h * z(j)).sum();
        let quad: f64 = self.quadratic.iter().map(|&(i, j, c)| c * z(i) * z(j)).sum();
        self.constant + lin + quad
    }

    /// Energies of all `2^n` basis states, built by doubling: flipping the
    /// top bit `k` of `x` changes the energy by `−2 (h_k + Σ_i J_ik z_i)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let dim = 1usize << n;
        let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, c) in &self.quadratic {
            nbrs[i].push((j, c));
            nbrs[j].push((i, c));
        }
        let mut e = vec![0.0; dim];
        e[0] = self.constant + self.linear.iter().sum::<f64>() + self.quadratic.iter().map(|q| q.2).sum::<f64>();
        for k in 0..n {
            let half = 1usize << k;
            let (lo, hi) = e.split_at_mut(half);
            let hi = &mut hi[..half];
            let field = |x: usize| -> f64 {
                let mut f = self.linear[k];
                for &(i, c) in &nbrs[k] {
                    // bits above k are zero in x, so z_i = +1 there
                    let zi = if i < k && (x >> i) & 1 == 1 { -1.0 } else { 1.0 };
                    f += c * zi;
                }
                f
            };
            if half >= 1 << 14 {
                hi.par_iter_mut()
                    .zip(lo.par_iter())
                    .enumerate()
                    .for_each(|(x, (h, &l))| *h = l - 2.0 * field(x));
            } else {
                for (x, (h, &l)) in hi.iter_mut().zip(lo.iter()).enumerate() {
                    *h = l - 2.0 * field(x);
                }
            }
        }
        e
    }
}

/// Map the objective to its Ising Hamiltonian via `x_j → (1 − z_j)/2`.
pub fn to_ising(obj: &GppObjective) -> IsingHamiltonian {
    let g = &obj.graph;
    let n = g.n_vertices();
    let lam = obj.lambda;
    let v = g.vertex_weights();
    let constant = g.total_edge_weight() / 2.0 + lam / 4.0 * v.iter().map(|w| w * w).sum::<f64>();
    let mut quadratic = Vec::new();
    let adj = g.adjacency();
    for i in 0..n {
        let mut row = vec![0.0; n];
        for (j, w) in adj.neighbors(i) {
            row[j] = w;
        }
        for j in i + 1..n {
            let c = -row[j] / 2.0 + lam / 2.0 * v[i] * v[j];
            if c != 0.0 {
                quadratic.push((i, j, c));
            }
        }
    }
    IsingHamiltonian {
        n_qubits: n,
        constant,
        linear: vec![0.0; n],
        quadratic,
    }
}

/// Keep the `c_factor · n_qubits` non-constant terms of largest magnitude.
/// Ties are broken by ascending `(i, j)` key (linear terms as `(j, j)`).
pub fn truncate_terms(h: &IsingHamiltonian, c_factor: usize) -> Result<IsingHamiltonian> {
    if c_factor == 0 {
        return Err(Error::InvalidArgument("term-truncation factor must be at least 1".into()));
    }
    let cap = c_factor.saturating_mul(h.n_qubits);
    let mut terms = h.terms();
    if terms.len() <= cap {
        return Ok(h.clone());
    }
    terms.sort_by(|a, b| {
        b.coefficient()
            .abs()
            .total_cmp(&a.coefficient().abs())
            .then(a.key().cmp(&b.key()))
    });
    terms.truncate(cap);
    let mut out = IsingHamiltonian {
        n_qubits: h.n_qubits,
        constant: h.constant,
        linear: vec![0.0; h.n_qubits],
        quadratic: Vec::new(),
    };
    for t in terms {
        match t {
            Term::Z { j, h } => out.linear[j] = h,
            Term::ZZ { i, j, coupling } => out.quadratic.push((i, j, coupling)),
        }
    }
    out.quadratic.sort_by_key(|q| (q.0, q.1));
    Ok(out)
}

impl fmt::Display for IsingHamiltonian {
    /// Debug dump: `const <v>`, then `Z <j> <h>` and `ZZ <i> <j> <J>` lines
    /// in ascending key order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "const {}", self.constant)?;
        for t in self.terms() {
            match t {
                Term::Z { j, h } => writeln!(f, "Z {j} {h}")?,
                Term::ZZ { i, j, coupling } => writeln!(f, "ZZ {i} {j} {coupling}")?,
            }
        }
        Ok(())
    }
}

impl IsingHamiltonian {
    /// Parse the dump format; `n_qubits` must be supplied since it is not
    /// recoverable from sparse terms.
    pub fn parse_dump(text: &str, n_qubits: usize) -> Result<Self> {
        let mut h = IsingHamiltonian {
            n_qubits,
            constant: 0.0,
            linear: vec![0.0; n_qubits],
            quadratic: Vec::new(),
        };
        fn num<T: FromStr>(t: Option<&str>, line: usize) -> Result<T> {
            t.and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(line, "malformed Hamiltonian line"))
        }
        for (k, line) in text.lines().enumerate() {
            let mut toks = line.split_whitespace();
            let lno = k + 1;
            match toks.next() {
                None => continue,
                Some("const") => h.constant = num(toks.next(), lno)?,
                Some("Z") => {
                    let j: usize = num(toks.next(), lno)?;
                    if j >= n_qubits {
                        return Err(Error::parse(lno, "qubit index out of range"));
                    }
                    h.linear[j] = num(toks.next(), lno)?;
                }
                Some("ZZ") => {
                    let i: usize = num(toks.next(), lno)?;
                    let j: usize = num(toks.next(), lno)?;
                    if i >= j || j >= n_qubits {
                        return Err(Error::parse(lno, "ZZ indices must satisfy i < j < n"));
                    }
                    h.quadratic.push((i, j, num(toks.next(), lno)?));
                }
                Some(other) => return Err(Error::parse(lno, format!("unknown term '{other}'"))),
            }
        }
        h.quadratic.sort_by_key(|q| (q.0, q.1));
        Ok(h)
    }
}
