//! Permutations and symbolic Cholesky factorization.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::pattern::SymPattern;
use crate::error::{Error, Result};

/// Bijection `old → new` with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    /// `perm[old] = new`.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inverse = vec![usize::MAX; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n || inverse[new] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation of 0..{n}: index {new} repeated or out of range"
                )));
            }
            inverse[new] = old;
        }
        Ok(Self { perm, inverse })
    }

    /// From an elimination order: `order[new] = old`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let inv = Permutation::new(order)?;
        Ok(Self {
            perm: inv.inverse,
            inverse: inv.perm,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn new_index(&self, old: usize) -> usize {
        self.perm[old]
    }

    pub fn old_index(&self, new: usize) -> usize {
        self.inverse[new]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// Reads one new index per line.
    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut perm = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            perm.push(t.parse().map_err(|_| Error::parse(i + 1, format!("bad index '{t}'")))?);
        }
        Self::new(perm)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        for p in &self.perm {
            writeln!(w, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorStats {
    /// Below-diagonal nonzeros of `L`.
    pub nnz_factor: usize,
    /// `nnz_factor` minus the below-diagonal nonzeros of the input.
    pub fill_in: usize,
    /// `Σ_j c_j (c_j + 3) / 2` over column counts `c_j`.
    pub op_count: f64,
}

impl FactorStats {
    pub(crate) fn from_counts(counts: &[usize], nnz_lower: usize) -> Self {
        let nnz_factor: usize = counts.iter().sum();
        let op_count = counts.iter().map(|&c| (c * (c + 3)) as f64 / 2.0).sum();
        Self {
            nnz_factor,
            fill_in: nnz_factor - nnz_lower,
            op_count,
        }
    }
}

pub(crate) fn check_sizes(pattern: &SymPattern, p: &Permutation) -> Result<()> {
    if p.len() != pattern.n() {
        return Err(Error::LengthMismatch {
            expected: pattern.n(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Permuted neighbor lists: `rows[new]` holds new indices, ascending.
pub(crate) fn permuted_rows(pattern: &SymPattern, p: &Permutation) -> Vec<Vec<usize>> {
    (0..pattern.n())
        .map(|new| {
            let mut row: Vec<usize> = pattern.neighbors(p.old_index(new)).iter().map(|&o| p.new_index(o)).collect();
            row.sort_unstable();
            row
        })
        .collect()
}

/// Elimination tree of the permuted pattern; `None` marks a root.
pub fn elimination_tree(rows: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n = rows.len();
    let mut parent = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for j in 0..n {
        for &i in rows[j].iter().take_while(|&&i| i < j) {
            let mut r = i;
            while let Some(a) = ancestor[r] {
                if a == j {
                    break;
                }
                ancestor[r] = Some(j);
                r = a;
            }
            if ancestor[r].is_none() {
                ancestor[r] = Some(j);
                parent[r] = Some(j);
            }
        }
    }
    parent
}

/// Column counts of `L` via row subtrees of the elimination tree.
pub fn symbolic_factor(pattern: &SymPattern, p: &Permutation) -> Result<FactorStats> {
    check_sizes(pattern, p)?;
    let rows = permuted_rows(pattern, p);
    let parent = elimination_tree(&rows);
    let n = rows.len();
    let mut counts = vec![0usize; n];
    let mut mark = vec![usize::MAX; n];
    for i in 0..n {
        mark[i] = i;
        for &k in rows[i].iter().take_while(|&&k| k < i) {
            let mut j = k;
            while mark[j] != i {
                counts[j] += 1;
                mark[j] = i;
                j = parent[j].ok_or_else(|| Error::Invariant(format!("row {i} subtree escaped the elimination tree")))?;
            }
        }
    }
    Ok(FactorStats::from_counts(&counts, pattern.nnz_lower()))
}
