//! Symmetric sparsity patterns and Matrix Market ingestion.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Structure of a symmetric matrix with a full diagonal. Only the
/// off-diagonal structure is stored; row `i` lists its neighbors ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPattern {
    adj: Vec<Vec<usize>>,
}

impl SymPattern {
    /// Build from `(row, col)` entries (0-based). Both triangles may be
    /// given; duplicates are merged. Every diagonal entry must be present.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut diag = vec![false; n];
        let mut sets = vec![BTreeSet::new(); n];
        for (i, j) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) outside a {n}×{n} pattern")));
            }
            if i == j {
                diag[i] = true;
            } else {
                sets[i].insert(j);
                sets[j].insert(i);
            }
        }
        if let Some(i) = diag.iter().position(|d| !d) {
            return Err(Error::InvalidArgument(format!("diagonal entry {i} is missing")));
        }
        Ok(Self {
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Below-diagonal nonzeros.
    pub fn nnz_lower(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All stored nonzeros, both triangles and the diagonal.
    pub fn nnz(&self) -> usize {
        2 * self.nnz_lower() + self.n()
    }

    /// Unit-weight adjacency graph of the pattern.
    pub fn to_graph(&self) -> WeightedGraph {
        let edges = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&j| j > i).map(move |&j| (i, j, 1.0)));
        WeightedGraph::unweighted(self.n(), edges).expect("pattern adjacency is a simple graph")
    }

    /// Matrix Market text, symmetric pattern, lower triangle.
    pub fn to_matrix_market(&self) -> String {
        let n = self.n();
        let mut s = format!(
            "%%MatrixMarket matrix coordinate pattern symmetric\n{n} {n} {}\n",
            self.nnz_lower() + n
        );
        for j in 0..n {
            s.push_str(&format!("{} {}\n", j + 1, j + 1));
            for &i in self.adj[j].iter().filter(|&&i| i > j) {
                s.push_str(&format!("{} {}\n", i + 1, j + 1));
            }
        }
        s
    }
}

/// Adjacency of `g` plus a full diagonal.
pub fn graph_to_pattern(g: &WeightedGraph) -> SymPattern {
    let adj = g.adjacency();
    SymPattern {
        adj: (0..g.n_vertices()).map(|u| adj.neighbors(u).map(|(v, _)| v).collect()).collect(),
    }
}

/// Parse a Matrix Market coordinate file. Fields `pattern`, `real` and
/// `integer` are accepted (values are ignored); symmetry `symmetric` or
/// `general`, the latter only if the structure is symmetric.
pub fn parse_matrix_market(text: &str) -> Result<SymPattern> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(Error::parse(1, "expected a %%MatrixMarket matrix header"));
    }
    if h[2] != "coordinate" {
        return Err(Error::parse(1, format!("unsupported format '{}'", h[2])));
    }
    let values_per_entry = match h[3].as_str() {
        "pattern" => 0,
        "real" | "integer" => 1,
        other => return Err(Error::parse(1, format!("unsupported field '{other}'"))),
    };
    let symmetric = match h[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(Error::parse(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(line_no, format!("bad integer '{s}'")));
        match size {
            None => {
                if tok.len() != 3 {
                    return Err(Error::parse(line_no, "size line needs rows, columns and entries"));
                }
                let (r, c, nnz) = (int(tok[0])?, int(tok[1])?, int(tok[2])?);
                if r != c {
                    return Err(Error::parse(line_no, format!("matrix is {r}×{c}, not square")));
                }
                size = Some((r, nnz));
            }
            Some((n, _)) => {
                if tok.len() != 2 + values_per_entry {
                    return Err(Error::parse(line_no, "wrong number of fields in entry"));
                }
                let (i, j) = (int(tok[0])?, int(tok[1])?);
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(Error::parse(line_no, format!("entry ({i}, {j}) out of range 1..={n}")));
                }
                if values_per_entry == 1 && tok[2].parse::<f64>().is_err() {
                    return Err(Error::parse(line_no, format!("bad value '{}'", tok[2])));
                }
                entries.push((i - 1, j - 1));
                seen.insert((i - 1, j - 1));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| Error::parse(1, "missing size line"))?;
    if entries.len() != nnz {
        return Err(Error::parse(
            0,
            format!("header declares {nnz} entries but {} were read", entries.len()),
        ));
    }
    if !symmetric {
        if let Some(&(i, j)) = seen.iter().find(|&&(i, j)| !seen.contains(&(j, i))) {
            return Err(Error::InvalidArgument(format!(
                "pattern is not symmetric: ({}, {}) has no mirror",
                i + 1,
                j + 1
            )));
        }
    }
    SymPattern::from_entries(n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators;

    #[test]
    fn path_is_tridiagonal() {
        let p = graph_to_pattern(&generators::path(3));
        assert_eq!(p.neighbors(0), &[1]);
        assert_eq!(p.neighbors(1), &[0, 2]);
        assert_eq!(p.nnz(), 7);
        let empty = graph_to_pattern(&WeightedGraph::unweighted(4, []).unwrap());
        assert_eq!(empty.nnz(), 4);
    }

    #[test]
    fn matrix_market_round_trip() {
        let p = graph_to_pattern(&generators::grid(3, 4));
        assert_eq!(parse_matrix_market(&p.to_matrix_market()).unwrap(), p);
    }

    #[test]
    fn matrix_market_general_and_errors() {
        let ok = "%%MatrixMarket matrix coordinate real general\n% c\n2 2 4\n1 1 1.0\n2 2 2\n1 2 -1\n2 1 -1\n";
        assert_eq!(parse_matrix_market(ok).unwrap().nnz_lower(), 1);
        let asym = "%%MatrixMarket matrix coordinate pattern general\n2 2 3\n1 1\n2 2\n1 2\n";
        assert!(matches!(parse_matrix_market(asym), Err(Error::InvalidArgument(_))));
        let nodiag = "%%MatrixMarket matrix coordinate pattern symmetric\n2 2 2\n1 1\n2 1\n";
        assert!(matches!(parse_matrix_market(nodiag), Err(Error::InvalidArgument(_))));
        let count = "%%MatrixMarket matrix coordinate pattern symmetric\n2 2 3\n1 1\n2 2\n";
        assert!(matches!(parse_matrix_market(count), Err(Error::Parse { .. })));
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n").is_err());
    }
}
