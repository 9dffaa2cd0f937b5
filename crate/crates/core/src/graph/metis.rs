//! METIS/Chaco graph files and one-bit-per-line partition files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::WeightedGraph;
use crate::error::{Error, Result};

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {what} '{tok}'")))
}

/// Parse a graph in METIS format.
///
/// Header: `n m [fmt [ncon]]`. The format digits (read right to left) enable
/// edge weights, vertex weights and vertex sizes. Vertex sizes are read and
/// ignored. Indices in the file are 1-based.
pub fn parse_metis_graph(text: &str) -> Result<WeightedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim_start().starts_with('%'));

    let (hline, header) = loop {
        match lines.next() {
            Some((i, l)) if !l.trim().is_empty() => break (i, l),
            Some(_) => continue,
            None => return Err(Error::parse(0, "missing header")),
        }
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() < 2 || head.len() > 4 {
        return Err(Error::parse(hline, "header must be 'n m [fmt [ncon]]'"));
    }
    let n: usize = parse_num(head[0], hline, "vertex count")?;
    let m: usize = parse_num(head[1], hline, "edge count")?;
    let fmt = head.get(2).copied().unwrap_or("0");
    if fmt.len() > 3 || !fmt.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::parse(hline, format!("bad format field '{fmt}'")));
    }
    let digits: Vec<bool> = fmt.chars().rev().map(|c| c == '1').collect();
    let has_ewgt = digits.first().copied().unwrap_or(false);
    let has_vwgt = digits.get(1).copied().unwrap_or(false);
    let has_vsize = digits.get(2).copied().unwrap_or(false);
    let ncon: usize = match head.get(3) {
        Some(t) => parse_num(t, hline, "ncon")?,
        None => 1,
    };
    if ncon != 1 {
        return Err(Error::parse(hline, format!("multi-constraint weights (ncon = {ncon}) are not supported")));
    }

    let mut vertex_weights = vec![1.0; n];
    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    let mut edges = Vec::new();
    for v in 0..n {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("expected {n} vertex lines, found {v}")))?;
        let mut toks = line.split_whitespace();
        if has_vsize {
            let _: f64 = parse_num(toks.next().unwrap_or(""), lno, "vertex size")?;
        }
        if has_vwgt {
            let w: f64 = parse_num(toks.next().unwrap_or(""), lno, "vertex weight")?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::parse(lno, format!("vertex weight {w} must be finite and non-negative")));
            }
            vertex_weights[v] = w;
        }
        let mut row_seen = Vec::new();
        while let Some(t) = toks.next() {
            let u1: usize = parse_num(t, lno, "neighbor index")?;
            if u1 == 0 || u1 > n {
                return Err(Error::parse(lno, format!("neighbor index {u1} out of range 1..={n}")));
            }
            let u = u1 - 1;
            let w: f64 = if has_ewgt {
                let t = toks
                    .next()
                    .ok_or_else(|| Error::parse(lno, format!("missing weight for neighbor {u1}")))?;
                parse_num(t, lno, "edge weight")?
            } else {
                1.0
            };
            if !w.is_finite() || w < 0.0 {
                return Err(Error::parse(lno, format!("edge weight {w} must be finite and non-negative")));
            }
            if u == v {
                return Err(Error::parse(lno, "self-loop"));
            }
            if row_seen.contains(&u) {
                return Err(Error::parse(lno, format!("duplicate neighbor {u1}")));
            }
            row_seen.push(u);
            let key = (v.min(u), v.max(u));
            match seen.remove(&key) {
                Some(prev) => {
                    if prev != w {
                        return Err(Error::parse(
                            lno,
                            format!("edge {{{}, {}}} listed with weights {prev} and {w}", key.0 + 1, key.1 + 1),
                        ));
                    }
                    edges.push((key.0, key.1, w));
                }
                None => {
                    seen.insert(key, w);
                }
            }
        }
    }
    for (lno, line) in lines {
        if !line.trim().is_empty() {
            return Err(Error::parse(lno, "trailing content after the last vertex line"));
        }
    }
    if let Some((&(a, b), _)) = seen.iter().min_by_key(|(k, _)| **k) {
        return Err(Error::parse(0, format!("edge {{{}, {}}} listed in only one adjacency line", a + 1, b + 1)));
    }
    if edges.len() != m {
        return Err(Error::parse(hline, format!("header declares {m} edges but {} were listed", edges.len())));
    }
    WeightedGraph::new(vertex_weights, edges)
}

/// Serialize in METIS format. Weights are written only when some weight
/// differs from 1; reals are printed in shortest round-trip form.
pub fn write_metis_graph(g: &WeightedGraph) -> String {
    let vw = g.vertex_weights().iter().any(|&w| w != 1.0);
    let ew = g.edges().iter().any(|e| e.2 != 1.0);
    let mut out = String::new();
    let _ = write!(out, "{} {}", g.n_vertices(), g.n_edges());
    match (vw, ew) {
        (false, false) => {}
        (false, true) => out.push_str(" 1"),
        (true, false) => out.push_str(" 10"),
        (true, true) => out.push_str(" 11"),
    }
    out.push('\n');
    let adj = g.adjacency();
    for v in 0..g.n_vertices() {
        let mut first = true;
        let mut sep = |out: &mut String| {
            if !first {
                out.push(' ');
            }
            first = false;
        };
        if vw {
            sep(&mut out);
            let _ = write!(out, "{}", g.vertex_weight(v));
        }
        for (u, w) in adj.neighbors(v) {
            sep(&mut out);
            let _ = write!(out, "{}", u + 1);
            if ew {
                let _ = write!(out, " {w}");
            }
        }
        out.push('\n');
    }
    out
}

/// Read a partition file: one `0` or `1` per line.
pub fn read_partition(reader: impl BufRead) -> Result<Vec<u8>> {
    let mut bits = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t {
            "0" => bits.push(0),
            "1" => bits.push(1),
            other => return Err(Error::parse(i + 1, format!("expected 0 or 1, found '{other}'"))),
        }
    }
    Ok(bits)
}

pub fn write_partition(mut w: impl Write, bits: &[u8]) -> Result<()> {
    for b in bits {
        writeln!(w, "{b}")?;
    }
    Ok(())
}
