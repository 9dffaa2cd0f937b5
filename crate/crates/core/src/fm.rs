//! Modified Fiduccia–Mattheyses bipartition refinement.
//!
//! Two departures from textbook FM:
//!
//! * moves are drawn only from the currently heavier part (part 1 on ties);
//! * a move prefix can become the pass's best only if the partition after
//!   that prefix satisfies `max part ≤ (1/2 + ν) Ω`.
//!
//! Each pass locks moved vertices, tracks the cumulative gain and rolls back
//! to the best eligible prefix. A pass commits when it strictly reduces the
//! cut, or when the input was infeasible and the prefix restores balance.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use crate::graph::{within_balance, Assignment, WeightedGraph};

pub const DEFAULT_MAX_PASSES: usize = 10;

const GAIN_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FmConfig {
    pub nu: f64,
    pub max_passes: usize,
    pub single_pass: bool,
}

impl Default for FmConfig {
    fn default() -> Self {
        Self {
            nu: crate::encoding::DEFAULT_NU,
            max_passes: DEFAULT_MAX_PASSES,
            single_pass: false,
        }
    }
}

impl FmConfig {
    pub fn with_nu(nu: f64) -> Self {
        Self { nu, ..Self::default() }
    }
}

/// One entry of a pass's move log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Move {
    pub vertex: usize,
    pub gain: f64,
    pub cumulative_gain: f64,
    /// Partition after this move satisfies the balance tolerance.
    pub feasible: bool,
}

/// Moves performed during one pass plus the prefix length that was kept.
#[derive(Clone, Debug, Default)]
pub struct MoveLog {
    pub moves: Vec<Move>,
    pub kept: usize,
    pub committed: bool,
}

impl MoveLog {
    /// Text dump: `vertex gain cumulative feasible` per move.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for m in &self.moves {
            let _ = writeln!(s, "{} {} {} {}", m.vertex, m.gain, m.cumulative_gain, u8::from(m.feasible));
        }
        s
    }
}

/// Max-gain selection restricted to one side; ties go to the lowest index.
trait GainQueue {
    fn insert(&mut self, v: usize, side: u8, gain: f64);
    fn update(&mut self, v: usize, side: u8, old: f64, new: f64);
    fn remove(&mut self, v: usize, side: u8, gain: f64);
    fn pop_best(&mut self, side: u8) -> Option<usize>;
}

/// Bucket array over integer gains, one ordered set per bucket.
struct BucketQueue {
    offset: i64,
    buckets: [Vec<BTreeSet<usize>>; 2],
    top: [usize; 2],
}

impl BucketQueue {
    fn new(max_abs_gain: i64) -> Self {
        let size = (2 * max_abs_gain + 1) as usize;
        Self {
            offset: max_abs_gain,
            buckets: [vec![BTreeSet::new(); size], vec![BTreeSet::new(); size]],
            top: [0, 0],
        }
    }

    fn slot(&self, gain: f64) -> usize {
        (gain.round() as i64 + self.offset) as usize
    }
}

impl GainQueue for BucketQueue {
    fn insert(&mut self, v: usize, side: u8, gain: f64) {
        let s = self.slot(gain);
        self.buckets[side as usize][s].insert(v);
        self.top[side as usize] = self.top[side as usize].max(s);
    }

    fn update(&mut self, v: usize, side: u8, old: f64, new: f64) {
        self.remove(v, side, old);
        self.insert(v, side, new);
    }

    fn remove(&mut self, v: usize, side: u8, gain: f64) {
        let s = self.slot(gain);
        self.buckets[side as usize][s].remove(&v);
    }

    fn pop_best(&mut self, side: u8) -> Option<usize> {
        let sd = side as usize;
        loop {
            let t = self.top[sd];
            if let Some(&v) = self.buckets[sd][t].iter().next() {
                self.buckets[sd][t].remove(&v);
                return Some(v);
            }
            if t == 0 {
                return None;
            }
            self.top[sd] = t - 1;
        }
    }
}

#[derive(PartialEq)]
struct HeapItem {
    gain: f64,
    vertex: Reverse<usize>,
    stamp: u64,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then(self.vertex.cmp(&other.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Max-heap over real gains with lazy invalidation via per-vertex stamps.
struct HeapQueue {
    heaps: [BinaryHeap<HeapItem>; 2],
    stamp: Vec<u64>,
    live: Vec<bool>,
}

impl HeapQueue {
    fn new(n: usize) -> Self {
        Self {
            heaps: [BinaryHeap::new(), BinaryHeap::new()],
            stamp: vec![0; n],
            live: vec![false; n],
        }
    }
}

impl GainQueue for HeapQueue {
    fn insert(&mut self, v: usize, side: u8, gain: f64) {
        self.stamp[v] += 1;
        self.live[v] = true;
        self.heaps[side as usize].push(HeapItem {
            gain,
            vertex: Reverse(v),
            stamp: self.stamp[v],
        });
    }

    fn update(&mut self, v: usize, side: u8, _old: f64, new: f64) {
        self.insert(v, side, new);
    }

    fn remove(&mut self, v: usize, _side: u8, _gain: f64) {
        self.stamp[v] += 1;
        self.live[v] = false;
    }

    fn pop_best(&mut self, side: u8) -> Option<usize> {
        while let Some(item) = self.heaps[side as usize].pop() {
            let v = item.vertex.0;
            if self.live[v] && item.stamp == self.stamp[v] {
                self.live[v] = false;
                return Some(v);
            }
        }
        None
    }
}

/// Cut reduction obtained by moving `v` to the other side.
pub fn move_gain(g: &WeightedGraph, bits: &[u8], v: usize) -> f64 {
    g.adjacency()
        .neighbors(v)
        .map(|(u, w)| if bits[u] != bits[v] { w } else { -w })
        .sum()
}

fn heavier_side(pw: &[f64; 2]) -> u8 {
    if pw[0] > pw[1] {
        0
    } else {
        1
    }
}

/// One modified-FM pass. Returns the refined assignment and the move log.
pub fn fm_pass_logged(g: &WeightedGraph, x: &Assignment, cfg: &FmConfig) -> (Assignment, MoveLog) {
    if g.has_integer_edge_weights() {
        let max_deg = (0..g.n_vertices())
            .map(|v| g.weighted_degree(v))
            .fold(0.0, f64::max) as i64;
        run_pass(g, x, cfg, BucketQueue::new(max_deg))
    } else {
        run_pass(g, x, cfg, HeapQueue::new(g.n_vertices()))
    }
}

fn run_pass<Q: GainQueue>(g: &WeightedGraph, x: &Assignment, cfg: &FmConfig, mut queue: Q) -> (Assignment, MoveLog) {
    let n = g.n_vertices();
    let omega = g.total_weight();
    let adj = g.adjacency();
    let mut bits = x.bits.clone();
    let mut pw = x.part_weights;
    let mut gain: Vec<f64> = (0..n).map(|v| move_gain(g, &bits, v)).collect();
    let mut locked = vec![false; n];
    for v in 0..n {
        queue.insert(v, bits[v], gain[v]);
    }

    let input_feasible = within_balance(pw[0].max(pw[1]), omega, cfg.nu);
    // (prefix length, cumulative gain) of the best eligible prefix
    let mut best: Option<(usize, f64)> = input_feasible.then_some((0, 0.0));
    let mut cumulative = 0.0;
    let mut log = MoveLog::default();

    loop {
        let side = heavier_side(&pw);
        let Some(v) = queue.pop_best(side) else { break };
        let gv = gain[v];
        locked[v] = true;
        let to = 1 - bits[v];
        bits[v] = to;
        pw[side as usize] -= g.vertex_weight(v);
        pw[to as usize] += g.vertex_weight(v);
        cumulative += gv;
        for (u, w) in adj.neighbors(v) {
            if locked[u] {
                continue;
            }
            let old = gain[u];
            // v now sits on side `to`; u's edge to v flips between cut and uncut
            let delta = if bits[u] == to { -2.0 * w } else { 2.0 * w };
            gain[u] = old + delta;
            queue.update(u, bits[u], old, gain[u]);
        }
        let feasible = within_balance(pw[0].max(pw[1]), omega, cfg.nu);
        log.moves.push(Move {
            vertex: v,
            gain: gv,
            cumulative_gain: cumulative,
            feasible,
        });
        if feasible {
            let better = match best {
                None => true,
                Some((_, b)) => cumulative > b + GAIN_EPS,
            };
            if better {
                best = Some((log.moves.len(), cumulative));
            }
        }
    }

    let commit = match best {
        Some((len, b)) => len > 0 && (!input_feasible || b > GAIN_EPS),
        None => false,
    };
    if !commit {
        log.kept = 0;
        log.committed = false;
        return (x.clone(), log);
    }
    let (len, _) = best.expect("commit implies a best prefix");
    let mut out = x.bits.clone();
    for m in &log.moves[..len] {
        out[m.vertex] ^= 1;
    }
    log.kept = len;
    log.committed = true;
    let refined = Assignment::from_bits(g, out).expect("same length");
    (refined, log)
}

pub fn fm_pass(g: &WeightedGraph, x: &Assignment, cfg: &FmConfig) -> Assignment {
    fm_pass_logged(g, x, cfg).0
}

/// Repeat passes until one commits nothing or `max_passes` is reached
/// (a single pass when `single_pass` is set).
pub fn fm_refine(g: &WeightedGraph, x: &Assignment, cfg: &FmConfig) -> Assignment {
    let passes = if cfg.single_pass { 1 } else { cfg.max_passes.max(1) };
    let mut cur = x.clone();
    for _ in 0..passes {
        let (next, log) = fm_pass_logged(g, &cur, cfg);
        if !log.committed {
            break;
        }
        cur = next;
    }
    cur
}
