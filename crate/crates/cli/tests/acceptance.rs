//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qpart::coarsen::{contract, lift};
use qpart::encoding::{to_ising, GppObjective};
use qpart::fm::{fm_pass, fm_refine, FmConfig};
use qpart::graph::generators::{cycle, grid, random_connected};
use qpart::graph::{parse_metis_graph, write_metis_graph};
use qpart::iterative::{beta_schedule, run_iterative_qaoa, IterationConfig};
use qpart::ordering::{
    graph_to_pattern, merit_report, nested_dissection, symbolic_factor, DissectionConfig, Permutation, Strategy, SymPattern,
};
use qpart::params::{brute_force_gpp, default_delta_grid, sweep_delta};
use qpart::pipeline::PipelineConfig;
use qpart::qaoa::{apply_mixer_layer, build_schedule, prepare_state, ProductState, Simulator};
use qpart::{Assignment, WeightedGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn dense_weights(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let n = g.n_vertices();
    let mut w = vec![vec![0.0; n]; n];
    for &(i, j, x) in g.edges() {
        w[i][j] = x;
        w[j][i] = x;
    }
    w
}

/// QUBO objective evaluated from its definition.
fn qubo(vw: &[f64], w: &[Vec<f64>], lambda: f64, x: u64) -> f64 {
    let n = vw.len();
    let b = |i: usize| ((x >> i) & 1) as f64;
    let mut cut = 0.0;
    for i in 0..n {
        for j in 0..i {
            cut += w[i][j] * (b(i) - b(j)).abs();
        }
    }
    let omega: f64 = vw.iter().sum();
    let s: f64 = (0..n).map(|i| vw[i] * b(i)).sum();
    cut + lambda * (s - omega / 2.0).powi(2)
}

fn encoding_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for t in 0..50 {
        let n = 1 + t % 10;
        let g = random_connected(n, 0.4, 7, 4, &mut rng);
        let lambda = rng.random_range(0.1..3.0);
        let obj = GppObjective::new(g.clone(), lambda, 0.05).map_err(|e| e.to_string())?;
        let h = to_ising(&obj);
        let w = dense_weights(&g);
        for x in 0..1u64 << n {
            let want = qubo(g.vertex_weights(), &w, lambda, x);
            worst = worst.max((h.energy(x) - want).abs() / want.abs().max(1.0));
        }
    }
    let el = start.elapsed();
    check(
        worst <= 1e-9 && within(el, Duration::from_secs(10)),
        format!("max relative error {worst:.2e}, {:.2?}", el),
    )
}

fn product_vector(rho: &[f64]) -> DVector<Complex64> {
    let n = rho.len();
    DVector::from_fn(1 << n, |x, _| {
        let a: f64 = (0..n)
            .map(|q| if (x >> q) & 1 == 1 { rho[q].sqrt() } else { (1.0 - rho[q]).sqrt() })
            .product();
        Complex64::new(a, 0.0)
    })
}

/// `exp(iβ Σ_q (sin θ_q X_q + cos θ_q Z_q))` as a dense matrix.
fn dense_mixer(rho: &[f64], beta: f64) -> DMatrix<Complex64> {
    let dim = 1 << rho.len();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (q, &r) in rho.iter().enumerate() {
        let theta = 2.0 * r.sqrt().asin();
        for x in 0..dim {
            let z = if (x >> q) & 1 == 0 { 1.0 } else { -1.0 };
            m[(x, x)] += Complex64::new(theta.cos() * z, 0.0);
            m[(x ^ (1 << q), x)] += Complex64::new(theta.sin(), 0.0);
        }
    }
    (m * (I * beta)).exp()
}

fn dense_cost(energies: &[f64], gamma: f64) -> DMatrix<Complex64> {
    let h = DMatrix::from_diagonal(&DVector::from_iterator(
        energies.len(),
        energies.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    (h * (-I * gamma)).exp()
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

fn circuit_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst: f64 = 1.0;
    for t in 0..25 {
        let n = 1 + t % 6;
        let g = random_connected(n, 0.5, 4, 3, &mut rng);
        let obj = GppObjective::new(g, rng.random_range(0.2..2.0), 0.05).map_err(|e| e.to_string())?;
        let p = rng.random_range(1..=6);
        let delta = rng.random_range(0.05..2.0);
        let rho: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
        let sched = build_schedule(delta, p).map_err(|e| e.to_string())?;
        let ps = ProductState::new(rho.clone()).map_err(|e| e.to_string())?;
        let sv = Simulator::default()
            .run_circuit(&to_ising(&obj), &sched, &ps)
            .map_err(|e| e.to_string())?;
        let energies: Vec<f64> = (0..1u64 << n).map(|x| obj.energy_of_index(x)).collect();
        let mut psi = product_vector(&rho);
        for k in 0..p {
            psi = dense_cost(&energies, sched.gammas[k]) * psi;
            psi = dense_mixer(&rho, sched.betas[k]) * psi;
        }
        worst = worst.min(overlap(sv.amplitudes(), psi.as_slice()));
    }
    let el = start.elapsed();
    check(
        worst >= 1.0 - 1e-8 && within(el, Duration::from_secs(30)),
        format!("min fidelity 1 - {:.2e}, {:.2?}", 1.0 - worst, el),
    )
}

fn mixer_eigenstate() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for t in 0..50 {
        let n = 1 + t % 8;
        let rho: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let beta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let ps = ProductState::new(rho).map_err(|e| e.to_string())?;
        let init = prepare_state(&ps);
        let mut sv = init.clone();
        apply_mixer_layer(&mut sv, &ps, beta).map_err(|e| e.to_string())?;
        worst = worst.max((sv.fidelity(&init) - 1.0).abs());
    }
    check(worst <= 1e-10, format!("max |fidelity - 1| {worst:.2e}"))
}

fn schedule_exactness() -> Outcome {
    let s = build_schedule(1.0, 5).map_err(|e| e.to_string())?;
    let gammas = [0.2, 0.4, 0.6, 0.8, 1.0];
    let betas = [1.0, 0.8, 0.6, 0.4, 0.2];
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let first = beta_schedule(0, 10).map_err(|e| e.to_string())?;
    let last = beta_schedule(9, 10).map_err(|e| e.to_string())?;
    check(
        bits(&s.gammas) == bits(&gammas) && bits(&s.betas) == bits(&betas) && first == 1.0 && last == 10.0,
        format!("gammas {:?}, betas {:?}, beta_T {first} .. {last}", s.gammas, s.betas),
    )
}

fn cut_preservation() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut failures = 0;
    for _ in 0..50 {
        let n = rng.random_range(32..=200);
        let k = rng.random_range(8..=32);
        let g = random_connected(n, 4.0 / n as f64, 9, 5, &mut rng);
        let mut sigma: Vec<usize> = (0..n).map(|v| if v < k { v } else { rng.random_range(0..k) }).collect();
        sigma.shuffle(&mut rng);
        let cm = contract(&g, &sigma, k).map_err(|e| e.to_string())?;
        let coarse_bits: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
        let coarse = Assignment::from_bits(&cm.coarse, coarse_bits.clone()).map_err(|e| e.to_string())?;
        let fine_bits = lift(&coarse_bits, &cm).map_err(|e| e.to_string())?;
        let fine = Assignment::from_bits(&g, fine_bits).map_err(|e| e.to_string())?;
        let ok = rel_close(fine.cut, coarse.cut, 1e-12)
            && (0..2).all(|s| rel_close(fine.part_weights[s], coarse.part_weights[s], 1e-12));
        failures += usize::from(!ok);
    }
    check(failures == 0, format!("{failures} of 50 triples off"))
}

struct SolverRun {
    matched: bool,
    within_10pct: bool,
    bound_ok: bool,
    monotone: bool,
    squeezed: bool,
}

fn solver_instance(t: u64) -> Result<SolverRun, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(600 + t);
    let n = rng.random_range(10..=14);
    let g = random_connected(n, 0.35, 5, 1, &mut rng)
        .normalize_weights()
        .map_err(|e| e.to_string())?;
    let obj = GppObjective::new(g, 1.0, 0.05).map_err(|e| e.to_string())?;
    let oracle = brute_force_gpp(&obj).map_err(|e| e.to_string())?;
    let sweep = sweep_delta(&obj, &default_delta_grid(), &[5], 0, 0, 24).map_err(|e| e.to_string())?;
    let delta = sweep.best_for(5).ok_or("sweep produced no optimum")?.delta;
    let cfg = IterationConfig {
        delta,
        seed: t,
        ..IterationConfig::default()
    };
    let out = run_iterative_qaoa(&obj, &cfg).map_err(|e| e.to_string())?;
    let best = oracle.assignment.cut;
    let found = out.pool.best_feasible(&obj).map(|(_, a)| a.cut);
    let bound_ok = out.pool.entries().iter().all(|e| {
        let a = obj.assignment_of_index(e.index);
        !a.is_feasible(obj.nu()) || a.cut >= best - 1e-9
    });
    let energies: Vec<f64> = out.log.iter().map(|r| r.best_energy).collect();
    let monotone = energies.windows(2).all(|w| w[1] <= w[0]);
    let squeezed = match (out.log.first(), out.log.last()) {
        (Some(a), Some(b)) => b.mean_sampled_energy <= a.mean_sampled_energy,
        _ => false,
    };
    Ok(SolverRun {
        matched: found.is_some_and(|c| rel_close(c, best, 1e-9)),
        within_10pct: found.is_some_and(|c| c <= 1.1 * best + 1e-9),
        bound_ok,
        monotone,
        squeezed,
    })
}

fn solver_and_convergence() -> (Outcome, Outcome) {
    let start = Instant::now();
    let runs: Result<Vec<SolverRun>, String> = (0..20).map(solver_instance).collect();
    let el = start.elapsed();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return (Err(e.clone()), Err(e)),
    };
    let count = |f: fn(&SolverRun) -> bool| runs.iter().filter(|r| f(r)).count();
    let matched = count(|r| r.matched);
    let close = count(|r| r.within_10pct);
    let bound = count(|r| r.bound_ok);
    let solver = check(
        matched >= 16 && close == 20 && bound == 20 && within(el, Duration::from_secs(600)),
        format!("optimum matched {matched}/20, within 10% {close}/20, oracle bound held {bound}/20, {el:.2?}"),
    );
    let monotone = count(|r| r.monotone);
    let squeezed = count(|r| r.squeezed);
    let convergence = check(
        monotone == 20 && squeezed >= 19,
        format!("best energy non-increasing {monotone}/20, final mean <= initial mean {squeezed}/20"),
    );
    (solver, convergence)
}

fn feasible_start(g: &WeightedGraph, nu: f64, rng: &mut ChaCha20Rng) -> Option<Assignment> {
    let n = g.n_vertices();
    for _ in 0..50 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut bits = vec![0u8; n];
        let mut w1 = 0.0;
        for v in order {
            if w1 + g.vertex_weight(v) <= g.total_weight() / 2.0 {
                bits[v] = 1;
                w1 += g.vertex_weight(v);
            }
        }
        let a = Assignment::from_bits(g, bits).ok()?;
        if a.is_feasible(nu) {
            return Some(a);
        }
    }
    None
}

fn fm_safety() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let nu = 0.05;
    let cfg = FmConfig::with_nu(nu);
    let (mut cases, mut violations) = (0, 0);
    while cases < 200 {
        let n = rng.random_range(4..80);
        let mut g = random_connected(n, 0.1, 6, 3, &mut rng);
        if cases % 2 == 1 {
            let edges: Vec<_> = g.edges().iter().map(|&(i, j, w)| (i, j, w * 0.37 + 0.01)).collect();
            g = WeightedGraph::new(g.vertex_weights().to_vec(), edges).map_err(|e| e.to_string())?;
        }
        let Some(x) = feasible_start(&g, nu, &mut rng) else {
            continue;
        };
        cases += 1;
        let one = fm_pass(&g, &x, &cfg);
        let full = fm_refine(&g, &x, &cfg);
        let ok = one.cut <= x.cut + 1e-9
            && one.is_feasible(nu)
            && full.cut <= x.cut + 1e-9
            && full.is_feasible(nu)
            && rel_close(full.cut, g.cut_of(&full.bits), 1e-12);
        violations += usize::from(!ok);
    }
    let c4 = cycle(4);
    let start = Assignment::from_bits(&c4, vec![0, 1, 0, 1]).map_err(|e| e.to_string())?;
    let c4_cut = fm_refine(&c4, &start, &cfg).cut;
    check(
        violations == 0 && c4_cut == 2.0,
        format!("{violations} violations in {cases} cases, C4 cut {c4_cut}"),
    )
}

/// Dense boolean elimination; returns the lower-triangle count per column.
fn dense_counts(pattern: &SymPattern, p: &Permutation) -> Vec<usize> {
    let n = pattern.n();
    let mut a = vec![vec![false; n]; n];
    for old in 0..n {
        for &o in pattern.neighbors(old) {
            a[p.new_index(old)][p.new_index(o)] = true;
        }
    }
    for k in 0..n {
        for i in k + 1..n {
            if a[i][k] {
                for j in k + 1..n {
                    if a[k][j] {
                        a[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).map(|j| (j + 1..n).filter(|&i| a[i][j]).count()).collect()
}

fn symbolic_exactness() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for t in 0..30 {
        let n = rng.random_range(1..=40);
        let density = [0.05, 0.1, 0.25][t % 3];
        let mut entries: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        for i in 0..n {
            for j in 0..i {
                if rng.random_bool(density) {
                    entries.push((i, j));
                }
            }
        }
        let pat = SymPattern::from_entries(n, entries).map_err(|e| e.to_string())?;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let p = Permutation::new(perm).map_err(|e| e.to_string())?;
        let s = symbolic_factor(&pat, &p).map_err(|e| e.to_string())?;
        let counts = dense_counts(&pat, &p);
        let nnz: usize = counts.iter().sum();
        let ops: f64 = counts.iter().map(|&c| (c * (c + 3)) as f64 / 2.0).sum();
        let ok = s.nnz_factor == nnz && s.fill_in == nnz - pat.nnz_lower() && s.op_count == ops;
        mismatches += usize::from(!ok);
    }
    check(mismatches == 0, format!("{mismatches} of 30 patterns differ"))
}

fn dissection_merit() -> Outcome {
    let start = Instant::now();
    let g = grid(16, 16);
    let pattern = graph_to_pattern(&g);
    let pipeline = PipelineConfig {
        k: 16,
        ..PipelineConfig::default()
    };
    let quantum = DissectionConfig {
        levels: 4,
        quantum_levels: BTreeSet::from([1]),
        pipeline,
        seed: 10,
        ..DissectionConfig::default()
    };
    let classical = DissectionConfig {
        quantum_levels: BTreeSet::new(),
        ..quantum.clone()
    };
    let q = nested_dissection(&g, &quantum).map_err(|e| e.to_string())?;
    let c = nested_dissection(&g, &classical).map_err(|e| e.to_string())?;
    let orderings = vec![
        ("identity".to_string(), Permutation::identity(g.n_vertices())),
        ("classical".to_string(), c.permutation),
        ("dissection".to_string(), q.permutation),
    ];
    let vs_identity = merit_report(&pattern, &orderings, "identity").map_err(|e| e.to_string())?;
    let vs_classical = merit_report(&pattern, &orderings, "classical").map_err(|e| e.to_string())?;
    let el = start.elapsed();
    let fill = |r: &[qpart::ordering::MeritEntry], name: &str| {
        r.iter().find(|e| e.ordering_name == name).map(|e| (e.fill_in, e.ratio_fill))
    };
    let (Some((fq, rid)), Some((fi, _)), Some((fc, _)), Some((_, rcl))) = (
        fill(&vs_identity, "dissection"),
        fill(&vs_identity, "identity"),
        fill(&vs_identity, "classical"),
        fill(&vs_classical, "dissection"),
    ) else {
        return Err("merit report incomplete".into());
    };
    let level1_quantum = q.nodes.iter().any(|n| n.level == 1 && n.strategy == Strategy::Quantum);
    check(
        fq < fi && (fq as f64) <= 1.5 * fc as f64 && level1_quantum && within(el, Duration::from_secs(300)),
        format!(
            "fill {fq} vs identity {fi} (ratio {:?}), vs classical {fc} (ratio {:?}), level-1 quantum {level1_quantum}, {el:.2?}",
            rid, rcl
        ),
    )
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn valley_locality() -> Outcome {
    let text = std::fs::read_to_string(data_dir().join("valley12.graph")).map_err(|e| e.to_string())?;
    let g = parse_metis_graph(&text)
        .and_then(|g| g.normalize_weights())
        .map_err(|e| e.to_string())?;
    let obj = GppObjective::new(g, 1.0, 0.05).map_err(|e| e.to_string())?;
    let sweep = sweep_delta(&obj, &default_delta_grid(), &[3, 6], 0, 0, 24).map_err(|e| e.to_string())?;
    let (Some(a), Some(b)) = (sweep.best_for(3), sweep.best_for(6)) else {
        return Err("sweep produced no optimum".into());
    };
    let steps = ((a.delta - b.delta).abs() / 0.05).round() as i64;
    check(
        steps <= 4,
        format!("argmin delta {} at p=3, {} at p=6, {steps} steps apart", a.delta, b.delta),
    )
}

fn run_cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qpart"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("qpart {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let write = |name: &str, text: String| std::fs::write(d.join(name), text).map_err(|e| e.to_string());
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    write("mesh.graph", write_metis_graph(&random_connected(120, 0.04, 3, 2, &mut rng)))?;
    write("grid.graph", write_metis_graph(&grid(12, 12)))?;
    write("small.graph", write_metis_graph(&random_connected(10, 0.4, 3, 1, &mut rng)))?;
    write("grid.mtx", graph_to_pattern(&grid(6, 6)).to_matrix_market())?;

    let runs: [(&str, Vec<&str>, Vec<&str>); 6] = [
        (
            "partition",
            vec![
                "partition", "--graph", "mesh.graph", "--seed", "5", "--k", "12", "--shots", "1000",
                "--n-iter", "4", "--out", "part.txt", "--report", "part.json", "--coarse-map", "map.txt",
                "--coarse-graph", "coarse.graph",
            ],
            vec!["part.txt", "part.json", "map.txt", "coarse.graph"],
        ),
        (
            "order",
            vec![
                "order", "--graph", "grid.graph", "--seed", "5", "--k", "10", "--shots", "500", "--n-iter", "3",
                "--levels", "3", "--min-size", "16", "--out", "perm.txt", "--report", "order.json",
            ],
            vec!["perm.txt", "order.json"],
        ),
        (
            "sweep (sampled)",
            vec![
                "sweep", "--graph", "small.graph", "--seed", "5", "--shots", "300", "--deltas", "0.5,1.0,1.5",
                "--depths", "1,3", "--out", "sweep.csv", "--report", "sweep.json",
            ],
            vec!["sweep.csv", "sweep.json"],
        ),
        (
            "sweep (exact)",
            vec!["sweep", "--graph", "small.graph", "--depths", "2", "--out", "exact.csv"],
            vec!["exact.csv"],
        ),
        (
            "oracle (graph)",
            vec!["oracle", "--graph", "small.graph", "--out", "gpp.json"],
            vec!["gpp.json"],
        ),
        (
            "oracle (matrix)",
            vec!["oracle", "--matrix", "grid.mtx", "--out", "elim.json"],
            vec!["elim.json"],
        ),
    ];
    let mut differing = Vec::new();
    for (name, args, files) in &runs {
        let mut snapshots = Vec::new();
        for _ in 0..2 {
            run_cli(args, d)?;
            let snap: Vec<Vec<u8>> = files
                .iter()
                .map(|f| std::fs::read(d.join(f)).map_err(|e| format!("{f}: {e}")))
                .collect::<Result<_, _>>()?;
            snapshots.push(snap);
        }
        if snapshots[0] != snapshots[1] {
            differing.push(*name);
        }
    }
    check(
        differing.is_empty(),
        format!("{} commands run twice, differing: {:?}", runs.len(), differing),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "encoding exactness", encoding_exactness()),
        (2, "circuit fidelity", circuit_fidelity()),
        (3, "mixer eigenstate", mixer_eigenstate()),
        (4, "schedule exactness", schedule_exactness()),
        (5, "cut preservation", cut_preservation()),
    ];
    let (solver, convergence) = solver_and_convergence();
    results.push((6, "solver vs oracle", solver));
    results.push((7, "convergence and squeeze", convergence));
    results.push((8, "FM safety", fm_safety()));
    results.push((9, "symbolic exactness", symbolic_exactness()));
    results.push((10, "dissection merit", dissection_merit()));
    results.push((11, "sweep valley locality", valley_locality()));
    results.push((12, "CLI reproducibility", reproducibility()));

    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.2?}",
        results.len() - failed,
        start.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
