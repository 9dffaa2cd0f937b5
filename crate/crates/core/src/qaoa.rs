//! Exact statevector simulation of linear-ramp QAOA with product-state warm
//! starts.
//!
//! Conventions: qubit `q` is bit `q` of the basis index (qubit 0 is the least
//! significant bit). Bitstrings rendered as text put qubit 0 last.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::encoding::{to_ising, GppObjective, IsingHamiltonian};
use crate::error::{Error, Result};
use crate::rng::{SeedStream, SAMPLE};

/// Default largest register the engine will allocate.
pub const DEFAULT_QUBIT_CAP: usize = 24;

const PAR_THRESHOLD: usize = 1 << 14;

/// Linear-ramp angles: `γ_k = (k/p)Δ`, `β_k = ((p−k+1)/p)Δ`, `k = 1..p`.
#[derive(Clone, Debug, PartialEq)]
pub struct RampSchedule {
    pub p: usize,
    pub delta: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

pub fn build_schedule(delta: f64, p: usize) -> Result<RampSchedule> {
    if p == 0 {
        return Err(Error::InvalidArgument("circuit depth p must be at least 1".into()));
    }
    if !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("ramp parameter must be finite, got {delta}")));
    }
    let pf = p as f64;
    let gammas = (1..=p).map(|k| k as f64 / pf * delta).collect();
    let betas = (1..=p).map(|k| (p - k + 1) as f64 / pf * delta).collect();
    Ok(RampSchedule { p, delta, gammas, betas })
}

/// Product state `⊗_q (√(1−ρ_q)|0⟩ + √ρ_q|1⟩)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    rho: Vec<f64>,
}

impl ProductState {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if let Some(r) = rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidArgument(format!("occupation {r} outside [0, 1]")));
        }
        Ok(Self { rho })
    }

    /// `ρ_q = 1/2` for every qubit: the `|+⟩^⊗n` state.
    pub fn uniform(n: usize) -> Self {
        Self { rho: vec![0.5; n] }
    }

    pub fn n_qubits(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// `θ_q = 2 arcsin(√ρ_q)`, so that `R_y(θ_q)|0⟩` is the qubit's state.
    pub fn theta(&self, q: usize) -> f64 {
        2.0 * self.rho[q].sqrt().asin()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::LengthMismatch {
                expected: 1usize << n_qubits,
                got: amps.len(),
            });
        }
        Ok(Self { n_qubits, amps })
    }

    /// The basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: u64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &Statevector) -> f64 {
        let ip: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        ip.norm_sqr()
    }

    /// Text dump, one `index re im` line per amplitude.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", a.re, a.im);
        }
        s
    }
}

pub fn prepare_state(ps: &ProductState) -> Statevector {
    let n = ps.n_qubits();
    let mut amps = vec![Complex64::new(1.0, 0.0); 1];
    amps.reserve((1usize << n) - 1);
    for q in 0..n {
        let a0 = (1.0 - ps.rho[q]).sqrt();
        let a1 = ps.rho[q].sqrt();
        let len = amps.len();
        for i in 0..len {
            let v = amps[i];
            amps.push(v * a1);
            amps[i] = v * a0;
        }
    }
    Statevector { n_qubits: n, amps }
}

fn check_qubits(sv: &Statevector, n: usize) -> Result<()> {
    if sv.n_qubits != n {
        return Err(Error::LengthMismatch {
            expected: sv.n_qubits,
            got: n,
        });
    }
    Ok(())
}

/// Multiply amplitude `x` by `exp(−iγ E(x))` for a precomputed energy diagonal.
pub fn apply_phase_diagonal(sv: &mut Statevector, energies: &[f64], gamma: f64) -> Result<()> {
    if energies.len() != sv.amps.len() {
        return Err(Error::LengthMismatch {
            expected: sv.amps.len(),
            got: energies.len(),
        });
    }
    let kernel = |(a, &e): (&mut Complex64, &f64)| *a *= Complex64::from_polar(1.0, -gamma * e);
    if sv.amps.len() >= PAR_THRESHOLD {
        sv.amps.par_iter_mut().zip(energies.par_iter()).for_each(kernel);
    } else {
        sv.amps.iter_mut().zip(energies.iter()).for_each(kernel);
    }
    Ok(())
}

/// `e^{−iγ H}` for a diagonal Ising Hamiltonian, constant term included.
pub fn apply_cost_layer(sv: &mut Statevector, h: &IsingHamiltonian, gamma: f64) -> Result<()> {
    check_qubits(sv, h.n_qubits)?;
    apply_phase_diagonal(sv, &h.diagonal(), gamma)
}

/// Per-qubit mixer unitary `R_y(θ) R_z(−2β) R_y(−θ) = exp(iβ (sin θ X + cos θ Z))`.
///
/// Its `+1` eigenvector is `R_y(θ)|0⟩`, the warm-start qubit state; at
/// `θ = π/2` it is `exp(iβX)`.
pub fn mixer_unitary(theta: f64, beta: f64) -> [[Complex64; 2]; 2] {
    let (sb, cb) = beta.sin_cos();
    let (st, ct) = theta.sin_cos();
    let i = Complex64::new(0.0, 1.0);
    let off = i * (sb * st);
    [
        [Complex64::new(cb, sb * ct), off],
        [off, Complex64::new(cb, -sb * ct)],
    ]
}

fn apply_single_qubit(amps: &mut [Complex64], q: usize, u: &[[Complex64; 2]; 2]) {
    let stride = 1usize << q;
    let block = stride << 1;
    let kernel = |chunk: &mut [Complex64]| {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = u[0][0] * x0 + u[0][1] * x1;
            *a1 = u[1][0] * x0 + u[1][1] * x1;
        }
    };
    if amps.len() >= PAR_THRESHOLD && amps.len() / block >= 8 {
        amps.par_chunks_mut(block).for_each(kernel);
    } else if amps.len() >= PAR_THRESHOLD {
        // few large blocks: split the inner loop instead
        for chunk in amps.chunks_mut(block) {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(|(a0, a1)| {
                let (x0, x1) = (*a0, *a1);
                *a0 = u[0][0] * x0 + u[0][1] * x1;
                *a1 = u[1][0] * x0 + u[1][1] * x1;
            });
        }
    } else {
        amps.chunks_mut(block).for_each(kernel);
    }
}

/// Warm-start-adapted mixer layer: [`mixer_unitary`] on every qubit.
pub fn apply_mixer_layer(sv: &mut Statevector, ps: &ProductState, beta: f64) -> Result<()> {
    check_qubits(sv, ps.n_qubits())?;
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("mixer angle must be finite, got {beta}")));
    }
    for q in 0..sv.n_qubits {
        let u = mixer_unitary(ps.theta(q), beta);
        apply_single_qubit(&mut sv.amps, q, &u);
    }
    Ok(())
}

/// Statevector simulator with an explicit register cap.
#[derive(Clone, Copy, Debug)]
pub struct Simulator {
    pub qubit_cap: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Self {
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }
}

impl Simulator {
    pub fn new(qubit_cap: usize) -> Self {
        Self { qubit_cap }
    }

    pub fn check_cap(&self, n: usize) -> Result<()> {
        if n > self.qubit_cap {
            return Err(Error::CapExceeded {
                what: "statevector simulation",
                requested: n,
                cap: self.qubit_cap,
            });
        }
        Ok(())
    }

    /// `∏_k e^{−iβ_k H_M} e^{−iγ_k H_C} |ψ_init⟩` for `k = 1..p`, where
    /// `H_M = −Σ_q (sin θ_q X_q + cos θ_q Z_q)` has the warm start as its ground state.
    pub fn run_circuit(&self, h: &IsingHamiltonian, sched: &RampSchedule, ps: &ProductState) -> Result<Statevector> {
        self.check_cap(h.n_qubits)?;
        if ps.n_qubits() != h.n_qubits {
            return Err(Error::LengthMismatch {
                expected: h.n_qubits,
                got: ps.n_qubits(),
            });
        }
        let energies = h.diagonal();
        self.run_with_diagonal(&energies, sched, ps)
    }

    /// As [`Simulator::run_circuit`] with the cost diagonal already computed.
    pub fn run_with_diagonal(&self, energies: &[f64], sched: &RampSchedule, ps: &ProductState) -> Result<Statevector> {
        self.check_cap(ps.n_qubits())?;
        let mut sv = prepare_state(ps);
        for (&g, &b) in sched.gammas.iter().zip(&sched.betas) {
            apply_phase_diagonal(&mut sv, energies, g)?;
            apply_mixer_layer(&mut sv, ps, b)?;
        }
        let norm = sv.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!("statevector norm drifted to {norm}")));
        }
        Ok(sv)
    }
}

/// Measurement outcomes keyed by basis index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    pub n_qubits: usize,
    pub counts: BTreeMap<u64, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl SampleSet {
    pub fn distinct(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.keys().copied()
    }
}

/// Draw `shots` i.i.d. outcomes from `|amplitude|²` using `rng`.
pub fn sample_with<R: Rng>(sv: &Statevector, shots: u64, rng: &mut R) -> Result<BTreeMap<u64, u64>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(sv.amps.len());
    let mut acc = 0.0;
    for a in &sv.amps {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        // first entry whose cdf exceeds u; it necessarily has positive mass
        let mut idx = cdf.partition_point(|&c| c <= u);
        if idx >= cdf.len() {
            idx = cdf.iter().rposition(|&c| c < total).map_or(0, |k| k + 1).min(cdf.len() - 1);
        }
        *counts.entry(idx as u64).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Sample with the `qaoa.sample` stream of `seed` at stream index 0.
pub fn sample(sv: &Statevector, shots: u64, seed: u64) -> Result<SampleSet> {
    let mut rng = SeedStream::new(seed).rng(SAMPLE, 0);
    let counts = sample_with(sv, shots, &mut rng)?;
    Ok(SampleSet {
        n_qubits: sv.n_qubits,
        counts,
        shots,
        seed,
    })
}

/// `Σ_x |ψ(x)|² C(x)` with the exact, untruncated objective.
pub fn expectation(obj: &GppObjective, sv: &Statevector) -> Result<f64> {
    check_qubits(sv, obj.n())?;
    Ok(expectation_with_diagonal(&to_ising(obj).diagonal(), sv))
}

pub fn expectation_with_diagonal(energies: &[f64], sv: &Statevector) -> f64 {
    sv.amps.iter().zip(energies).map(|(a, e)| a.norm_sqr() * e).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn schedule_examples() {
        let s = build_schedule(1.0, 5).unwrap();
        assert_eq!(s.gammas, vec![0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(s.betas, vec![1.0, 0.8, 0.6, 0.4, 0.2]);
        let s = build_schedule(0.5, 1).unwrap();
        assert_eq!((s.gammas.clone(), s.betas.clone()), (vec![0.5], vec![0.5]));
        let s = build_schedule(0.0, 4).unwrap();
        assert!(s.gammas.iter().chain(&s.betas).all(|&a| a == 0.0));
        assert!(build_schedule(1.0, 0).is_err());
        assert!(build_schedule(f64::NAN, 2).is_err());
    }

    #[test]
    fn schedule_sum_identity() {
        for p in 1..=8 {
            let s = build_schedule(1.37, p).unwrap();
            for k in 0..p {
                let want = 1.37 * (p as f64 + 1.0) / p as f64;
                assert!((s.gammas[k] + s.betas[k] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn prepare_examples() {
        let sv = prepare_state(&ProductState::uniform(3));
        let a = 2f64.powf(-1.5);
        assert!(sv.amplitudes().iter().all(|z| close(*z, Complex64::new(a, 0.0))));
        let sv = prepare_state(&ProductState::new(vec![0.0, 1.0]).unwrap());
        assert!(close(sv.amplitudes()[2], Complex64::new(1.0, 0.0)));
        assert!((sv.norm() - 1.0).abs() < 1e-15);
        assert!(ProductState::new(vec![1.5]).is_err());
    }

    #[test]
    fn cost_layer_single_z() {
        let h = IsingHamiltonian {
            n_qubits: 1,
            constant: 0.0,
            linear: vec![1.0],
            quadratic: vec![],
        };
        let mut sv = prepare_state(&ProductState::uniform(1));
        apply_cost_layer(&mut sv, &h, PI / 2.0).unwrap();
        let want0 = Complex64::from_polar(FRAC_1_SQRT_2, -PI / 2.0);
        let want1 = Complex64::from_polar(FRAC_1_SQRT_2, PI / 2.0);
        assert!(close(sv.amplitudes()[0], want0));
        assert!(close(sv.amplitudes()[1], want1));
        let before = sv.clone();
        apply_cost_layer(&mut sv, &h, 0.0).unwrap();
        assert_eq!(sv, before);
    }

    #[test]
    fn mixer_matches_rotation_product() {
        let ry = |t: f64| {
            let (s, c) = (t / 2.0).sin_cos();
            [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
        };
        let rz = |phi: f64| {
            [
                [Complex64::from_polar(1.0, -phi / 2.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, phi / 2.0)],
            ]
        };
        let mul = |a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]| {
            let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            c
        };
        for &(theta, beta) in &[(0.3, 0.7), (PI / 2.0, 1.1), (2.5, -0.4), (0.0, 0.9), (PI, 0.2)] {
            let want = mul(mul(ry(theta), rz(-2.0 * beta)), ry(-theta));
            let got = mixer_unitary(theta, beta);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(got[i][j], want[i][j]), "theta={theta} beta={beta}");
                }
            }
        }
    }

    #[test]
    fn mixer_identity_at_zero_and_eigenstate() {
        let ps = ProductState::new(vec![0.1, 0.5, 0.93]).unwrap();
        let init = prepare_state(&ps);
        let mut sv = init.clone();
        apply_mixer_layer(&mut sv, &ps, 0.0).unwrap();
        assert!(sv.fidelity(&init) > 1.0 - 1e-14);
        apply_mixer_layer(&mut sv, &ps, 1.234).unwrap();
        assert!((sv.fidelity(&init) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn qubit_count_mismatch() {
        let h = IsingHamiltonian {
            n_qubits: 2,
            constant: 0.0,
            linear: vec![0.0; 2],
            quadratic: vec![],
        };
        let mut sv = prepare_state(&ProductState::uniform(3));
        assert!(apply_cost_layer(&mut sv, &h, 0.1).is_err());
        assert!(apply_mixer_layer(&mut sv, &ProductState::uniform(2), 0.1).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let h = IsingHamiltonian {
            n_qubits: 5,
            constant: 0.0,
            linear: vec![0.0; 5],
            quadratic: vec![],
        };
        let sim = Simulator::new(4);
        let err = sim
            .run_circuit(&h, &build_schedule(1.0, 1).unwrap(), &ProductState::uniform(5))
            .unwrap_err();
        assert!(err.is_resource());
        assert!(err.to_string().contains('4'));
    }

    #[test]
    fn sampling_basis_and_determinism() {
        let sv = Statevector::basis(2, 0);
        let s = sample(&sv, 100, 7).unwrap();
        assert_eq!(s.counts.get(&0), Some(&100));
        assert_eq!(s.counts.len(), 1);
        let sv = prepare_state(&ProductState::new(vec![0.3, 0.6, 0.5]).unwrap());
        assert_eq!(sample(&sv, 500, 11).unwrap(), sample(&sv, 500, 11).unwrap());
        assert!(sample(&sv, 0, 1).is_err());
    }

    #[test]
    fn sampling_uniform_frequencies() {
        let sv = prepare_state(&ProductState::uniform(2));
        let shots = 40_000u64;
        let s = sample(&sv, shots, 2024).unwrap();
        let sigma = (shots as f64 * 0.25 * 0.75).sqrt();
        for x in 0..4u64 {
            let c = *s.counts.get(&x).unwrap_or(&0) as f64;
            assert!((c - shots as f64 * 0.25).abs() < 5.0 * sigma);
        }
        assert_eq!(s.counts.values().sum::<u64>(), shots);
    }

    #[test]
    fn expectation_examples() {
        use crate::graph::generators;
        let obj = GppObjective::new(generators::path(2), 0.0, 0.05).unwrap();
        let sv = prepare_state(&ProductState::uniform(2));
        assert!((expectation(&obj, &sv).unwrap() - 0.5).abs() < 1e-12);
        let obj = GppObjective::new(generators::complete(3), 1.0, 0.05).unwrap();
        let sv = Statevector::basis(3, 1);
        assert!((expectation(&obj, &sv).unwrap() - 2.25).abs() < 1e-12);
    }
}
