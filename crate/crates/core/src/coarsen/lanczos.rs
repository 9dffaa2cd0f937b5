//! Lanczos with full reorthogonalization for the smallest non-trivial
//! eigenpairs of a connected graph Laplacian.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::graph::SparseSymmetric;

pub(crate) struct EigenPairs {
    pub values: Vec<f64>,
    /// One unit vector per value.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Deterministic start vectors (a fixed LCG); determinism matters more than
/// randomness here.
struct StartVectors(u64);

impl StartVectors {
    fn next(&mut self, m: usize) -> Vec<f64> {
        (0..m)
            .map(|_| {
                self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((self.0 >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }
}

/// Remove components along `ones` and every basis vector (two sweeps).
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], ones: &[f64]) {
    for _ in 0..2 {
        let c = dot(w, ones);
        axpy(-c, ones, w);
        for q in basis {
            let c = dot(w, q);
            axpy(-c, q, w);
        }
    }
}

/// Smallest `d` eigenpairs of `lap` on the complement of the constant vector.
/// `lap` must be the Laplacian of a connected graph with `n ≥ d + 1`.
pub(crate) fn smallest_nontrivial(lap: &SparseSymmetric, d: usize, tol: f64) -> EigenPairs {
    let m = lap.n;
    let max_dim = m - 1;
    let ones = vec![1.0 / (m as f64).sqrt(); m];
    let mut starts = StartVectors(0x5eed_1a2c_0ff3_e000 ^ m as u64);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new(); // beta[j] couples basis[j] and basis[j + 1]
    let mut w = vec![0.0; m];
    let scale = lap.inf_norm().max(1e-300);

    let mut q = starts.next(m);
    orthogonalize(&mut q, &basis, &ones);
    let nq = norm(&q);
    q.iter_mut().for_each(|x| *x /= nq);

    let mut next_check = (2 * d + 10).min(max_dim);
    loop {
        lap.matvec(&q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        let a = dot(&q, &w);
        axpy(-a, &q, &mut w);
        alpha.push(a);
        basis.push(q);
        orthogonalize(&mut w, &basis, &ones);
        let j = basis.len();
        let mut b = norm(&w);

        if j >= max_dim {
            break;
        }
        if b <= 1e-12 * scale {
            // invariant subspace: continue from a fresh direction
            b = 0.0;
            let mut fresh = starts.next(m);
            orthogonalize(&mut fresh, &basis, &ones);
            let nf = norm(&fresh);
            if nf <= 1e-12 {
                break;
            }
            fresh.iter_mut().for_each(|x| *x /= nf);
            w = fresh;
            beta.push(b);
        } else {
            w.iter_mut().for_each(|x| *x /= b);
            beta.push(b);
        }

        if j >= next_check {
            let (vals, vecs) = tridiagonal_eigen(&alpha, &beta[..j - 1]);
            let last_beta = beta[j - 1];
            let converged = (0..d).all(|i| (last_beta * vecs[(j - 1, i)]).abs() <= 1e-3 * tol * scale);
            if converged && vals.len() >= d {
                break;
            }
            next_check = (j + (j / 4).max(5)).min(max_dim);
        }
        q = std::mem::replace(&mut w, vec![0.0; m]);
    }

    let j = basis.len();
    let (_, vecs) = tridiagonal_eigen(&alpha, &beta[..j - 1]);
    let mut out = EigenPairs {
        values: Vec::with_capacity(d),
        vectors: Vec::with_capacity(d),
        residuals: Vec::with_capacity(d),
    };
    let mut lv = vec![0.0; m];
    for i in 0..d.min(j) {
        let mut y = vec![0.0; m];
        for (k, qk) in basis.iter().enumerate() {
            axpy(vecs[(k, i)], qk, &mut y);
        }
        let ny = norm(&y);
        y.iter_mut().for_each(|x| *x /= ny);
        // fix the sign: largest-magnitude entry positive (first one on ties)
        let pivot = y
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (k, &v)| if v.abs() > acc.1.abs() + 1e-12 { (k, v) } else { acc });
        if pivot.1 < 0.0 {
            y.iter_mut().for_each(|x| *x = -*x);
        }
        lap.matvec(&y, &mut lv);
        let lambda = dot(&y, &lv);
        let res = lv.iter().zip(&y).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        out.values.push(lambda);
        out.vectors.push(y);
        out.residuals.push(res);
    }
    out
}

/// Eigen-decomposition of the symmetric tridiagonal matrix, ascending.
fn tridiagonal_eigen(alpha: &[f64], off: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let j = alpha.len();
    let mut t = DMatrix::zeros(j, j);
    for i in 0..j {
        t[(i, i)] = alpha[i];
        if i + 1 < j {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(j, j);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}
