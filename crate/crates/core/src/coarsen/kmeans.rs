//! Lloyd's k-means with k-means++ seeding and empty-cluster repair.

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const SHIFT_TOLERANCE: f64 = 1e-6;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, ctr) in centers.iter().enumerate() {
        let d = dist2(p, ctr);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().zip(&chosen).filter(|(_, &c)| !c).map(|(d, _)| d).sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for i in 0..n {
                if chosen[i] || d2[i] == 0.0 {
                    continue;
                }
                pick = Some(i);
                if u < d2[i] {
                    break;
                }
                u -= d2[i];
            }
            pick.expect("positive total implies a candidate")
        } else {
            // every remaining point coincides with a center
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[pick]));
        }
    }
    centers
}

/// Give every empty cluster the point farthest from its own centroid, taken
/// from clusters with more than one member.
fn repair(points: &[Vec<f64>], labels: &mut [usize], centers: &mut [Vec<f64>], sizes: &mut [usize]) {
    let k = centers.len();
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] <= 1 {
                continue;
            }
            let d = dist2(p, &centers[labels[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("k ≤ n guarantees a donor cluster");
        sizes[labels[i]] -= 1;
        labels[i] = c;
        sizes[c] = 1;
        centers[c] = points[i].clone();
    }
}

/// Cluster `points` into exactly `k` non-empty clusters; labels are `0..k`.
pub fn kmeans<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot form {k} clusters from {n} points")));
    }
    let dim = points[0].len();
    let mut centers = plus_plus(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut sizes = vec![0usize; k];
    for it in 0..MAX_ITERATIONS {
        sizes.iter_mut().for_each(|s| *s = 0);
        for (i, p) in points.iter().enumerate() {
            let (c, _) = nearest(p, &centers);
            labels[i] = c;
            sizes[c] += 1;
        }
        repair(points, &mut labels, &mut centers, &mut sizes);
        let mut next = vec![vec![0.0; dim]; k];
        for (i, p) in points.iter().enumerate() {
            for (acc, x) in next[labels[i]].iter_mut().zip(p) {
                *acc += x;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            let s = sizes[c] as f64;
            next[c].iter_mut().for_each(|x| *x /= s);
            shift = shift.max(dist2(&next[c], &centers[c]).sqrt());
        }
        centers = next;
        if shift < SHIFT_TOLERANCE && it > 0 {
            break;
        }
    }
    Ok(labels)
}
