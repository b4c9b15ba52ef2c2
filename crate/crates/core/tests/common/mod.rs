//! Oracles shared by the integration and acceptance tests. They avoid the
//! crate's own solvers so that agreement means something.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves `min_{d, α} α + ½‖d‖²` subject to `a_i·d ≤ α` for every row `a_i`
/// directly in `(d, α)`, by enumerating candidate active sets and solving
/// each KKT system
///
/// `d + Σ_{i∈S} μ_i a_i = 0`, `Σ μ_i = 1`, `a_i·d = α (i ∈ S)`
///
/// with a dense LU factorization. A candidate is kept when `μ ≥ 0` and the
/// inactive rows satisfy `a_i·d ≤ α`; the best kept objective wins.
pub fn primal_direction(rows: &[Vec<f64>]) -> Vec<f64> {
    let q = rows.len();
    let n = rows[0].len();
    let max_active = q.min(n + 1);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << q) {
        let active: Vec<usize> = (0..q).filter(|i| mask & (1 << i) != 0).collect();
        let s = active.len();
        if s > max_active {
            continue;
        }
        // Unknowns: d (n), α (1), μ (s).
        let size = n + 1 + s;
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut b = DVector::<f64>::zeros(size);
        for r in 0..n {
            a[(r, r)] = 1.0;
            for (c, &i) in active.iter().enumerate() {
                a[(r, n + 1 + c)] = rows[i][r];
            }
        }
        for c in 0..s {
            a[(n, n + 1 + c)] = 1.0;
        }
        b[n] = 1.0;
        for (e, &i) in active.iter().enumerate() {
            let row = n + 1 + e;
            for r in 0..n {
                a[(row, r)] = rows[i][r];
            }
            a[(row, n)] = -1.0;
        }
        let Some(x) = a.lu().solve(&b) else { continue };
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let d: Vec<f64> = (0..n).map(|r| x[r]).collect();
        let alpha = x[n];
        let mu_ok = (0..s).all(|c| x[n + 1 + c] >= -1e-9);
        let scale = 1.0 + alpha.abs();
        let feasible = rows
            .iter()
            .all(|a_i| a_i.iter().zip(&d).map(|(p, q)| p * q).sum::<f64>() <= alpha + 1e-9 * scale);
        if !(mu_ok && feasible) {
            continue;
        }
        let objective = alpha + 0.5 * d.iter().map(|v| v * v).sum::<f64>();
        if best.as_ref().is_none_or(|(o, _)| objective < *o) {
            best = Some((objective, d));
        }
    }
    best.expect("some active set satisfies the KKT conditions").1
}

/// Plain pairwise dominance, written independently of the crate.
pub fn dominated_by(p: &[f64], q: &[f64]) -> bool {
    q.iter().zip(p).all(|(a, b)| a <= b) && q.iter().zip(p).any(|(a, b)| a < b)
}

/// Indices of points no other point dominates.
pub fn brute_force_front(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !(0..points.len()).any(|j| j != i && dominated_by(&points[i], &points[j])))
        .collect()
}

/// Monte Carlo hypervolume in two dimensions: uniform samples in the box
/// spanned by the componentwise minimum of the points and `reference`.
/// Returns the estimate and its standard error. Samples are split across
/// threads, each with its own seeded stream, so the result is reproducible.
pub fn mc_hypervolume(points: &[Vec<f64>], reference: [f64; 2], samples: u64, seed: u64) -> (f64, f64) {
    let lo = [
        points.iter().map(|p| p[0]).fold(reference[0], f64::min),
        points.iter().map(|p| p[1]).fold(reference[1], f64::min),
    ];
    let area = (reference[0] - lo[0]) * (reference[1] - lo[1]);
    let chunks = 16u64;
    let per_chunk = samples / chunks;
    let hits: u64 = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chunks)
            .map(|c| {
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(c));
                    let mut hits = 0u64;
                    for _ in 0..per_chunk {
                        let x = lo[0] + rng.random::<f64>() * (reference[0] - lo[0]);
                        let y = lo[1] + rng.random::<f64>() * (reference[1] - lo[1]);
                        if points.iter().any(|p| p[0] <= x && p[1] <= y) {
                            hits += 1;
                        }
                    }
                    hits
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    });
    let n = (per_chunk * chunks) as f64;
    let p = hits as f64 / n;
    (area * p, area * (p * (1.0 - p) / n).sqrt())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
