//! Front quality measures.

use crate::decomposition::PreferenceVectors;
use crate::error::{invalid, Result};

/// `a` dominates `b`: no worse everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return invalid(format!(
            "cannot compare loss vectors of length {} and {}",
            a.len(),
            b.len()
        ));
    }
    let mut strictly = false;
    for (&x, &y) in a.iter().zip(b) {
        if x > y {
            return Ok(false);
        }
        if x < y {
            strictly = true;
        }
    }
    Ok(strictly)
}

/// Indices of the points not dominated by any other, in input order. Equal
/// points are all kept.
pub fn pareto_filter_indices<T: AsRef<[f64]>>(points: &[T]) -> Result<Vec<usize>> {
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i != j && dominates(q.as_ref(), p.as_ref())? {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    Ok(keep)
}

/// The nondominated points, in input order.
pub fn pareto_filter<T: AsRef<[f64]> + Clone>(points: &[T]) -> Result<Vec<T>> {
    Ok(pareto_filter_indices(points)?
        .into_iter()
        .map(|i| points[i].clone())
        .collect())
}

/// Area dominated by the front and bounded by `reference`, for two
/// objectives. Dominated points are ignored; every nondominated point must
/// be component-wise at most `reference`.
pub fn hypervolume_2d<T: AsRef<[f64]>>(points: &[T], reference: &[f64]) -> Result<f64> {
    if reference.len() != 2 {
        return invalid("hypervolume_2d needs a two-dimensional reference point");
    }
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != 2) {
        return invalid(format!("hypervolume_2d needs two objectives, got {}", p.as_ref().len()));
    }
    let front = pareto_filter_indices(points)?;
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(front.len());
    for i in front {
        let p = points[i].as_ref();
        if p[0] > reference[0] || p[1] > reference[1] {
            return invalid(format!("point {p:?} exceeds the reference point {reference:?}"));
        }
        pts.push([p[0], p[1]]);
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    Ok(area)
}

/// Schott's spacing with L1 nearest-neighbour distances:
/// `sqrt(Σ (d̄ − d_i)² / (|S| − 1))`.
pub fn spacing<T: AsRef<[f64]>>(points: &[T]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return invalid(format!("spacing needs at least 2 points, got {n}"));
    }
    let nearest: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    points[i]
                        .as_ref()
                        .iter()
                        .zip(points[j].as_ref())
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nearest.iter().sum::<f64>() / n as f64;
    let var = nearest.iter().map(|d| (mean - d).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(var.sqrt())
}

/// Number of points falling in each sector.
pub fn sector_occupancy<T: AsRef<[f64]>>(points: &[T], prefs: &PreferenceVectors) -> Result<Vec<usize>> {
    let mut counts = vec![0; prefs.len()];
    for p in points {
        counts[prefs.sector_index(p.as_ref())?] += 1;
    }
    Ok(counts)
}

/// Fraction of sectors containing at least one point.
pub fn sector_coverage<T: AsRef<[f64]>>(points: &[T], prefs: &PreferenceVectors) -> Result<f64> {
    let occupied = sector_occupancy(points, prefs)?.iter().filter(|&&c| c > 0).count();
    Ok(occupied as f64 / prefs.len() as f64)
}
