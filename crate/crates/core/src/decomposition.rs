//! Preference vectors and the sector constraints they induce.
//!
//! `K` unit vectors `u_0 … u_{K−1}` in the non-negative orthant split the
//! loss space into sectors: `v` belongs to sector `k` when `u_k·v` is the
//! largest inner product. Subproblem `k` keeps its losses inside the sector
//! through the constraints `G_j(θ) = (u_j − u_k)·L(θ) ≤ 0` for every `j ≠ k`.
//!
//! Indices are zero-based throughout. The vacuous self constraint `j = k` is
//! never produced.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, dot, norm};

/// Default activation threshold for near-active constraints.
pub const DEFAULT_EPSILON: f64 = 1e-4;

const UNIT_TOL: f64 = 1e-9;
const DUPLICATE_TOL: f64 = 1e-12;

/// A validated set of unit preference vectors in the non-negative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVectors {
    objectives: usize,
    vectors: Vec<Vec<f64>>,
}

impl PreferenceVectors {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return invalid("at least one preference vector is required");
        };
        let m = first.len();
        if m < 2 {
            return invalid(format!("preference vectors need at least 2 components, got {m}"));
        }
        for (k, u) in vectors.iter().enumerate() {
            if u.len() != m {
                return invalid(format!(
                    "preference vector {k} has {} components, expected {m}",
                    u.len()
                ));
            }
            if !all_finite(u) || u.iter().any(|&x| x < 0.0) {
                return invalid(format!(
                    "preference vector {k} must have finite non-negative components"
                ));
            }
            let n = norm(u);
            if (n - 1.0).abs() > UNIT_TOL {
                return invalid(format!("preference vector {k} has norm {n}, expected 1"));
            }
        }
        for a in 0..vectors.len() {
            for b in a + 1..vectors.len() {
                if same_direction(&vectors[a], &vectors[b]) {
                    return invalid(format!("preference vectors {a} and {b} are duplicates"));
                }
            }
        }
        Ok(Self { objectives: m, vectors })
    }

    /// Reads one vector per line, `m` comma-separated reals. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut vectors = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidArgument(format!("preference csv: {e}")))?;
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!("preference csv record {}: '{f}' is not a number", line + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            vectors.push(row);
        }
        Self::new(vectors)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    /// Number of vectors `K`.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn objectives(&self) -> usize {
        self.objectives
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.vectors[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.iter().map(Vec::as_slice)
    }

    fn check_loss(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.objectives {
            return invalid(format!(
                "loss vector has {} entries, preferences have {}",
                v.len(),
                self.objectives
            ));
        }
        if !all_finite(v) {
            return Err(Error::NumericDomain("loss vector is not finite".into()));
        }
        if v.iter().any(|&x| x < 0.0) {
            return invalid("sector decomposition requires non-negative losses; configure a loss shift");
        }
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.len() {
            return invalid(format!(
                "subproblem index {k} out of range for {} preference vectors",
                self.len()
            ));
        }
        Ok(())
    }

    /// Sector containing `v`: the lowest index maximizing `u_k·v`.
    pub fn sector_index(&self, v: &[f64]) -> Result<usize> {
        self.check_loss(v)?;
        if v.iter().all(|&x| x == 0.0) {
            return invalid("sector of the zero vector is undefined");
        }
        let mut best = 0;
        let mut best_val = dot(&self.vectors[0], v);
        for (k, u) in self.vectors.iter().enumerate().skip(1) {
            let val = dot(u, v);
            if val > best_val {
                best = k;
                best_val = val;
            }
        }
        Ok(best)
    }

    /// `G_j = (u_j − u_k)·L` for every `j`, with `G_k = 0` exactly.
    ///
    /// Evaluated as `u_j·L − u_k·L` so that membership agrees bit-for-bit
    /// with [`sector_index`](Self::sector_index).
    pub fn constraint_values(&self, k: usize, losses: &[f64]) -> Result<ConstraintValues> {
        self.check_index(k)?;
        self.check_loss(losses)?;
        let own = dot(&self.vectors[k], losses);
        let values = self
            .vectors
            .iter()
            .enumerate()
            .map(|(j, u)| if j == k { 0.0 } else { dot(u, losses) - own })
            .collect();
        Ok(ConstraintValues { owner: k, values })
    }

    /// `u_j − u_k`, so that `∇G_j = (u_j − u_k)ᵀ·J`.
    pub fn constraint_gradient_coeffs(&self, k: usize, j: usize) -> Result<Vec<f64>> {
        self.check_index(k)?;
        self.check_index(j)?;
        if j == k {
            return invalid("the self constraint j = k is vacuous and has no gradient");
        }
        Ok(self.vectors[j]
            .iter()
            .zip(&self.vectors[k])
            .map(|(a, b)| a - b)
            .collect())
    }

    /// Coefficient rows for every index in `active`, in order.
    pub fn coefficient_rows(&self, active: &ActivatedSet) -> Result<Vec<Vec<f64>>> {
        active
            .indices
            .iter()
            .map(|&j| self.constraint_gradient_coeffs(active.owner, j))
            .collect()
    }
}

fn same_direction(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DUPLICATE_TOL)
}

/// Default preference set of `count` vectors in `m` objectives.
///
/// For two objectives this is the closed form
/// `{(cos(kπ/2K), sin(kπ/2K)) : k = 0…K}` with `K = count − 1`; `seed` is
/// unused. For three or more objectives the vectors are drawn uniformly on the
/// positive-orthant part of the unit sphere (absolute values of i.i.d.
/// standard normals, normalized) from a generator seeded with `seed`.
pub fn even_preference_vectors(count: usize, m: usize, seed: u64) -> Result<PreferenceVectors> {
    if count < 2 {
        return invalid(format!("need at least 2 preference vectors, got {count}"));
    }
    if m < 2 {
        return invalid(format!("need at least 2 objectives, got {m}"));
    }
    if m == 2 {
        let k_max = (count - 1) as f64;
        let vectors = (0..count)
            .map(|k| {
                let angle = k as f64 * std::f64::consts::PI / (2.0 * k_max);
                // cos rounds to about −1e-16 at the last angle.
                vec![angle.cos().max(0.0), angle.sin()]
            })
            .collect();
        return PreferenceVectors::new(vectors);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    while vectors.len() < count {
        let raw: Vec<f64> = (0..m)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.abs()
            })
            .collect();
        let n = norm(&raw);
        if n < 1e-12 {
            continue;
        }
        let u: Vec<f64> = raw.iter().map(|x| x / n).collect();
        if vectors.iter().any(|v| same_direction(v, &u)) {
            continue;
        }
        vectors.push(u);
    }
    PreferenceVectors::new(vectors)
}

/// Constraint values for subproblem `owner`, indexed by preference vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintValues {
    pub owner: usize,
    pub values: Vec<f64>,
}

impl ConstraintValues {
    /// Indices `j ≠ owner` with `G_j > 0`.
    pub fn violated(&self) -> impl Iterator<Item = usize> + '_ {
        self.others().filter(|&j| self.values[j] > 0.0)
    }

    pub fn violated_count(&self) -> usize {
        self.violated().count()
    }

    /// Largest `G_j` over `j ≠ owner`; `None` when there is only one vector.
    pub fn max_other(&self) -> Option<f64> {
        self.others()
            .map(|j| self.values[j])
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))))
    }

    /// Every `G_j ≤ 0`, i.e. the losses lie in the owner's sector.
    pub fn in_sector(&self) -> bool {
        self.values.iter().all(|&g| g <= 0.0)
    }

    fn others(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(move |&j| j != self.owner)
    }
}

/// Indices of constraints within `epsilon` of violation, owner excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivatedSet {
    pub owner: usize,
    pub indices: Vec<usize>,
    pub epsilon: f64,
}

impl ActivatedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `{j ≠ k : G_j ≥ −ε}`. With `ε = 0` this is the initialization-phase set
/// of violated or boundary constraints.
pub fn activated_set(g: &ConstraintValues, epsilon: f64) -> Result<ActivatedSet> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return invalid(format!("activation threshold must be non-negative, got {epsilon}"));
    }
    let indices = g.others().filter(|&j| g.values[j] >= -epsilon).collect();
    Ok(ActivatedSet {
        owner: g.owner,
        indices,
        epsilon,
    })
}
