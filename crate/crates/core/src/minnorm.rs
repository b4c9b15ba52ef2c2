//! Min-norm point of a convex hull of gradients, solved in the dual.
//!
//! The common descent direction over a set of gradients `{a_1 … a_q}` is
//! `d = −Σ s_i a_i` where `s` minimizes `‖Σ s_i a_i‖²` over the probability
//! simplex. Only the `q × q` Gram matrix enters the dual, and every gradient
//! is a linear combination `cᵀJ` of loss gradients, so the Gram matrix is
//! formed as `C·(J·Jᵀ)·Cᵀ` at `O(m²n)` cost. `J` is touched once more to
//! assemble `d`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, dot};
use crate::problems::Jacobian;

/// Default stopping tolerance on the Frank–Wolfe gap, relative to the
/// current objective `sᵀGs`.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default Frank–Wolfe iteration budget.
pub const DEFAULT_MAX_ITER: usize = 250;
/// Default threshold on `‖d‖` below which a point is declared critical.
pub const DEFAULT_CRITICALITY_TOL: f64 = 1e-6;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-8;

/// Symmetric positive semidefinite matrix of pairwise inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    /// Wraps a row-major `size × size` matrix after checking symmetry.
    pub fn new(size: usize, data: Vec<f64>) -> Result<Self> {
        if size == 0 || data.len() != size * size {
            return invalid(format!(
                "gram matrix of size {size} needs {} entries, got {}",
                size * size,
                data.len()
            ));
        }
        if !all_finite(&data) {
            return Err(Error::NumericDomain("gram matrix is not finite".into()));
        }
        let scale = data.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
        for i in 0..size {
            for j in i + 1..size {
                if (data[i * size + j] - data[j * size + i]).abs() > SYMMETRY_TOL * scale {
                    return invalid(format!("gram matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.size).map(|i| self.get(i, i)).sum()
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.size, self.size, &self.data);
        m.symmetric_eigenvalues().min()
    }

    /// Fails unless no eigenvalue is below `−1e-8·trace`.
    pub fn check_psd(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        let floor = -PSD_TOL * self.trace().abs();
        if min < floor {
            return Err(Error::NumericDomain(format!(
                "gram matrix is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    /// `sᵀGs`.
    pub fn quadratic_form(&self, s: &[f64]) -> f64 {
        dot(s, &self.mul(s))
    }

    fn mul(&self, s: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.size).map(|row| dot(row, s)).collect()
    }
}

/// Gram matrix of `{∇L_1 … ∇L_m, c_1ᵀJ, …}` where `c_j` are the constraint
/// coefficient rows.
pub fn build_gram(jac: &Jacobian, coeff_rows: &[Vec<f64>]) -> Result<GramMatrix> {
    let m = jac.objectives();
    if let Some(bad) = coeff_rows.iter().position(|c| c.len() != m) {
        return invalid(format!(
            "coefficient row {bad} has length {}, expected {m}",
            coeff_rows[bad].len()
        ));
    }
    let base = jac.row_gram();
    let q = m + coeff_rows.len();
    // Rows of C·B: identity rows give B's rows, coefficient rows give cᵀB.
    let cb: Vec<Vec<f64>> = (0..q)
        .map(|a| {
            if a < m {
                base[a * m..(a + 1) * m].to_vec()
            } else {
                let c = &coeff_rows[a - m];
                (0..m).map(|j| (0..m).map(|i| c[i] * base[i * m + j]).sum()).collect()
            }
        })
        .collect();
    let mut data = vec![0.0; q * q];
    for a in 0..q {
        for b in a..q {
            let v = if b < m {
                cb[a][b]
            } else {
                dot(&cb[a], &coeff_rows[b - m])
            };
            data[a * q + b] = v;
            data[b * q + a] = v;
        }
    }
    GramMatrix::new(q, data)
}

/// Weight `λ ∈ [0, 1]` minimizing `‖λ·g_1 + (1 − λ)·g_2‖` given the inner
/// products `g11 = g_1·g_1`, `g12 = g_1·g_2`, `g22 = g_2·g_2`.
pub fn min_norm_pair(g11: f64, g12: f64, g22: f64) -> f64 {
    let denom = g11 - 2.0 * g12 + g22;
    if denom < 1e-12 {
        return 0.5;
    }
    ((g22 - g12) / denom).clamp(0.0, 1.0)
}

/// Result of a simplex min-norm solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    /// Point on the simplex, one weight per Gram row.
    pub weights: Vec<f64>,
    /// `sᵀGs`, equal to `‖d‖²`.
    pub objective: f64,
    /// Frank–Wolfe gap `sᵀGs − min_t (Gs)_t` at return.
    pub gap: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the gap test passed.
    pub converged: bool,
}

impl SimplexSolution {
    /// Splits the weights into loss multipliers and constraint multipliers.
    pub fn into_duals(self, objectives: usize) -> Result<DualWeights> {
        if objectives > self.weights.len() {
            return invalid("more objectives than simplex weights");
        }
        let mut lambda = self.weights;
        let beta = lambda.split_off(objectives);
        Ok(DualWeights {
            lambda,
            beta,
            converged: self.converged,
        })
    }
}

/// Minimizes `sᵀGs` over the probability simplex.
///
/// Fully-corrective Frank–Wolfe (Wolfe's min-norm-point method), started
/// from the vertex with the smallest diagonal entry. Each major cycle adds the
/// Frank–Wolfe vertex to the support; minor cycles then move to the exact
/// minimizer over the support's affine hull, stopping at the simplex boundary
/// and dropping vertices whose weight reaches zero. Stops once the gap is at
/// most `tol·sᵀGs` (plus a floor of `1e-14·max_i G_ii` for a zero minimum)
/// or after `max_iter` minor cycles, reported through `converged`. One and
/// two dimensional problems are solved in closed form.
pub fn solve_simplex_min_norm(gram: &GramMatrix, tol: f64, max_iter: usize) -> Result<SimplexSolution> {
    solve_impl(gram, tol, max_iter, None)
}

/// As [`solve_simplex_min_norm`], also returning the objective after every
/// iteration (starting with the initial vertex).
pub fn solve_simplex_min_norm_traced(
    gram: &GramMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(SimplexSolution, Vec<f64>)> {
    let mut trace = Vec::new();
    let sol = solve_impl(gram, tol, max_iter, Some(&mut trace))?;
    Ok((sol, trace))
}

fn solve_impl(
    gram: &GramMatrix,
    tol: f64,
    max_iter: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<SimplexSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return invalid(format!("min-norm tolerance must be positive, got {tol}"));
    }
    gram.check_psd()?;
    let q = gram.size();

    let finish = |s: Vec<f64>, iterations: usize, converged: bool| {
        let r = gram.mul(&s);
        let objective = dot(&s, &r);
        let min_r = r.iter().copied().fold(f64::INFINITY, f64::min);
        SimplexSolution {
            gap: (objective - min_r).max(0.0),
            objective,
            weights: s,
            iterations,
            converged,
        }
    };

    if q == 1 {
        if let Some(t) = trace.as_deref_mut() {
            t.push(gram.get(0, 0));
        }
        return Ok(finish(vec![1.0], 0, true));
    }
    if q == 2 {
        let lam = min_norm_pair(gram.get(0, 0), gram.get(0, 1), gram.get(1, 1));
        let s = vec![lam, 1.0 - lam];
        if let Some(t) = trace.as_deref_mut() {
            t.push(gram.quadratic_form(&s));
        }
        return Ok(finish(s, 0, true));
    }

    let start = (0..q)
        .min_by(|&a, &b| gram.get(a, a).total_cmp(&gram.get(b, b)))
        .expect("q >= 3");
    let scale = (0..q).map(|i| gram.get(i, i)).fold(0.0, f64::max);
    let mut s = vec![0.0; q];
    s[start] = 1.0;
    let mut support = vec![start];
    let mut r = gram.mul(&s);
    let mut obj = dot(&s, &r);
    if let Some(t) = trace.as_deref_mut() {
        t.push(obj);
    }

    let mut iterations = 0;
    'major: while iterations < max_iter {
        let toward = argmin(&r);
        if obj - r[toward] <= tol * obj + ZERO_GAP * scale || support.contains(&toward) {
            break;
        }
        support.push(toward);
        // Minor cycles: move to the affine minimizer over the support,
        // stopping at the simplex boundary and dropping vertices that hit it.
        loop {
            iterations += 1;
            let Some(y) = affine_min_norm(gram, &support) else {
                support.pop();
                break 'major;
            };
            if y.iter().all(|&v| v > 0.0) {
                s.iter_mut().for_each(|x| *x = 0.0);
                for (&i, &v) in support.iter().zip(&y) {
                    s[i] = v;
                }
            } else {
                let theta = support
                    .iter()
                    .zip(&y)
                    .filter(|&(_, &v)| v <= 0.0)
                    .map(|(&i, &v)| s[i] / (s[i] - v))
                    .fold(1.0, f64::min);
                for (&i, &v) in support.iter().zip(&y) {
                    s[i] += theta * (v - s[i]);
                }
                let drop = support
                    .iter()
                    .copied()
                    .zip(&y)
                    .filter(|&(_, &v)| v <= 0.0)
                    .min_by(|a, b| s[a.0].total_cmp(&s[b.0]))
                    .map(|(i, _)| i)
                    .expect("some weight is non-positive");
                s[drop] = 0.0;
                support.retain(|&i| i != drop && s[i] > 0.0);
            }
            r = gram.mul(&s);
            obj = dot(&s, &r);
            if let Some(t) = trace.as_deref_mut() {
                t.push(obj);
            }
            if y.iter().all(|&v| v > 0.0) || iterations >= max_iter {
                break;
            }
        }
    }
    let converged = obj - r[argmin(&r)] <= tol * obj + ZERO_GAP * scale;
    Ok(finish(normalize(s), iterations, converged))
}

/// Gap below which the minimum norm counts as reached when it is zero or
/// nearly so, relative to the largest squared gradient norm.
const ZERO_GAP: f64 = 1e-14;

/// Weights `y` with `Σ y = 1` minimizing `yᵀ G_S y` over the rows and
/// columns `support`, from the bordered system `[G_S 1; 1ᵀ 0]`.
fn affine_min_norm(gram: &GramMatrix, support: &[usize]) -> Option<Vec<f64>> {
    let p = support.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(p + 1, p + 1);
    for (x, &i) in support.iter().enumerate() {
        for (z, &j) in support.iter().enumerate() {
            a[(x, z)] = gram.get(i, j);
        }
        a[(x, p)] = 1.0;
        a[(p, x)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(p + 1);
    b[p] = 1.0;
    let y = a.lu().solve(&b)?;
    let y: Vec<f64> = y.iter().take(p).copied().collect();
    y.iter().all(|v| v.is_finite()).then_some(y)
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

fn normalize(mut s: Vec<f64>) -> Vec<f64> {
    s.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = s.iter().sum();
    s.iter_mut().for_each(|x| *x /= total);
    s
}

/// Multipliers on the loss gradients (`lambda`) and on the activated
/// constraint gradients (`beta`). Together they lie on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWeights {
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    /// Whether the solver met its tolerance.
    pub converged: bool,
}

impl DualWeights {
    pub fn total(&self) -> f64 {
        self.lambda.iter().chain(&self.beta).sum()
    }
}

/// Composite loss weights `w = λ + Σ_j β_j·c_j`. May contain negative
/// entries.
pub fn composite_weights(duals: &DualWeights, coeff_rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    if duals.beta.len() != coeff_rows.len() {
        return invalid(format!(
            "{} constraint multipliers for {} coefficient rows",
            duals.beta.len(),
            coeff_rows.len()
        ));
    }
    let mut w = duals.lambda.clone();
    for (b, c) in duals.beta.iter().zip(coeff_rows) {
        if c.len() != w.len() {
            return invalid("coefficient row length does not match objective count");
        }
        for (wi, ci) in w.iter_mut().zip(c) {
            *wi += b * ci;
        }
    }
    Ok(w)
}

/// One assembled descent direction and its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentStep {
    pub direction: Vec<f64>,
    /// `−‖d‖²`, the optimal bound on every directional derivative.
    pub alpha_bound: f64,
    pub duals: DualWeights,
    /// Loss weights `w` with `d = −Jᵀw`.
    pub effective_weights: Vec<f64>,
    pub direction_norm: f64,
    /// `‖d‖` fell below the criticality tolerance.
    pub critical: bool,
}

/// `d = −Jᵀw` with `w` the composite weights of `duals`.
pub fn assemble_direction(
    jac: &Jacobian,
    coeff_rows: &[Vec<f64>],
    duals: DualWeights,
    criticality_tol: f64,
) -> Result<DescentStep> {
    if duals.lambda.len() != jac.objectives() {
        return invalid(format!(
            "{} loss multipliers for {} objectives",
            duals.lambda.len(),
            jac.objectives()
        ));
    }
    let effective_weights = composite_weights(&duals, coeff_rows)?;
    let mut direction = jac.transpose_mul(&effective_weights)?;
    direction.iter_mut().for_each(|x| *x = -*x);
    let sq_norm = dot(&direction, &direction);
    let direction_norm = sq_norm.sqrt();
    Ok(DescentStep {
        alpha_bound: -sq_norm,
        critical: direction_norm < criticality_tol,
        direction,
        duals,
        effective_weights,
        direction_norm,
    })
}

/// Settings for one dual solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinNormSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub criticality_tol: f64,
}

impl Default for MinNormSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            criticality_tol: DEFAULT_CRITICALITY_TOL,
        }
    }
}

/// Gram, dual solve and assembly in one call. With no coefficient rows this
/// is the unconstrained common descent direction.
pub fn common_descent(jac: &Jacobian, coeff_rows: &[Vec<f64>], settings: &MinNormSettings) -> Result<DescentStep> {
    common_descent_over(jac, coeff_rows, true, settings)
}

/// Like [`common_descent`] but optionally leaves the loss gradients out of
/// the hull, so only the constraint gradients are descended.
pub(crate) fn common_descent_over(
    jac: &Jacobian,
    coeff_rows: &[Vec<f64>],
    include_losses: bool,
    settings: &MinNormSettings,
) -> Result<DescentStep> {
    let m = jac.objectives();
    let gram = build_gram(jac, coeff_rows)?;
    if include_losses {
        let duals = solve_simplex_min_norm(&gram, settings.tol, settings.max_iter)?.into_duals(m)?;
        return assemble_direction(jac, coeff_rows, duals, settings.criticality_tol);
    }
    if coeff_rows.is_empty() {
        return invalid("constraint-only descent needs at least one constraint");
    }
    let q = coeff_rows.len();
    let sub: Vec<f64> = (m..m + q)
        .flat_map(|a| (m..m + q).map(move |b| (a, b)))
        .map(|(a, b)| gram.get(a, b))
        .collect();
    let sub = GramMatrix::new(q, sub)?;
    let sol = solve_simplex_min_norm(&sub, settings.tol, settings.max_iter)?;
    let duals = DualWeights {
        lambda: vec![0.0; m],
        beta: sol.weights,
        converged: sol.converged,
    };
    assemble_direction(jac, coeff_rows, duals, settings.criticality_tol)
}
