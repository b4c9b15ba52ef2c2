//! Multi-objective problems with analytic Jacobians.
//!
//! A problem maps a parameter vector `θ ∈ Rⁿ` to `m` losses and exposes the
//! `m × n` Jacobian whose row `i` is `∇L_i(θ)`. Evaluators are stateless after
//! construction, so one instance is shared across concurrently running
//! subproblems.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, dot};

/// Dense row-major `m × n` Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    objectives: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Jacobian {
    pub fn zeros(objectives: usize, dim: usize) -> Self {
        Self {
            objectives,
            dim,
            data: vec![0.0; objectives * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return invalid("jacobian needs at least one row");
        };
        let dim = first.len();
        if dim == 0 {
            return invalid("jacobian rows must be non-empty");
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return invalid(format!("jacobian row {i} has length {}, expected {dim}", row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            objectives: rows.len(),
            dim,
            data,
        })
    }

    pub fn objectives(&self) -> usize {
        self.objectives
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// `Jᵀ·w`, the gradient of `Σ w_i L_i`.
    pub fn transpose_mul(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.objectives {
            return invalid(format!(
                "weight vector has length {}, jacobian has {} rows",
                weights.len(),
                self.objectives
            ));
        }
        let mut out = vec![0.0; self.dim];
        for (row, &w) in self.rows().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (o, &g) in out.iter_mut().zip(row) {
                *o += w * g;
            }
        }
        Ok(out)
    }

    /// `J·v`, the directional derivatives of every loss along `v`.
    pub fn mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return invalid(format!(
                "vector has length {}, jacobian has {} columns",
                v.len(),
                self.dim
            ));
        }
        Ok(self.rows().map(|row| dot(row, v)).collect())
    }

    /// The `m × m` matrix `J·Jᵀ`, row-major. Exactly symmetric.
    pub fn row_gram(&self) -> Vec<f64> {
        let m = self.objectives;
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = dot(self.row(i), self.row(j));
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        g
    }
}

/// A vector-valued objective with exact first derivatives.
pub trait MultiObjectiveProblem: Send + Sync {
    /// Dimension `n` of the parameter vector.
    fn dim(&self) -> usize;

    /// Number of objectives `m`.
    fn objectives(&self) -> usize;

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>>;

    fn jacobian(&self, theta: &[f64]) -> Result<Jacobian>;

    /// Losses and Jacobian in one pass. Implementations that share work
    /// between the two should override this.
    fn evaluate_with_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Jacobian)> {
        Ok((self.evaluate(theta)?, self.jacobian(theta)?))
    }
}

impl<P: MultiObjectiveProblem + ?Sized> MultiObjectiveProblem for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn objectives(&self) -> usize {
        (**self).objectives()
    }
    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        (**self).evaluate(theta)
    }
    fn jacobian(&self, theta: &[f64]) -> Result<Jacobian> {
        (**self).jacobian(theta)
    }
    fn evaluate_with_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Jacobian)> {
        (**self).evaluate_with_jacobian(theta)
    }
}

pub(crate) fn check_theta(theta: &[f64], dim: usize) -> Result<()> {
    if theta.len() != dim {
        return invalid(format!(
            "parameter vector has length {}, problem dimension is {dim}",
            theta.len()
        ));
    }
    if !all_finite(theta) {
        return Err(Error::NumericDomain(
            "parameter vector contains non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Two Gaussian-well objectives centred at `±(1/√d)·1`:
///
/// `L_1(θ) = a_1 − a_1·exp(−‖θ − c‖²)`, `L_2(θ) = a_2 − a_2·exp(−‖θ + c‖²)`.
///
/// With `a = (1, 1)` the Pareto set is the segment between the two centres
/// and the front is concave. Larger `a_1/a_2` makes the first task steeper.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem {
    dim: usize,
    scale: [f64; 2],
}

impl SyntheticProblem {
    pub fn new(dim: usize) -> Result<Self> {
        Self::weighted(dim, 1.0, 1.0)
    }

    pub fn weighted(dim: usize, a1: f64, a2: f64) -> Result<Self> {
        if dim == 0 {
            return invalid("synthetic problem dimension must be at least 1");
        }
        if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
            return invalid(format!("difficulty weights must be positive, got ({a1}, {a2})"));
        }
        Ok(Self { dim, scale: [a1, a2] })
    }

    pub fn scale(&self) -> [f64; 2] {
        self.scale
    }

    /// Offset of each coordinate of the two centres, `1/√d`.
    pub fn centre_offset(&self) -> f64 {
        1.0 / (self.dim as f64).sqrt()
    }

    /// Euclidean distance from `theta` to the segment `{t·c : t ∈ [−1, 1]}`.
    pub fn distance_to_pareto_set(&self, theta: &[f64]) -> f64 {
        let c = self.centre_offset();
        // c has unit norm, so the projection coefficient is θ·c.
        let t = (theta.iter().sum::<f64>() * c).clamp(-1.0, 1.0);
        theta.iter().map(|&x| (x - t * c).powi(2)).sum::<f64>().sqrt()
    }

    /// Squared distances to the two centres.
    fn sq_dists(&self, theta: &[f64]) -> [f64; 2] {
        let c = self.centre_offset();
        theta
            .iter()
            .fold([0.0, 0.0], |[s1, s2], &x| [s1 + (x - c).powi(2), s2 + (x + c).powi(2)])
    }
}

impl MultiObjectiveProblem for SyntheticProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn objectives(&self) -> usize {
        2
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_theta(theta, self.dim)?;
        let r = self.sq_dists(theta);
        Ok(vec![
            self.scale[0] - self.scale[0] * (-r[0]).exp(),
            self.scale[1] - self.scale[1] * (-r[1]).exp(),
        ])
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Jacobian> {
        self.evaluate_with_jacobian(theta).map(|(_, j)| j)
    }

    fn evaluate_with_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Jacobian)> {
        check_theta(theta, self.dim)?;
        let c = self.centre_offset();
        let r = self.sq_dists(theta);
        let e = [(-r[0]).exp(), (-r[1]).exp()];
        let losses = vec![
            self.scale[0] - self.scale[0] * e[0],
            self.scale[1] - self.scale[1] * e[1],
        ];
        let mut jac = Jacobian::zeros(2, self.dim);
        let k1 = 2.0 * self.scale[0] * e[0];
        let k2 = 2.0 * self.scale[1] * e[1];
        for (g, &x) in jac.row_mut(0).iter_mut().zip(theta) {
            *g = k1 * (x - c);
        }
        for (g, &x) in jac.row_mut(1).iter_mut().zip(theta) {
            *g = k2 * (x + c);
        }
        Ok((losses, jac))
    }
}

/// Three logistic-regression tasks on a shared, seeded synthetic design.
///
/// `θ` packs three weight vectors `(w_0, w_1, w_2)` of length `p`. Task `t`
/// scores samples with `v_t = w_t − w_{t+1 mod 3}`, so the effective
/// predictors always sum to zero and the tasks compete for the same
/// parameters. Each loss is the mean logistic loss `log(1 + exp(−y·x·v_t))`
/// with labels `y ∈ {−1, +1}`.
#[derive(Debug, Clone)]
pub struct Logistic3Problem {
    samples: usize,
    features: usize,
    design: Vec<f64>,
    labels: [Vec<f64>; 3],
}

impl Logistic3Problem {
    pub const DEFAULT_SAMPLES: usize = 2000;
    pub const DEFAULT_FEATURES: usize = 20;

    /// Dataset with the default size (2000 samples, 20 features).
    pub fn generate(seed: u64) -> Self {
        Self::with_size(seed, Self::DEFAULT_SAMPLES, Self::DEFAULT_FEATURES).expect("default sizes are valid")
    }

    pub fn with_size(seed: u64, samples: usize, features: usize) -> Result<Self> {
        if samples == 0 || features == 0 {
            return invalid("logistic problem needs at least one sample and one feature");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

        let base: Vec<f64> = (0..features).map(|_| normal()).collect();
        let truths: Vec<Vec<f64>> = (0..3)
            .map(|_| base.iter().map(|b| b + 0.75 * normal()).collect())
            .collect();
        let design: Vec<f64> = (0..samples * features).map(|_| normal()).collect();

        let mut labels: [Vec<f64>; 3] = Default::default();
        for (truth, ys) in truths.iter().zip(labels.iter_mut()) {
            let scale = 1.0 / crate::linalg::norm(truth);
            *ys = design
                .chunks_exact(features)
                .map(|x| {
                    let score = dot(x, truth) * scale + 0.3 * normal();
                    if score >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
        }
        Ok(Self {
            samples,
            features,
            design,
            labels,
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn features(&self) -> usize {
        self.features
    }

    fn effective_weights(&self, theta: &[f64], task: usize) -> Vec<f64> {
        let p = self.features;
        let next = (task + 1) % 3;
        (0..p).map(|i| theta[task * p + i] - theta[next * p + i]).collect()
    }
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl MultiObjectiveProblem for Logistic3Problem {
    fn dim(&self) -> usize {
        3 * self.features
    }

    fn objectives(&self) -> usize {
        3
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_theta(theta, self.dim())?;
        let inv_n = 1.0 / self.samples as f64;
        Ok((0..3)
            .map(|t| {
                let v = self.effective_weights(theta, t);
                self.design
                    .chunks_exact(self.features)
                    .zip(&self.labels[t])
                    .map(|(x, &y)| softplus(-y * dot(x, &v)))
                    .sum::<f64>()
                    * inv_n
            })
            .collect())
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Jacobian> {
        self.evaluate_with_jacobian(theta).map(|(_, j)| j)
    }

    fn evaluate_with_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Jacobian)> {
        check_theta(theta, self.dim())?;
        let p = self.features;
        let inv_n = 1.0 / self.samples as f64;
        let mut losses = Vec::with_capacity(3);
        let mut jac = Jacobian::zeros(3, self.dim());
        for t in 0..3 {
            let v = self.effective_weights(theta, t);
            let mut loss = 0.0;
            let mut grad_v = vec![0.0; p];
            for (x, &y) in self.design.chunks_exact(p).zip(&self.labels[t]) {
                let margin = y * dot(x, &v);
                loss += softplus(-margin);
                let coeff = -y * sigmoid(-margin);
                for (g, &xi) in grad_v.iter_mut().zip(x) {
                    *g += coeff * xi;
                }
            }
            losses.push(loss * inv_n);
            let next = (t + 1) % 3;
            let row = jac.row_mut(t);
            for i in 0..p {
                row[t * p + i] += grad_v[i] * inv_n;
                row[next * p + i] -= grad_v[i] * inv_n;
            }
        }
        Ok((losses, jac))
    }
}

/// Adds a constant per-task offset to every loss. Used to lift problems with
/// negative losses into the non-negative orthant the sector decomposition
/// requires.
pub struct ShiftedProblem<P> {
    inner: P,
    shift: Vec<f64>,
}

impl<P: MultiObjectiveProblem> ShiftedProblem<P> {
    pub fn new(inner: P, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != inner.objectives() {
            return invalid(format!(
                "shift has {} entries, problem has {} objectives",
                shift.len(),
                inner.objectives()
            ));
        }
        if !all_finite(&shift) {
            return invalid("loss shift must be finite");
        }
        Ok(Self { inner, shift })
    }
}

impl<P: MultiObjectiveProblem> MultiObjectiveProblem for ShiftedProblem<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn objectives(&self) -> usize {
        self.inner.objectives()
    }
    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut l = self.inner.evaluate(theta)?;
        l.iter_mut().zip(&self.shift).for_each(|(l, s)| *l += s);
        Ok(l)
    }
    fn jacobian(&self, theta: &[f64]) -> Result<Jacobian> {
        self.inner.jacobian(theta)
    }
    fn evaluate_with_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Jacobian)> {
        let (mut l, j) = self.inner.evaluate_with_jacobian(theta)?;
        l.iter_mut().zip(&self.shift).for_each(|(l, s)| *l += s);
        Ok((l, j))
    }
}

/// Largest discrepancy between the analytic Jacobian and central differences
/// with the given step.
///
/// Each entry's error is `|analytic − numeric| / max(1, |analytic|, |numeric|)`,
/// i.e. relative for entries above one and absolute below.
pub fn finite_diff_check<P>(problem: &P, theta: &[f64], step: f64) -> Result<f64>
where
    P: MultiObjectiveProblem + ?Sized,
{
    if !(step > 0.0 && step.is_finite()) {
        return invalid(format!("finite-difference step must be positive, got {step}"));
    }
    let analytic = problem.jacobian(theta)?;
    let mut probe = theta.to_vec();
    let mut worst = 0.0_f64;
    for j in 0..theta.len() {
        probe[j] = theta[j] + step;
        let up = problem.evaluate(&probe)?;
        probe[j] = theta[j] - step;
        let down = problem.evaluate(&probe)?;
        probe[j] = theta[j];
        for i in 0..analytic.objectives() {
            let numeric = (up[i] - down[i]) / (2.0 * step);
            let a = analytic.row(i)[j];
            let err = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn synthetic_loss_values() {
        let p = SyntheticProblem::new(1).unwrap();
        let l = p.evaluate(&[1.0]).unwrap();
        assert_eq!(l[0], 0.0);
        assert!((l[1] - (1.0 - E.powi(-4))).abs() < 1e-15);
        assert!((l[1] - 0.981684).abs() < 1e-6);

        let l = p.evaluate(&[0.0]).unwrap();
        assert!((l[0] - 0.632121).abs() < 1e-6);
        assert_eq!(l[0], l[1]);

        let w = SyntheticProblem::weighted(1, 50.0, 1.0).unwrap();
        let l = w.evaluate(&[-1.0]).unwrap();
        assert!((l[0] - 49.0842).abs() < 1e-4);
        assert_eq!(l[1], 0.0);
    }

    #[test]
    fn synthetic_gradient_values() {
        let p = SyntheticProblem::new(1).unwrap();
        let j = p.jacobian(&[0.0]).unwrap();
        assert!((j.row(0)[0] + 2.0 / E).abs() < 1e-15);
        assert!((j.row(1)[0] - 2.0 / E).abs() < 1e-15);
        assert!((j.row(0)[0] + 0.735759).abs() < 1e-6);
        let j = p.jacobian(&[1.0]).unwrap();
        assert_eq!(j.row(0)[0], 0.0);
    }

    #[test]
    fn synthetic_gradient_matches_central_differences_1d() {
        let p = SyntheticProblem::new(1).unwrap();
        let h = 1e-6;
        let up = p.evaluate(&[h]).unwrap();
        let down = p.evaluate(&[-h]).unwrap();
        let j = p.jacobian(&[0.0]).unwrap();
        for i in 0..2 {
            let fd = (up[i] - down[i]) / (2.0 * h);
            assert!((fd - j.row(i)[0]).abs() < 1e-8, "{fd} vs {}", j.row(i)[0]);
        }
    }

    #[test]
    fn dimension_mismatch_is_invalid_argument() {
        let p = SyntheticProblem::new(3).unwrap();
        assert!(matches!(p.evaluate(&[0.0; 2]), Err(Error::InvalidArgument(_))));
        assert!(matches!(p.jacobian(&[0.0; 4]), Err(Error::InvalidArgument(_))));
        let l = Logistic3Problem::with_size(0, 10, 2).unwrap();
        assert!(matches!(l.evaluate(&[0.0; 5]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(SyntheticProblem::new(0).is_err());
        assert!(SyntheticProblem::weighted(2, 0.0, 1.0).is_err());
        assert!(SyntheticProblem::weighted(2, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn zero_step_is_rejected() {
        let p = SyntheticProblem::new(2).unwrap();
        assert!(matches!(
            finite_diff_check(&p, &[0.1, 0.2], 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn distance_to_pareto_set() {
        let p = SyntheticProblem::new(4).unwrap();
        let c = p.centre_offset();
        assert!(p.distance_to_pareto_set(&[0.3 * c; 4]) < 1e-15);
        assert!(p.distance_to_pareto_set(&[c; 4]) < 1e-15);
        // Beyond the endpoint: distance is measured to the endpoint.
        let d = p.distance_to_pareto_set(&[2.0 * c; 4]);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_losses_positive_and_deterministic() {
        let a = Logistic3Problem::with_size(5, 200, 6).unwrap();
        let b = Logistic3Problem::with_size(5, 200, 6).unwrap();
        let theta: Vec<f64> = (0..18).map(|i| (i as f64 * 0.37).sin()).collect();
        let la = a.evaluate(&theta).unwrap();
        let lb = b.evaluate(&theta).unwrap();
        assert_eq!(la, lb);
        assert!(la.iter().all(|&l| l > 0.0));
        let (l2, _) = a.evaluate_with_jacobian(&theta).unwrap();
        assert_eq!(la, l2);
    }

    #[test]
    fn shifted_problem_offsets_losses_only() {
        let base = SyntheticProblem::new(2).unwrap();
        let shifted = ShiftedProblem::new(base.clone(), vec![1.0, 2.0]).unwrap();
        let th = [0.2, -0.1];
        let l0 = base.evaluate(&th).unwrap();
        let l1 = shifted.evaluate(&th).unwrap();
        assert_eq!(l1, vec![l0[0] + 1.0, l0[1] + 2.0]);
        assert_eq!(base.jacobian(&th).unwrap(), shifted.jacobian(&th).unwrap());
        assert!(ShiftedProblem::new(base, vec![1.0]).is_err());
    }

    #[test]
    fn jacobian_products() {
        let j = Jacobian::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(j.transpose_mul(&[1.0, -1.0]).unwrap(), vec![-2.0, -2.0]);
        assert_eq!(j.mul(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(j.row_gram(), vec![5.0, 11.0, 11.0, 25.0]);
        assert!(Jacobian::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
