//! Preference-guided multi-objective gradient descent.
//!
//! A vector-valued loss `L(θ) = (L_1(θ), …, L_m(θ))` is minimized by splitting
//! the non-negative loss space into sectors, one per preference vector, and
//! running a constrained common-descent method inside each sector. Every step
//! solves a small min-norm problem over the simplex spanned by the loss
//! gradients plus the gradients of the near-active sector constraints, so the
//! per-step cost is dominated by `O(m²n)` inner products regardless of how
//! many constraints are active.
//!
//! The crate also ships the two reference baselines (unconstrained
//! multiple-gradient descent and fixed-weight linear scalarization), front
//! quality metrics, and an experiment runner behind the `paretomtl` binary.
//!
//! | Module | Purpose |
//! |---|---|
//! | [`problems`] | problem trait and benchmark problems with analytic Jacobians |
//! | [`decomposition`] | preference vectors, sectors, sector constraints |
//! | [`minnorm`] | Gram matrices, simplex min-norm solver, descent assembly |
//! | [`solvers`] | Pareto MTL, MGDA and linear-scalarization drivers |
//! | [`metrics`] | dominance, hypervolume, spacing, sector coverage |
//! | [`experiment`] | config parsing, batch execution, artifacts |
//!
//! Independent runs are dispatched through [`execution`], which uses rayon
//! when the `parallel` feature is enabled (the default) and a plain loop
//! otherwise. Results are identical either way.

pub mod decomposition;
pub mod diagnostics;
pub mod error;
pub mod execution;
pub mod experiment;
pub mod metrics;
pub mod minnorm;
pub mod problems;
pub mod solvers;

mod linalg;

pub use error::{Error, Result};
