//! Newmark time stepping for `M ä + K a + f(t) = 0`.
//!
//! One step with parameters `(β₁, β₂)` and timestep `τ`:
//!
//! ```text
//! ȧ* = ȧₙ + τ(1 − β₁) äₙ
//! a* = aₙ + τ ȧₙ + ½τ²(1 − β₂) äₙ
//! äₙ₊₁ = −A⁻¹ (fₙ₊₁ + K a*),   A = M + ½τ²β₂ K
//! ȧₙ₊₁ = ȧ* + β₁τ äₙ₊₁
//! aₙ₊₁ = a* + ½τ²β₂ äₙ₊₁
//! ```
//!
//! `A` is constant while `M`, `K`, `τ` and the constraints are, so it is
//! factored once and reused for every step.

use thiserror::Error;

use crate::assembly::GlobalSystem;
use crate::scalar::Scalar;
use crate::sparse::{SparseError, SparseLu};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("timestep must be positive and finite (got {0})")]
    Timestep(f64),
    #[error("Newmark parameters must be finite (got β₁ = {0}, β₂ = {1})")]
    Parameters(f64, f64),
    #[error("{what} factorization failed: {source} (pivot/scale ratio {ratio:e})")]
    Singular {
        what: &'static str,
        ratio: f64,
        source: SparseError,
    },
    #[error("factorization is stale: {0}")]
    StaleFactorization(&'static str),
    #[error("expected vectors of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("state became non-finite at step {0}")]
    NonFinite(u64),
}

fn singular(what: &'static str, source: SparseError) -> IntegratorError {
    let ratio = match source {
        SparseError::Singular { pivot, scale, .. } if scale > 0.0 => pivot / scale,
        _ => 0.0,
    };
    IntegratorError::Singular { what, ratio, source }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewmarkParams<T> {
    pub beta1: T,
    pub beta2: T,
    pub tau: T,
}

impl<T: Scalar> NewmarkParams<T> {
    pub fn new(beta1: T, beta2: T, tau: T) -> Result<Self, IntegratorError> {
        if !(tau.is_finite() && tau > T::zero()) {
            return Err(IntegratorError::Timestep(tau.to_f64_lossy()));
        }
        if !(beta1.is_finite() && beta2.is_finite()) {
            return Err(IntegratorError::Parameters(beta1.to_f64_lossy(), beta2.to_f64_lossy()));
        }
        Ok(Self { beta1, beta2, tau })
    }

    /// `β₁ = β₂ = ½`: second order, unconditionally stable, energy conserving.
    pub fn average_acceleration(tau: T) -> Result<Self, IntegratorError> {
        Self::new(T::lit(0.5), T::lit(0.5), tau)
    }

    /// `β₂ ≥ β₁ ≥ ½`.
    pub fn is_unconditionally_stable(&self) -> bool {
        self.beta2 >= self.beta1 && self.beta1 >= T::lit(0.5)
    }

    pub fn with_tau(&self, tau: T) -> Result<Self, IntegratorError> {
        Self::new(self.beta1, self.beta2, tau)
    }
}

/// Nodal displacements, velocities and accelerations at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub a: Vec<T>,
    pub adot: Vec<T>,
    pub addot: Vec<T>,
    pub t: T,
    pub step: u64,
}

impl<T: Scalar> State<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            a: vec![T::zero(); n],
            adot: vec![T::zero(); n],
            addot: vec![T::zero(); n],
            t: T::zero(),
            step: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(&self.adot).chain(&self.addot).all(|v| v.is_finite())
    }
}

/// Initial state: `ä₀` from `M ä₀ = −K a₀ − f`, using the system's current `f`;
/// constrained nodes get their prescribed velocity.
pub fn init_state<T: Scalar>(
    system: &GlobalSystem<T>,
    a0: Vec<T>,
    v0: Vec<T>,
    column_order: Option<&[usize]>,
) -> Result<State<T>, IntegratorError> {
    let n = system.n_dofs();
    for len in [a0.len(), v0.len()] {
        if len != n {
            return Err(IntegratorError::Dimension { expected: n, got: len });
        }
    }
    let lu = SparseLu::factor(&system.m, column_order).map_err(|e| singular("mass matrix", e))?;
    let ka = system.k.mul_vec(&a0);
    let rhs: Vec<T> = ka.iter().zip(&system.f).map(|(&k, &f)| -(k + f)).collect();
    let addot = lu.solve(&rhs);
    let mut adot = v0;
    for c in system.constraints() {
        for k in 0..3 {
            adot[3 * c.node + k] = c.v_fix[k];
        }
    }
    Ok(State {
        a: a0,
        adot,
        addot,
        t: T::zero(),
        step: 0,
    })
}

/// Factored iteration matrix `A = M + ½τ²β₂K` bound to one system revision.
#[derive(Debug, Clone)]
pub struct Newmark<T> {
    params: NewmarkParams<T>,
    revision: u64,
    lu: SparseLu<T>,
}

impl<T: Scalar> Newmark<T> {
    pub fn factor(
        system: &GlobalSystem<T>,
        params: NewmarkParams<T>,
        column_order: Option<&[usize]>,
    ) -> Result<Self, IntegratorError> {
        let c = T::lit(0.5) * params.tau * params.tau * params.beta2;
        let a = system
            .m
            .linear_combination(T::one(), &system.k, c)
            .map_err(|e| singular("iteration matrix", e))?;
        let lu = SparseLu::factor(&a, column_order).map_err(|e| singular("iteration matrix", e))?;
        Ok(Self {
            params,
            revision: system.revision(),
            lu,
        })
    }

    pub fn params(&self) -> &NewmarkParams<T> {
        &self.params
    }

    pub fn lu(&self) -> &SparseLu<T> {
        &self.lu
    }

    /// Solves `A x = rhs` with the stored factors.
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        self.lu.solve(rhs)
    }

    /// Advances `state` by one step. `system.f` must already hold `fₙ₊₁`.
    pub fn step(&self, state: &mut State<T>, system: &GlobalSystem<T>, params: &NewmarkParams<T>) -> Result<(), IntegratorError> {
        if *params != self.params {
            return Err(IntegratorError::StaleFactorization("Newmark parameters changed since factorization"));
        }
        if system.revision() != self.revision {
            return Err(IntegratorError::StaleFactorization("system matrices changed since factorization"));
        }
        let n = system.n_dofs();
        if state.a.len() != n {
            return Err(IntegratorError::Dimension {
                expected: n,
                got: state.a.len(),
            });
        }
        let NewmarkParams { beta1, beta2, tau } = self.params;
        let half_tau2 = T::lit(0.5) * tau * tau;
        let one = T::one();
        let mut v_pred = vec![T::zero(); n];
        let mut a_pred = vec![T::zero(); n];
        for i in 0..n {
            v_pred[i] = state.adot[i] + tau * (one - beta1) * state.addot[i];
            a_pred[i] = state.a[i] + tau * state.adot[i] + half_tau2 * (one - beta2) * state.addot[i];
        }
        let mut rhs = system.k.mul_vec(&a_pred);
        for (r, &f) in rhs.iter_mut().zip(&system.f) {
            *r = -(*r + f);
        }
        let mut work = vec![T::zero(); n];
        self.lu.solve_into(&rhs, &mut state.addot, &mut work);
        for i in 0..n {
            state.adot[i] = v_pred[i] + beta1 * tau * state.addot[i];
            state.a[i] = a_pred[i] + half_tau2 * beta2 * state.addot[i];
        }
        state.step += 1;
        state.t = T::from_count(state.step as usize) * tau;
        Ok(())
    }
}

/// `(½ ȧᵀMȧ, ½ aᵀKa)` with the unconstrained (symmetric) matrices.
pub fn energy<T: Scalar>(state: &State<T>, unconstrained: &GlobalSystem<T>) -> (T, T) {
    let half = T::lit(0.5);
    (
        half * unconstrained.m.quadratic_form(&state.adot),
        half * unconstrained.k.quadratic_form(&state.a),
    )
}
