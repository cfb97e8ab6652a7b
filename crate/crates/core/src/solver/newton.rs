//! Closed-form solves with the Newton matrix of the ℓ-subproblem.
//!
//! The Hessian of the smooth part is `2α(2I + SᵀS) + β·q·qᵀ`, so each ADMM
//! step solves `(A + β·q·qᵀ)·x = rhs` with `A = (4α + ρ)I + 2α·SᵀS`.
//! Because `S·Sᵀ = (b-2)I + 11ᵀ` on a complete pair set, the Woodbury identity
//! gives `A⁻¹` in `O(p)`:
//!
//! ```text
//! A⁻¹x = (x - γ Sᵀ M⁻¹ S x) / c        c = 4α + ρ, γ = 2α
//! M    = cI + γ S Sᵀ = aI + γ 11ᵀ       a = c + γ(b - 2)
//! M⁻¹y = (y - γ/(a + γb) · (1ᵀy) · 1) / a
//! ```
//!
//! and the rank-one term is folded in with Sherman–Morrison.

use nalgebra::DVector;

use crate::error::{invalid, Error, Result, Sign};
use crate::graph::{EdgeVector, PairIncidence};

/// Pre-factorized `A = (4α + ρ)I + 2α·SᵀS` for one sign, with `A⁻¹q` cached.
#[derive(Debug, Clone)]
pub(crate) struct NewtonOperator {
    incidence: PairIncidence,
    scale: f64,
    gamma: f64,
    inner_diag: f64,
    q: DVector<f64>,
    a_inv_q: DVector<f64>,
    q_a_inv_q: f64,
}

impl NewtonOperator {
    pub(crate) fn new(incidence: PairIncidence, alpha: f64, rho: f64, q: DVector<f64>) -> Self {
        let b = incidence.nodes() as f64;
        let scale = 4.0 * alpha + rho;
        let gamma = 2.0 * alpha;
        let inner_diag = scale + gamma * (b - 2.0);
        let mut op = Self {
            incidence,
            scale,
            gamma,
            inner_diag,
            a_inv_q: DVector::zeros(q.len()),
            q,
            q_a_inv_q: 0.0,
        };
        op.a_inv_q = op.base_solve(&op.q);
        op.q_a_inv_q = op.q.dot(&op.a_inv_q);
        op
    }

    /// `A⁻¹·x`.
    pub(crate) fn base_solve(&self, x: &DVector<f64>) -> DVector<f64> {
        let b = self.incidence.nodes() as f64;
        let mut y = self.incidence.apply_unchecked(x);
        let shift = self.gamma / (self.inner_diag + self.gamma * b) * y.sum();
        y.add_scalar_mut(-shift);
        y /= self.inner_diag;
        let z = self.incidence.adjoint_unchecked(&y);
        let mut out = x.clone();
        out.axpy(-self.gamma, &z, 1.0);
        out / self.scale
    }

    /// `(A + β·q·qᵀ)⁻¹·rhs`.
    pub(crate) fn solve(&self, beta: f64, rhs: &DVector<f64>) -> DVector<f64> {
        let mut u = self.base_solve(rhs);
        if beta != 0.0 {
            let coeff = beta * self.q.dot(&u) / (1.0 + beta * self.q_a_inv_q);
            u.axpy(-coeff, &self.a_inv_q, 1.0);
        }
        u
    }
}

/// Solves `(2α(2I + SᵀS) + ρI + β·q·qᵀ)·x = rhs` with
/// `β = barrier_weight / g_val²`, where `barrier_weight = 1/η`.
pub fn newton_system_solve(
    q: &EdgeVector,
    g_val: f64,
    barrier_weight: f64,
    alpha: f64,
    rho: f64,
    rhs: &EdgeVector,
) -> Result<EdgeVector> {
    if q.len() != rhs.len() || q.nodes() != rhs.nodes() {
        return Err(Error::Dimension {
            expected: q.len(),
            got: rhs.len(),
        });
    }
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    if !(rho > 0.0) {
        return Err(invalid("rho", "must be positive"));
    }
    if barrier_weight < 0.0 {
        return Err(invalid("barrier_weight", "must be nonnegative"));
    }
    let beta = if barrier_weight == 0.0 {
        0.0
    } else {
        if !(g_val > 0.0) {
            return Err(Error::BarrierDomain {
                sign: Sign::Positive,
                value: g_val,
            });
        }
        barrier_weight / (g_val * g_val)
    };
    let op = NewtonOperator::new(
        PairIncidence::new(q.nodes()),
        alpha,
        rho,
        q.as_vector().clone(),
    );
    EdgeVector::new(q.nodes(), op.solve(beta, rhs.as_vector()))
}
