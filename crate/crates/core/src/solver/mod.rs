//! Signed Laplacian estimation with hidden nodes under column-sparsity
//! regularization.
//!
//! The estimator minimizes, over Laplacians `L⁺`, `L⁻` of the observed nodes
//! and the hidden-node nuisance terms `P̃^s`, `R^s`,
//!
//! ```text
//! tr(C L⁺) + 2tr(P̃⁺) + tr(R⁺) - tr(C L⁻) - 2tr(P̃⁻) - tr(R⁻)
//!   + Σ_s α_s‖L^s‖_F² + σ_s‖P̃^s‖₂,₁
//! s.t. tr(C L^s) + 2tr(P̃^s) + tr(R^s) ≥ 0,  tr(R^s) ≥ 0,  tr(L^s) = B,
//!      L^s combinatorial Laplacians with disjoint off-diagonal supports
//! ```
//!
//! by block coordinate descent: an ADMM solve for the Laplacians, then
//! closed-form updates for `P̃` and `R`.
//!
//! `P̃^s` is carried as its diagonal `p^s` and `R^s` as its trace `r^s`. The
//! objective touches `P̃^s` only through its trace and the `‖·‖₂,₁` penalty, and
//! every column norm is at least the size of its diagonal entry, so a diagonal
//! minimizer always exists. For a diagonal matrix the nuclear norm equals
//! `‖·‖₂,₁`, so the low-rank variant of the penalty gives the same estimator.

mod admm;
mod newton;
mod projection;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use admm::{admm_l_update, barrier_argument, grad_f, subproblem_objective, InnerStats};
pub(crate) use admm::{BlockWeights, LaplacianBlock, SignWeights};
pub use newton::newton_system_solve;
pub use projection::{project_complementarity, project_hyperplane};

use crate::error::{invalid, Error, Result, Sign};
use crate::graph::{ensure_symmetric, pair_count, EdgeVector, LaplacianPair};

/// Outer-loop weights and stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdConfig {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub outer_iters: usize,
    pub outer_tol: f64,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            alpha_plus: 0.1,
            alpha_minus: 0.1,
            sigma_plus: 2.5,
            sigma_minus: 2.5,
            eta_plus: 10.0,
            eta_minus: 10.0,
            outer_iters: 50,
            outer_tol: 1e-4,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        positive("alpha_plus", self.alpha_plus)?;
        positive("alpha_minus", self.alpha_minus)?;
        positive("sigma_plus", self.sigma_plus)?;
        positive("sigma_minus", self.sigma_minus)?;
        positive("eta_plus", self.eta_plus)?;
        positive("eta_minus", self.eta_minus)?;
        // For σ₋ ≤ 2 the P̃⁻ subproblem is unbounded below along P̃⁻ = βI.
        if self.sigma_minus <= 2.0 {
            return Err(invalid(
                "sigma_minus",
                format!("must exceed 2 for a bounded P-update, got {}", self.sigma_minus),
            ));
        }
        if self.outer_iters == 0 {
            return Err(invalid("outer_iters", "must be at least 1"));
        }
        if !(self.outer_tol >= 0.0) {
            return Err(invalid("outer_tol", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Inner ADMM parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho: f64,
    pub inner_iters: usize,
    pub primal_tol: f64,
    pub domain_eps: f64,
    pub backtrack_max: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            inner_iters: 500,
            primal_tol: 1e-6,
            domain_eps: 1e-10,
            backtrack_max: 50,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        positive("rho", self.rho)?;
        positive("domain_eps", self.domain_eps)?;
        if self.inner_iters == 0 {
            return Err(invalid("inner_iters", "must be at least 1"));
        }
        if !(self.primal_tol >= 0.0) {
            return Err(invalid("primal_tol", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Hidden-node terms: `p^s = diag(P̃^s)` and `r^s = tr(R^s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenAux {
    pub p_plus: DVector<f64>,
    pub p_minus: DVector<f64>,
    pub r_plus: f64,
    pub r_minus: f64,
}

impl HiddenAux {
    pub fn zeros(b: usize) -> Self {
        Self {
            p_plus: DVector::zeros(b),
            p_minus: DVector::zeros(b),
            r_plus: 0.0,
            r_minus: 0.0,
        }
    }

    /// `2·1ᵀp^s + r^s`, the hidden-node share of the total variation.
    pub fn offset(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Positive => 2.0 * self.p_plus.sum() + self.r_plus,
            Sign::Negative => 2.0 * self.p_minus.sum() + self.r_minus,
        }
    }
}

/// ADMM iterates: primal `ℓ^s`, split copies `v^s` and duals `λ₁`, `λ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub ell_plus: EdgeVector,
    pub ell_minus: EdgeVector,
    pub v_plus: EdgeVector,
    pub v_minus: EdgeVector,
    pub lam1: DVector<f64>,
    pub lam2: DVector<f64>,
}

impl AdmmState {
    /// Both `ℓ^s` uniform on the trace hyperplane, `v` their joint
    /// complementarity projection and zero duals.
    pub fn uniform(b: usize) -> Self {
        let p = pair_count(b);
        let fill = if p > 0 { -(b as f64 / 2.0) / p as f64 } else { 0.0 };
        let ell = DVector::from_element(p, fill);
        let (v_plus, v_minus) =
            project_complementarity(&ell, &ell).expect("equal lengths by construction");
        Self {
            ell_plus: EdgeVector::new(b, ell.clone()).expect("length p"),
            ell_minus: EdgeVector::new(b, ell).expect("length p"),
            v_plus: EdgeVector::new(b, v_plus).expect("length p"),
            v_minus: EdgeVector::new(b, v_minus).expect("length p"),
            lam1: DVector::zeros(p),
            lam2: DVector::zeros(p),
        }
    }

    pub fn nodes(&self) -> usize {
        self.ell_plus.nodes()
    }
}

/// Per-iteration diagnostics of one estimator run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    /// Objective at the initial point followed by one value per outer iteration.
    pub objective: Vec<f64>,
    /// `|F(m) - F(m-1)| / |F(m-1)|` for outer iterations `m = 1, 2, ...`.
    pub error: Vec<f64>,
    /// Final `max ‖v - ℓ‖∞` of each inner ADMM solve.
    pub primal_residual: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub wall_time_ms: f64,
}

impl SolveTrace {
    pub fn outer_iterations(&self) -> usize {
        self.error.len()
    }

    fn push(&mut self, objective: f64, stats: InnerStats) {
        let prev = *self.objective.last().expect("initial objective recorded");
        self.error.push(relative_change(objective, prev));
        self.objective.push(objective);
        self.primal_residual.push(stats.primal_residual);
        self.inner_iterations.push(stats.iterations);
    }
}

fn relative_change(current: f64, previous: f64) -> f64 {
    let diff = (current - previous).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / previous.abs()
    }
}

/// Result of a successful [`sgl_hncs`] run.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub laplacians: LaplacianPair,
    pub aux: HiddenAux,
    pub trace: SolveTrace,
}

/// Solver error together with the diagnostics gathered before it.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: Error,
    pub trace: SolveTrace,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} outer iterations)",
            self.error,
            self.trace.outer_iterations()
        )
    }
}

impl std::error::Error for SolveFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for SolveFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            trace: SolveTrace::default(),
        }
    }
}

fn trace_product(c: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    c.component_mul(l).sum()
}

/// Objective value of the full problem (no barrier terms).
pub fn objective_eval(lp: &LaplacianPair, aux: &HiddenAux, cb: &DMatrix<f64>, cfg: &BcdConfig) -> f64 {
    let tv_plus = trace_product(cb, &lp.positive) + aux.offset(Sign::Positive);
    let tv_minus = trace_product(cb, &lp.negative) + aux.offset(Sign::Negative);
    tv_plus - tv_minus
        + cfg.alpha_plus * lp.positive.norm_squared()
        + cfg.alpha_minus * lp.negative.norm_squared()
        + cfg.sigma_plus * aux.p_plus.lp_norm(1)
        + cfg.sigma_minus * aux.p_minus.lp_norm(1)
}

/// Closed-form `P̃` update for fixed `L` and `R`.
///
/// With `t^s = -(trace_s + r^s)/2` the constraint reads `1ᵀp^s ≥ t^s`.
/// Per sign the objective is `±2·1ᵀp + σ‖p‖₁`; its minimizers are `p = 0` when
/// that is feasible and bounded, otherwise any same-signed vector with
/// `1ᵀp = t^s`, of which the uniform one is returned.
pub fn p_update(
    trace_plus: f64,
    trace_minus: f64,
    aux: &HiddenAux,
    cfg: &BcdConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if cfg.sigma_minus <= 2.0 {
        return Err(invalid("sigma_minus", "must exceed 2"));
    }
    let b = aux.p_plus.len();
    if b == 0 {
        return Err(invalid("aux", "empty p vector"));
    }
    let uniform = |t: f64| DVector::from_element(b, t / b as f64);

    let t_plus = -(trace_plus + aux.r_plus) / 2.0;
    let p_plus = if t_plus > 0.0 || cfg.sigma_plus < 2.0 {
        uniform(t_plus)
    } else {
        DVector::zeros(b)
    };

    let t_minus = -(trace_minus + aux.r_minus) / 2.0;
    let p_minus = if t_minus > 0.0 {
        uniform(t_minus)
    } else {
        DVector::zeros(b)
    };
    Ok((p_plus, p_minus))
}

/// Closed-form `R` update: the smallest `r^s ≥ 0` with `input_s + r^s ≥ 0`,
/// where `input_s = tr(C L^s) + 2·tr(P̃^s)`.
pub fn r_update(trace_plus_full: f64, trace_minus_full: f64) -> (f64, f64) {
    ((-trace_plus_full).max(0.0), (-trace_minus_full).max(0.0))
}

pub(crate) fn validate_covariance(cb: &DMatrix<f64>) -> Result<usize> {
    let b = ensure_symmetric(cb, 1e-10)?;
    if b < 2 {
        return Err(invalid("covariance", "need at least 2 observed nodes"));
    }
    Ok(b)
}

/// Full estimator: alternates the ADMM Laplacian update with the `P̃` and `R`
/// updates for at most `outer_iters` rounds, stopping once the relative
/// objective change falls below `outer_tol`.
pub fn sgl_hncs(
    cb: &DMatrix<f64>,
    cfg: &BcdConfig,
    admm: &AdmmConfig,
) -> std::result::Result<SolveOutput, SolveFailure> {
    cfg.validate()?;
    admm.validate()?;
    let b = validate_covariance(cb)?;
    let started = Instant::now();

    let mut state = AdmmState::uniform(b);
    let init_lp = LaplacianPair {
        positive: crate::graph::laplacian_from_edges(&state.ell_plus),
        negative: crate::graph::laplacian_from_edges(&state.ell_minus),
    };
    let mut aux = HiddenAux::zeros(b);
    let (r_plus, r_minus) = r_update(
        trace_product(cb, &init_lp.positive),
        trace_product(cb, &init_lp.negative),
    );
    aux.r_plus = r_plus;
    aux.r_minus = r_minus;

    let mut trace = SolveTrace {
        objective: vec![objective_eval(&init_lp, &aux, cb, cfg)],
        ..SolveTrace::default()
    };
    let weights = BlockWeights::from_bcd(cfg);
    let q = crate::graph::trace_form_coeffs(cb).map_err(SolveFailure::from)?;
    let mut laplacians = init_lp;

    for _ in 0..cfg.outer_iters {
        let block = LaplacianBlock::from_coeffs(
            q.clone(),
            weights,
            [aux.offset(Sign::Positive), aux.offset(Sign::Negative)],
            admm.rho,
        );
        let (lp, next_state, stats) = match block.run(state, admm) {
            Ok(out) => out,
            Err(error) => {
                trace.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
                return Err(SolveFailure { error, trace });
            }
        };
        state = next_state;
        laplacians = lp;

        let tv_plus = trace_product(cb, &laplacians.positive);
        let tv_minus = trace_product(cb, &laplacians.negative);
        let (p_plus, p_minus) = p_update(tv_plus, tv_minus, &aux, cfg)?;
        aux.p_plus = p_plus;
        aux.p_minus = p_minus;
        let (r_plus, r_minus) = r_update(
            tv_plus + 2.0 * aux.p_plus.sum(),
            tv_minus + 2.0 * aux.p_minus.sum(),
        );
        aux.r_plus = r_plus;
        aux.r_minus = r_minus;

        trace.push(objective_eval(&laplacians, &aux, cb, cfg), stats);
        if *trace.error.last().unwrap() < cfg.outer_tol {
            break;
        }
    }
    trace.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(SolveOutput {
        laplacians,
        aux,
        trace,
    })
}
